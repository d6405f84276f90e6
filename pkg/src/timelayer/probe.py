"""A logistic-regression probe measuring what one TIME frame reveals.

Features are the first output frame of the TIME layer, converted to luma,
shrunk to ``probe_size x probe_size`` and flattened. The probe is trained by
full-batch gradient descent on L2-regularised cross-entropy::

    loss(w, b) = mean(log(1 + exp(z)) - y z) + l2 / 2 * |w|^2,   z = X w + b

with the bias left unregularised.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import parallel_map, resize_bilinear, to_grayscale
from .io import read_archive, read_video_dir, write_archive
from .transform import TimeConfig, time_transform


@dataclass(frozen=True)
class ProbeConfig:
    lr: float = 0.5
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0
    init_scale: float = 0.01


@dataclass
class ProbeModel:
    weights: np.ndarray
    bias: float
    config: ProbeConfig
    classes: tuple[str, str] = ("0", "1")
    loss_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision(self, features) -> np.ndarray:
        X = _as_matrix(features)
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict_proba(self, features) -> np.ndarray:
        return sigmoid(self.decision(features))

    def predict(self, features) -> np.ndarray:
        return (self.predict_proba(features) >= 0.5).astype(np.int64)

    def save(self, path) -> None:
        meta = {"config": asdict(self.config), "classes": list(self.classes)}
        write_archive({
            "weights": self.weights.astype(np.float32),
            "bias": np.array([self.bias], dtype=np.float32),
            "config": np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        }, path)

    @classmethod
    def load(cls, path) -> "ProbeModel":
        tensors = read_archive(path)
        meta = json.loads(tensors["config"].tobytes().decode("utf-8"))
        return cls(tensors["weights"].astype(np.float64), float(tensors["bias"][0]),
                   ProbeConfig(**meta["config"]), tuple(meta["classes"]))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, -z))


def _as_matrix(features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"features must be a 2-D matrix, got shape {X.shape}")
    return X


def featurize(video, config: TimeConfig, probe_size: int = 32) -> np.ndarray:
    frame = time_transform(video, config, threads=1)[0]
    small = resize_bilinear(to_grayscale(frame), probe_size, probe_size)
    return small.reshape(-1).astype(np.float64)


def featurize_many(videos, config: TimeConfig, probe_size: int = 32,
                   threads: int | None = None) -> np.ndarray:
    rows = parallel_map(lambda v: featurize(v, config, probe_size), list(videos), threads=threads)
    return np.stack(rows)


def loss_and_grad(weights, bias, features, labels, l2: float):
    """Regularised mean cross-entropy and its gradient ``(dloss/dw, dloss/db)``."""
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.float64)
    z = X @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(weights, weights))
    resid = sigmoid(z) - y
    grad_w = X.T @ resid / len(y) + l2 * weights
    grad_b = float(resid.mean())
    return loss, grad_w, grad_b


def train(features, labels, config: ProbeConfig = ProbeConfig(),
          classes: tuple[str, str] = ("0", "1")) -> ProbeModel:
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) != len(X):
        raise ValueError(f"{len(X)} feature rows but {len(y)} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    counts = np.bincount(y, minlength=2)
    if counts.min() < 1:
        raise ValueError(f"training data holds a single class (counts {counts.tolist()})")
    rng = np.random.default_rng(config.seed)
    w = rng.normal(0.0, config.init_scale, size=X.shape[1])
    b = 0.0
    history = []
    for _ in range(config.epochs):
        loss, gw, gb = loss_and_grad(w, b, X, y, config.l2)
        history.append(loss)
        w = w - config.lr * gw
        b = b - config.lr * gb
    history.append(loss_and_grad(w, b, X, y, config.l2)[0])
    return ProbeModel(w, b, config, tuple(classes), history)


def evaluate(model: ProbeModel, features, labels) -> tuple[float, dict[int, float]]:
    """Top-1 accuracy and per-class accuracy (classes absent from ``labels`` are skipped)."""
    y = np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot evaluate on an empty set")
    hits = model.predict(features) == y
    per_class = {int(c): float(hits[y == c].mean()) for c in (0, 1) if np.any(y == c)}
    return float(hits.mean()), per_class


def split_indices(n: int, seed: int, test_fraction: float = 0.2, groups=None):
    """Seeded train/test split; samples sharing a group land on the same side."""
    groups = np.arange(n) if groups is None else np.asarray(groups)
    unique = np.unique(groups)
    order = np.random.default_rng(seed).permutation(len(unique))
    n_test = int(round(test_fraction * len(unique)))
    test_groups = unique[order[:n_test]]
    is_test = np.isin(groups, test_groups)
    return np.flatnonzero(~is_test), np.flatnonzero(is_test)


@dataclass
class LabeledVideos:
    videos: list
    labels: np.ndarray
    classes: tuple[str, str]
    groups: np.ndarray | None
    names: list[str]


def load_labeled_videos(data_dir, labels_csv=None, threads: int | None = None) -> LabeledVideos:
    """Read ``labels.csv`` (``filename,label[,group]``) and the frame directories it names.

    Labels are mapped to 0/1 by sorted class name; exactly two classes are
    required.
    """
    data_dir = Path(data_dir)
    labels_csv = Path(labels_csv) if labels_csv is not None else data_dir / "labels.csv"
    with labels_csv.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{labels_csv}: no samples listed")
    for key in ("filename", "label"):
        if key not in rows[0]:
            raise ValueError(f"{labels_csv}: missing column {key!r}")
    classes = tuple(sorted({r["label"] for r in rows}))
    if len(classes) != 2:
        raise ValueError(f"{labels_csv}: expected exactly two classes, got {list(classes)}")
    labels = np.array([classes.index(r["label"]) for r in rows], dtype=np.int64)
    groups = None
    if "group" in rows[0] and all(r.get("group") not in (None, "") for r in rows):
        groups = np.array([r["group"] for r in rows])
    names = [r["filename"] for r in rows]
    videos = parallel_map(lambda name: read_video_dir(data_dir / name), names, threads=threads)
    return LabeledVideos(videos, labels, classes, groups, names)


def run_probe(data: LabeledVideos, time_config: TimeConfig, probe_size: int = 32,
              config: ProbeConfig = ProbeConfig(), split_seed: int | None = None,
              threads: int | None = None):
    """Featurize, split 80/20, train and evaluate; returns ``(model, summary dict)``."""
    X = featurize_many(data.videos, time_config, probe_size, threads=threads)
    seed = config.seed if split_seed is None else split_seed
    train_idx, test_idx = split_indices(len(X), seed, groups=data.groups)
    model = train(X[train_idx], data.labels[train_idx], config, data.classes)
    train_acc, _ = evaluate(model, X[train_idx], data.labels[train_idx])
    test_acc, per_class = evaluate(model, X[test_idx], data.labels[test_idx])
    summary = {
        "n": time_config.n,
        "arrangement": time_config.arrangement.value,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "per_class_test_accuracy": {data.classes[k]: v for k, v in per_class.items()},
        "train_samples": int(len(train_idx)),
        "test_samples": int(len(test_idx)),
        "final_loss": model.loss_history[-1],
    }
    return model, summary
