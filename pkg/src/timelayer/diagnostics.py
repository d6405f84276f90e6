"""Per-layer weight similarity between checkpoints, and the N / arrangement sweep."""
from __future__ import annotations

import csv
import io as _stringio
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import parallel_map
from .io import read_archive
from .probe import LabeledVideos, ProbeConfig, load_labeled_videos, run_probe
from .transform import Arrangement, TimeConfig


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two tensors, flattened, accumulated in float64.

    Zero tensors have no direction: two zero tensors score 1, one zero tensor
    against a nonzero one scores 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("cosine similarity of empty tensors is undefined")
    a, b = a.ravel(), b.ravel()
    # rescale first so that huge or tiny magnitudes do not overflow the norms
    sa, sb = np.abs(a).max(), np.abs(b).max()
    if sa == 0 or sb == 0:
        return 1.0 if sa == sb else 0.0
    a, b = a / sa, b / sb
    sim = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return min(1.0, max(-1.0, sim))


@dataclass
class SimilarityReport:
    rows: list[tuple[str, float, int]] = field(default_factory=list)
    unmatched_a: list[str] = field(default_factory=list)
    unmatched_b: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = _stringio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layer", "cosine_similarity", "elements"])
        for name, sim, count in self.rows:
            writer.writerow([name, f"{sim:.6f}", count])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


def _shape_note(name: str, a: np.ndarray, b: np.ndarray) -> str:
    return f"{name} (shape {list(a.shape)} vs {list(b.shape)})"


def compare_checkpoints(archive_a, archive_b, threads: int | None = None) -> SimilarityReport:
    """Cosine similarity of every same-named, same-shaped tensor, in ``archive_a`` order.

    Archives may be given as paths or as name -> array mappings. Names present
    in only one archive, or present in both with different shapes, go to the
    unmatched lists (the latter with a shape note).
    """
    a = archive_a if isinstance(archive_a, Mapping) else read_archive(archive_a)
    b = archive_b if isinstance(archive_b, Mapping) else read_archive(archive_b)
    report = SimilarityReport()
    common = []
    for name, ta in a.items():
        if name not in b:
            report.unmatched_a.append(name)
        elif np.shape(ta) != np.shape(b[name]):
            note = _shape_note(name, np.asarray(ta), np.asarray(b[name]))
            report.unmatched_a.append(note)
            report.unmatched_b.append(note)
        else:
            common.append(name)
    report.unmatched_b.extend(name for name in b if name not in a)
    sims = parallel_map(lambda name: cosine_similarity(a[name], b[name]), common, threads=threads)
    report.rows = [(name, sim, int(np.size(a[name]))) for name, sim in zip(common, sims)]
    return report


@dataclass(frozen=True)
class SweepConfig:
    t_star: int = 16
    out_h: int | None = None   # None: source frame height
    out_w: int | None = None
    probe_size: int = 32
    probe: ProbeConfig = ProbeConfig()


def sweep_cells(n_values: Iterable[int], arrangements: Iterable) -> list[tuple[int, Arrangement]]:
    """Deduplicated ``(n, arrangement)`` pairs in sorted order."""
    cells = {(int(n), Arrangement(a)) for n in n_values for a in arrangements}
    if not cells:
        raise ValueError("sweep needs at least one n value and one arrangement")
    return sorted(cells, key=lambda c: (c[0], c[1].value))


def sweep(dataset, n_values, arrangements, config: SweepConfig = SweepConfig(),
          labels_csv=None, threads: int | None = None) -> list[dict]:
    """Probe accuracy for every ``(n, arrangement)`` pair; one row dict per pair."""
    data = dataset if isinstance(dataset, LabeledVideos) else load_labeled_videos(
        dataset, labels_csv, threads=threads)
    _, h, w, _ = data.videos[0].shape
    rows = []
    for n, arrangement in sweep_cells(n_values, arrangements):
        tc = TimeConfig(n=n, t_star=config.t_star, out_h=config.out_h or h,
                        out_w=config.out_w or w, arrangement=arrangement)
        _, summary = run_probe(data, tc, config.probe_size, config.probe, threads=threads)
        rows.append({"n": n, "arrangement": arrangement.value, "accuracy": summary["test_accuracy"]})
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = _stringio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "arrangement", "accuracy"])
    for r in rows:
        writer.writerow([r["n"], r["arrangement"], f"{r['accuracy']:.6f}"])
    return buf.getvalue()
