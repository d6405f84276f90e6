import numpy as np
import pytest

from oracles import central_difference, logistic_loss
from timelayer.core import resize_bilinear
from timelayer.probe import (ProbeConfig, ProbeModel, evaluate, featurize, featurize_many, load_labeled_videos,
                             loss_and_grad, run_probe, split_indices, train)
from timelayer.synth import generate_direction_dataset, write_dataset
from timelayer.transform import TimeConfig


def max_relative_error(a, b, floor=1e-8):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((12, 6))
    y = rng.integers(0, 2, 12)
    w = rng.normal(0, 1, 6)
    b = float(rng.normal())
    l2 = 0.3
    loss, gw, gb = loss_and_grad(w, b, X, y, l2)
    assert loss == pytest.approx(logistic_loss(w, b, X, y, l2), rel=1e-12)
    num_w = central_difference(lambda v: logistic_loss(v, b, X, y, l2), w)
    num_b = central_difference(lambda v: logistic_loss(w, v[0], X, y, l2), np.array([b]))
    assert max_relative_error(gw, num_w) < 1e-5
    assert max_relative_error([gb], num_b) < 1e-5


def test_l2_term_gradient_alone():
    rng = np.random.default_rng(11)
    w = rng.normal(0, 1, 4)
    X = np.zeros((3, 4))
    y = np.array([0, 1, 1])
    _, gw, _ = loss_and_grad(w, 0.0, X, y, 2.0)
    np.testing.assert_allclose(gw, 2.0 * w)


def test_separable_two_points():
    model = train([[0.0], [1.0]], [0, 1], ProbeConfig(lr=1.0, epochs=300))
    assert evaluate(model, [[0.0], [1.0]], [0, 1])[0] == 1.0


def test_no_signal_gives_class_prior():
    X = np.ones((30, 5))
    y = np.array([1] * 20 + [0] * 10)
    model = train(X, y)
    acc, per_class = evaluate(model, X, y)
    assert acc == pytest.approx(20 / 30)
    assert per_class == {0: 0.0, 1: 1.0}


def test_single_class_rejected():
    with pytest.raises(ValueError):
        train(np.zeros((4, 2)), [1, 1, 1, 1])
    with pytest.raises(ValueError):
        train(np.zeros((4, 2)), [0, 1, 2, 1])


def test_evaluate_perfect_inverted_and_empty():
    model = ProbeModel(np.array([1.0]), -0.5, ProbeConfig())
    X = np.array([[0.0], [1.0], [0.2], [0.9]])
    y = np.array([0, 1, 0, 1])
    assert evaluate(model, X, y)[0] == 1.0
    assert evaluate(model, X, 1 - y)[0] == 0.0
    with pytest.raises(ValueError):
        evaluate(model, np.zeros((0, 1)), [])


def test_coin_flip_features_on_paired_data_score_half():
    rng = np.random.default_rng(0)
    pair_features = rng.random((50, 8))
    X = np.repeat(pair_features, 2, axis=0)
    y = np.tile([1, 0], 50)
    for seed in range(3):
        model = ProbeModel(rng.normal(size=8), float(rng.normal()), ProbeConfig(seed=seed))
        assert evaluate(model, X, y)[0] == 0.5


def test_first_step_is_scale_covariant():
    rng = np.random.default_rng(5)
    X = rng.random((20, 7))
    y = rng.integers(0, 2, 20)
    y[:2] = [0, 1]
    c = 4.0
    base = train(X, y, ProbeConfig(lr=0.2, epochs=1, l2=0.0, init_scale=0.0))
    scaled = train(X * c, y, ProbeConfig(lr=0.2 / c, epochs=1, l2=0.0, init_scale=0.0))
    np.testing.assert_allclose(scaled.weights, base.weights, rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(scaled.predict(X * c), base.predict(X))


def test_training_is_deterministic_and_monotone():
    rng = np.random.default_rng(2)
    X = rng.random((40, 10))
    y = (X[:, 0] > 0.5).astype(int)
    a = train(X, y, ProbeConfig(seed=3))
    b = train(X, y, ProbeConfig(seed=3))
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    assert np.all(np.diff(a.loss_history) <= 0)


def test_featurize_examples():
    black = np.zeros((10, 12, 12, 3), dtype=np.float32)
    f = featurize(black, TimeConfig(n=2, t_star=4, out_h=12, out_w=12), probe_size=6)
    assert f.shape == (36,) and not f.any()

    video = np.random.default_rng(1).random((9, 8, 8, 1), dtype=np.float32)
    f1 = featurize(video, TimeConfig(n=1, t_star=3, out_h=8, out_w=8), probe_size=4)
    np.testing.assert_array_equal(f1, resize_bilinear(video[0], 4, 4).ravel())

    eight = (np.arange(1, 9, dtype=np.float32) / 8).reshape(8, 1, 1, 1)
    f2 = featurize(eight, TimeConfig(n=2, t_star=2, out_h=2, out_w=2), probe_size=2)
    np.testing.assert_allclose(f2 * 8, [1, 3, 5, 7], atol=1e-6)
    assert len(np.unique(f2)) == 4


def test_split_keeps_groups_together():
    groups = np.repeat(np.arange(50), 2)
    train_idx, test_idx = split_indices(100, seed=1, groups=groups)
    assert len(test_idx) == 20 and len(train_idx) == 80
    assert not set(groups[train_idx]) & set(groups[test_idx])
    again = split_indices(100, seed=1, groups=groups)
    assert np.array_equal(again[1], test_idx)
    plain = split_indices(10, seed=0)
    assert sorted(np.concatenate(plain).tolist()) == list(range(10)) and len(plain[1]) == 2


def test_save_load_round_trip(tmp_path):
    model = ProbeModel(np.array([0.25, -1.5, 3.0]), 0.75, ProbeConfig(lr=0.3, epochs=5, seed=9),
                       ("left_to_right", "right_to_left"))
    model.save(tmp_path / "m.nta")
    back = ProbeModel.load(tmp_path / "m.nta")
    np.testing.assert_array_equal(back.weights, model.weights)
    assert back.bias == model.bias and back.config == model.config and back.classes == model.classes


def test_run_probe_end_to_end(tmp_path):
    write_dataset(generate_direction_dataset(60, 32, 8, seed=5), tmp_path)
    data = load_labeled_videos(tmp_path)
    assert data.classes == ("left_to_right", "right_to_left")
    assert data.groups is not None and len(data.videos) == 60
    cfg = TimeConfig(n=1, t_star=4, out_h=32, out_w=32)
    _, s1 = run_probe(data, cfg, probe_size=16)
    _, s2 = run_probe(data, cfg, probe_size=16)
    assert s1 == s2
    assert s1["test_accuracy"] == 0.5


def test_loss_monotone_on_default_task():
    samples = generate_direction_dataset(2000, 64, 32, seed=42)
    cfg = TimeConfig(n=2, t_star=16, out_h=64, out_w=64)
    X = featurize_many([s.video for s in samples], cfg, 32)
    y = np.array([0 if s.label.value == "left_to_right" else 1 for s in samples])
    for probe in (ProbeConfig(lr=0.1, epochs=200), ProbeConfig()):
        history = np.array(train(X, y, probe).loss_history)
        assert len(history) == probe.epochs + 1
        assert np.all(np.diff(history) <= 0)
        assert history[-1] < history[0]
