import numpy as np
import pytest

from timelayer.io import read_video_dir
from timelayer.synth import Direction, generate_direction_dataset, render_square_track, write_dataset


@pytest.fixture(scope="module")
def dataset():
    return generate_direction_dataset(40, frame_size=32, t_frames=12, seed=7)


def test_balanced_labels():
    ds = generate_direction_dataset(10, 16, 8, seed=0)
    labels = [s.label for s in ds]
    assert labels.count(Direction.LEFT_TO_RIGHT) == 5
    assert labels.count(Direction.RIGHT_TO_LEFT) == 5
    odd = generate_direction_dataset(7, 16, 8, seed=0)
    counts = [s.label for s in odd]
    assert abs(counts.count(Direction.LEFT_TO_RIGHT) - counts.count(Direction.RIGHT_TO_LEFT)) <= 1


def test_square_stays_inside(dataset):
    for s in dataset:
        xs = s.positions()
        assert xs.min() >= 0
        assert xs.max() + s.params.square <= s.params.frame_size
        assert s.params.row + s.params.square <= s.params.frame_size
        # whole square is drawn in every frame
        np.testing.assert_allclose(s.video.sum(axis=(1, 2, 3)), s.params.square ** 2, atol=1e-4)


def test_direction_of_motion(dataset):
    cols = np.arange(32)
    for s in dataset:
        mass = s.video[:, :, :, 0].sum(axis=1)
        centroid = (mass * cols).sum(axis=1) / mass.sum(axis=1)
        step = np.diff(centroid)
        assert np.all(step * s.label.sign > 0)


def test_reversal_gives_opposite_trajectory(dataset):
    for s in dataset:
        reversed_video = s.video[::-1]
        xs = s.positions()[::-1]
        end = s.params.start_x + s.label.sign * s.params.speed * (s.params.t_frames - 1)
        expected_xs = end - s.label.sign * s.params.speed * np.arange(s.params.t_frames)
        np.testing.assert_allclose(xs, expected_xs, atol=1e-9)
        assert 0 <= expected_xs.min() and expected_xs.max() + s.params.square <= s.params.frame_size
        redrawn = render_square_track(s.params.frame_size, s.params.square, s.params.row, expected_xs)
        np.testing.assert_allclose(reversed_video, redrawn, atol=1e-5)


def test_twins_share_first_frame(dataset):
    for a, b in zip(dataset[0::2], dataset[1::2]):
        assert a.params == b.params
        assert a.label is Direction.LEFT_TO_RIGHT and b.label is Direction.RIGHT_TO_LEFT
        assert np.array_equal(a.video[0], b.video[0])
        # mirror pairing: displacements are exact negatives at every step
        np.testing.assert_allclose(a.positions() - a.params.start_x,
                                   -(b.positions() - b.params.start_x), atol=1e-12)


def test_first_frame_distribution_identical_across_classes(dataset):
    ltr = sorted(s.positions()[0] for s in dataset if s.label is Direction.LEFT_TO_RIGHT)
    rtl = sorted(s.positions()[0] for s in dataset if s.label is Direction.RIGHT_TO_LEFT)
    assert ltr == rtl


def test_seed_determinism():
    a = generate_direction_dataset(6, 16, 8, seed=3)
    b = generate_direction_dataset(6, 16, 8, seed=3)
    c = generate_direction_dataset(6, 16, 8, seed=4)
    assert all(np.array_equal(x.video, y.video) and x.params == y.params for x, y in zip(a, b))
    assert any(x.params != y.params for x, y in zip(a, c))


def test_preconditions():
    with pytest.raises(ValueError):
        generate_direction_dataset(4, 15, 8)
    with pytest.raises(ValueError):
        generate_direction_dataset(4, 16, 7)


def test_write_dataset(tmp_path):
    ds = generate_direction_dataset(4, 16, 8, seed=1)
    labels = write_dataset(ds, tmp_path)
    lines = labels.read_text().splitlines()
    assert lines[0] == "filename,label,group"
    assert lines[1:] == ["sample_00000,left_to_right,0", "sample_00001,right_to_left,0",
                         "sample_00002,left_to_right,1", "sample_00003,right_to_left,1"]
    back = read_video_dir(tmp_path / "sample_00002")
    assert back.shape == (8, 16, 16, 1)
    assert np.abs(back - ds[2].video).max() <= 1 / 510 + 1e-7
