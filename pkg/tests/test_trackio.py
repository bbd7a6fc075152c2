import numpy as np
import pytest
from PIL import Image

from amod.trackio import (DataError, ProtocolSplit, SynthConfig, Track, generate_synthetic,
                          load_protocol, load_split, load_track, materialize, save_track,
                          select_uniform, uniform_indices, write_protocol)


def _track(T, size=8, label=1):
    frames = np.arange(T, dtype=np.float32)[:, None, None, None] * np.ones((1, size, size, 3), np.float32)
    return Track(frames / max(T, 1), label, "t")


def test_uniform_indices_every_third():
    np.testing.assert_array_equal(uniform_indices(48, 16), np.arange(0, 48, 3))


def test_uniform_indices_identity_and_floor():
    np.testing.assert_array_equal(uniform_indices(16, 16), np.arange(16))
    np.testing.assert_array_equal(uniform_indices(20, 16),
                                  [0, 1, 2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 15, 16, 17, 18])


def test_short_track_repeats_frames():
    idx = uniform_indices(5, 16)
    assert idx.max() == 4 and np.all(np.diff(idx) >= 0)


def test_uniform_indices_rejects_small_L():
    with pytest.raises(ValueError):
        uniform_indices(10, 1)


def test_select_uniform_idempotent_and_ordered():
    t = _track(48)
    once = select_uniform(t, 16)
    twice = select_uniform(once, 16)
    np.testing.assert_array_equal(once.frames, twice.frames)
    assert once.label == t.label and once.id == t.id
    means = once.frames.mean(axis=(1, 2, 3))
    assert np.all(np.diff(means) > 0)


def test_track_validation():
    with pytest.raises(ValueError):
        Track(np.zeros((2, 4, 4, 3)), 2)
    with pytest.raises(ValueError):
        Track(np.zeros((4, 4)), 1)


def test_protocol_roundtrip(tmp_path):
    entries = [("real/001", 1), ("fake/002", 0)]
    write_protocol(tmp_path / "l.txt", entries)
    assert load_protocol(tmp_path / "l.txt") == entries


def test_protocol_empty_comments_and_errors(tmp_path):
    (tmp_path / "e.txt").write_text("")
    assert load_protocol(tmp_path / "e.txt") == []
    (tmp_path / "c.txt").write_text("# header\n\nreal/001 1\n")
    assert load_protocol(tmp_path / "c.txt") == [("real/001", 1)]
    (tmp_path / "b.txt").write_text("real/001 2\n")
    with pytest.raises(DataError, match=":1:"):
        load_protocol(tmp_path / "b.txt")
    (tmp_path / "m.txt").write_text("ok 1\nbroken\n")
    with pytest.raises(DataError, match=":2:"):
        load_protocol(tmp_path / "m.txt")


def test_load_track_roundtrip_and_numeric_order(tmp_path):
    t = _track(12)
    save_track(t, tmp_path / "a")
    loaded = load_track(tmp_path / "a", 1)
    assert len(loaded) == 12
    np.testing.assert_allclose(loaded.frames, np.round(t.frames * 255) / 255, atol=1e-7)
    # 0010 must sort after 0009
    assert loaded.frames[9].mean() > loaded.frames[8].mean()


def test_load_track_ppm(tmp_path):
    d = tmp_path / "p"
    d.mkdir()
    for i in range(3):
        Image.fromarray(np.full((4, 5, 3), 10 * i, np.uint8)).save(d / f"{i + 1:04d}.ppm")
    t = load_track(d, 0)
    assert t.frames.shape == (3, 4, 5, 3)
    assert t.frames[2, 0, 0, 0] == np.float32(20 / 255)


def test_load_track_errors(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_track(tmp_path / "missing", 1)
    d = tmp_path / "one"
    d.mkdir()
    Image.fromarray(np.zeros((4, 4, 3), np.uint8)).save(d / "0001.png")
    with pytest.raises(DataError, match="too few frames"):
        load_track(d, 1)
    Image.fromarray(np.zeros((6, 6, 3), np.uint8)).save(d / "0002.png")
    with pytest.raises(DataError, match="inconsistent dimensions"):
        load_track(d, 1)
    (d / "0002.png").write_bytes(b"not a png")
    with pytest.raises(DataError, match="cannot decode"):
        load_track(d, 1)


def test_split_disjoint():
    t = _track(4)
    with pytest.raises(ValueError):
        ProtocolSplit([t], [t], [], 1)


def test_synthetic_deterministic_and_shaped():
    cfg = SynthConfig(n_real=8, n_fake=8, frames_per_track=16, image_size=112)
    a = generate_synthetic(cfg, seed=7)
    b = generate_synthetic(cfg, seed=7)
    for pa, pb in zip((a.train, a.dev, a.test), (b.train, b.dev, b.test)):
        for ta, tb in zip(pa, pb):
            assert ta.id == tb.id and ta.label == tb.label
            np.testing.assert_array_equal(ta.frames, tb.frames)
    assert [len(a.train), len(a.dev), len(a.test)] == [8, 4, 4]
    for part in (a.dev, a.test):
        assert {t.label for t in part} == {0, 1}
    assert a.train[0].frames.shape == (16, 112, 112, 3)


def test_synthetic_real_moves_print_static():
    cfg = SynthConfig(n_real=4, n_fake=4, frames_per_track=16, noise_sigma=0.01)
    s = generate_synthetic(cfg, seed=7)
    real = next(t for t in s.train if t.label == 1)
    fake = next(t for t in s.train if t.id.startswith("print"))
    assert np.abs(real.frames[0] - real.frames[15]).max() > 0.2
    # print-like: frames agree up to the pixel noise
    assert np.abs(fake.frames - fake.frames[0]).std() < 2 * cfg.noise_sigma


def test_synthetic_needs_both_labels():
    with pytest.raises(ValueError, match="train set must contain both labels"):
        generate_synthetic(SynthConfig(n_real=0))


def test_materialize_and_load_split(tmp_path, small_split):
    materialize(small_split, tmp_path)
    tracks = load_split(tmp_path / "test.txt")
    assert [t.id for t in tracks] == [t.id for t in small_split.test]
    np.testing.assert_array_equal(tracks[0].frames, small_split.test[0].frames)
