import numpy as np
import pytest
from scipy import ndimage

from amod.augment import (NO_AUGMENT, AugmentConfig, augment_track, color_transform,
                          equal_color_jitter, pad_square, per_frame_perturb, perturb_frame,
                          remove_black_borders, sequence_augment)
from amod.trackio import Track


def _random_track(rng, label=1, L=16, size=112):
    return Track(rng.random((L, size, size, 3), dtype=np.float32), label, "x")


def test_sequence_augment_copies_one_frame(rng):
    t = _random_track(rng)
    out = sequence_augment(t, np.random.default_rng(0))
    i = int(np.random.default_rng(0).integers(16))
    assert out.label == 0 and len(out) == 16
    np.testing.assert_array_equal(out.frames, np.repeat(t.frames[i:i + 1], 16, axis=0))
    again = sequence_augment(out, rng)
    np.testing.assert_array_equal(again.frames, out.frames)
    fake = sequence_augment(t.replace(label=0), rng)
    assert fake.label == 0


def test_sequence_augment_frequency():
    # binomial 3-sigma band around sa_probability, measured through augment_track
    cfg = AugmentConfig(target_size=8)
    base = np.random.default_rng(0).random((4, 8, 8, 3), dtype=np.float32)
    t = Track(base, 1, "r")
    n = 600
    hits = sum(augment_track(t, np.random.default_rng(k), cfg).label == 0 for k in range(n))
    sigma = np.sqrt(n * cfg.sa_probability * (1 - cfg.sa_probability))
    assert abs(hits - n * cfg.sa_probability) <= 3 * sigma


def test_remove_black_borders():
    f = np.zeros((112, 112, 3), np.float32)
    f[10:91, 20:101] = 0.5
    assert remove_black_borders(f).shape == (81, 81, 3)
    g = np.full((20, 30, 3), 0.3, np.float32)
    assert remove_black_borders(g).shape == g.shape
    z = np.zeros((20, 30, 3), np.float32)
    assert remove_black_borders(z) is z


def test_pad_square_rectangular():
    f = np.ones((81, 108, 3), np.float32)
    out = pad_square(f, 112)
    assert out.shape == (112, 112, 3)
    np.testing.assert_array_equal(out[:14], 0)
    np.testing.assert_array_equal(out[-14:], 0)
    np.testing.assert_allclose(out[14:98], 1.0)


def test_pad_square_identity_and_downscale():
    rng = np.random.default_rng(0)
    f = rng.random((112, 112, 3)).astype(np.float32)
    np.testing.assert_array_equal(pad_square(f, 112), f)
    big = np.ones((224, 224, 3), np.float32)
    out = pad_square(big, 112)
    assert out.shape == (112, 112, 3)
    np.testing.assert_allclose(out, 1.0)
    with pytest.raises(ValueError):
        pad_square(np.ones((600, 10, 3)), 112)


def test_equal_color_jitter_same_transform(rng):
    base = rng.random((1, 8, 8, 3), dtype=np.float32)
    t = Track(np.repeat(base, 5, axis=0), 1, "c")
    out = equal_color_jitter(t, rng)
    for k in range(1, 5):
        np.testing.assert_array_equal(out.frames[k], out.frames[0])
    ident = color_transform(t.frames, (1, 1, 1), (0, 0, 0))
    np.testing.assert_array_equal(ident, t.frames)
    assert color_transform(np.array([0.9], np.float32), 1.4, 0.0)[0] == 1.0
    with pytest.raises(ValueError):
        equal_color_jitter(Track(np.zeros((2, 4, 4, 1)), 1), rng)


def test_equal_color_jitter_commutes_with_reordering(rng):
    t = _random_track(rng, L=6, size=8)
    perm = np.array([3, 1, 5, 0, 2, 4])
    a = equal_color_jitter(t, np.random.default_rng(5)).frames[perm]
    b = equal_color_jitter(t.replace(frames=t.frames[perm]), np.random.default_rng(5)).frames
    np.testing.assert_array_equal(a, b)


def test_per_frame_identity_when_zero(rng):
    f = rng.random((112, 112, 3), dtype=np.float32)
    np.testing.assert_array_equal(per_frame_perturb(f, rng, NO_AUGMENT), f)


def test_shift_moves_impulse():
    f = np.zeros((112, 112, 3), np.float32)
    f[56, 56] = 1.0
    out = perturb_frame(f, dx=3, dy=0)
    assert out[56, 59, 0] == 1.0 and out.sum() == 3.0


def test_rotation_roundtrip_smooth_image():
    rng = np.random.default_rng(3)
    f = ndimage.gaussian_filter(rng.random((112, 112, 3)), (6, 6, 0))
    f = ((f - f.min()) / (f.max() - f.min())).astype(np.float32)
    back = perturb_frame(perturb_frame(f, angle=5.0), angle=-5.0)
    assert np.abs(back - f)[20:92, 20:92].max() < 0.05


def test_augment_without_perturbation_keeps_still_track(rng):
    t = sequence_augment(_random_track(rng, size=112), rng)
    cfg = AugmentConfig(sa_probability=0.0, per_frame_rotation_deg=0.0, per_frame_shift_px=0,
                        per_frame_gain=0.0, per_frame_bias=0.0)
    out = augment_track(t, rng, cfg)
    assert out.frames.shape == (16, 112, 112, 3)
    assert np.all(out.frames == out.frames[0])


def test_augment_track_deterministic(rng):
    t = _random_track(rng, size=112)
    a = augment_track(t, np.random.default_rng(9))
    b = augment_track(t, np.random.default_rng(9))
    np.testing.assert_array_equal(a.frames, b.frames)
    assert a.label == b.label


def test_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(sa_probability=1.5)
    with pytest.raises(ValueError):
        AugmentConfig(per_frame_shift_px=-1)
