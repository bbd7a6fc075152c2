import numpy as np
import pytest

from amod.augment import preprocess
from amod.modality import (ModalityBundle, ModalityConfig, make_bundle, normalize_channels,
                           rank_pool, rank_pool_solutions, raw_pair_concat, read_bundle,
                           time_varying_mean, write_bundle)
from amod.trackio import Track, select_uniform


def _still_track(rng, label=0):
    frame = rng.random((1, 112, 112, 3), dtype=np.float32)
    return Track(np.repeat(frame, 16, axis=0), label, "still")


@pytest.fixture(scope="module")
def real16(small_split):
    t = next(t for t in small_split.train if t.label == 1)
    return preprocess(select_uniform(t, 16))


@pytest.fixture(scope="module")
def print16(small_split):
    t = next(t for t in small_split.train if t.id.startswith("print"))
    return preprocess(select_uniform(t, 16))


def test_tvm_examples():
    x = np.ones((4, 2, 2, 1)) * 0.3
    np.testing.assert_array_equal(time_varying_mean(x).vectors, x.reshape(4, -1))
    two = np.array([0.0, 1.0]).reshape(2, 1, 1, 1)
    np.testing.assert_array_equal(time_varying_mean(two).vectors[:, 0], [0.0, 0.5])
    rng = np.random.default_rng(0)
    r = rng.random((16, 3, 3, 3))
    fs = time_varying_mean(r)
    np.testing.assert_allclose(fs.vectors[-1], r.transpose(0, 3, 1, 2).reshape(16, -1).mean(0))
    assert fs.targets.sum() == 0


def test_still_track_gives_mid_gray(rng):
    t = _still_track(rng)
    for C in (1000.0, 1.0):
        img = rank_pool(t, C)
        assert img.shape == (3, 112, 112)
        assert np.all(img == 0.5)


def test_normalize_channels():
    x = np.stack([np.full((2, 2), 3.0), np.array([[0.0, 1.0], [2.0, 4.0]])])
    out = normalize_channels(x)
    assert np.all(out[0] == 0.5)
    np.testing.assert_allclose(out[1], [[0, 0.25], [0.5, 1.0]])


def test_reversal_antisymmetry_without_tvm():
    rng = np.random.default_rng(4)
    for _ in range(3):
        frames = rng.random((16, 112, 112, 3), dtype=np.float32)
        fwd = rank_pool_solutions(frames, [1000.0], tvm=False)[0]
        rev = rank_pool_solutions(frames[::-1], [1000.0], tvm=False)[0]
        assert np.linalg.norm(fwd.u + rev.u) <= 1e-4 * np.linalg.norm(fwd.u)


def test_moving_track_rank_pool_depends_on_C(real16):
    a = rank_pool(real16, 1000.0)
    b = rank_pool(real16, 1.0)
    assert a.std() > 0 and b.std() > 0
    assert np.linalg.norm(a - b) > 0
    assert a.min() >= 0 and a.max() <= 1


def test_bundle_shapes_and_purity(real16):
    b1 = make_bundle(real16)
    b2 = make_bundle(real16)
    shapes = [v.shape for v in b1.tensors().values()]
    assert shapes == [(3, 112, 112), (3, 112, 112), (2, 112, 112), (2, 112, 112)]
    for k, v in b1.tensors().items():
        np.testing.assert_array_equal(v, b2.tensors()[k])
        assert v.dtype == np.float32 and np.all(np.isfinite(v))
    assert np.abs(b1.flow_far).mean() > np.abs(b1.flow_near).mean()


def test_static_fake_has_little_flow(print16):
    b = make_bundle(print16)
    assert np.abs(b.flow_far).mean() < 0.02 and np.abs(b.flow_near).mean() < 0.02


def test_raw_pair(real16, rng):
    p = raw_pair_concat(real16)
    assert p.shape == (6, 112, 112)
    assert np.abs(p[:3] - p[3:]).max() > 0
    s = raw_pair_concat(_still_track(rng))
    np.testing.assert_array_equal(s[:3], s[3:])


def test_shape_errors(rng):
    bad = Track(rng.random((15, 112, 112, 3)), 1, "b")
    with pytest.raises(ValueError):
        rank_pool(bad, 1.0)
    with pytest.raises(ValueError):
        make_bundle(bad)
    with pytest.raises(ValueError):
        raw_pair_concat(Track(rng.random((16, 64, 64, 3)), 1))


def test_amod_roundtrip(tmp_path, rng):
    b = ModalityBundle(*(rng.random(s, dtype=np.float32) for s in
                         [(3, 112, 112), (3, 112, 112), (2, 112, 112), (2, 112, 112)]),
                       label=1, id="real/0001")
    write_bundle(tmp_path / "x.amod", b)
    data = (tmp_path / "x.amod").read_bytes()
    assert data[:4] == b"AMOD"
    c = read_bundle(tmp_path / "x.amod")
    assert c.label == 1 and c.id == "real/0001"
    for k, v in b.tensors().items():
        np.testing.assert_array_equal(v, c.tensors()[k])
    (tmp_path / "y.amod").write_bytes(data + b"\0")
    with pytest.raises(ValueError):
        read_bundle(tmp_path / "y.amod")
    (tmp_path / "z.amod").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        read_bundle(tmp_path / "z.amod")


def test_config_defaults():
    cfg = ModalityConfig()
    assert cfg.c_values == (1000.0, 1.0) and cfg.epsilon == 0.1 and cfg.flow_scale == 0.125
