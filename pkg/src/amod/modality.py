"""Artificial modalities computed from a 16-frame track.

* rank pooling: the SVR weight vector that orders the (cumulative-mean) frames
  in time, reshaped to an image and min-max normalised per channel;
* optical flow between frames (0, 15) and (0, 1);
* raw first/last frame concatenation for the ablation baseline.

Bundles are stored on disk in the little-endian ``AMOD`` layout::

    b"AMOD" | version u16 | 4 x (channels u16, height u16, width u16, f32 data)
            | label u8 | id length u16 | id utf-8
"""
import struct
from dataclasses import dataclass, field

import numpy as np

from .flow import FlowParams, optical_flow
from .svr import FeatureSequence, centered_targets, solve_linear_svr

AMOD_MAGIC = b"AMOD"
AMOD_VERSION = 1
BUNDLE_KEYS = ("rp_c1000", "rp_c1", "flow_far", "flow_near")


@dataclass(frozen=True)
class ModalityConfig:
    c_values: tuple = (1000.0, 1.0)
    epsilon: float = 0.1
    tvm: bool = True
    flow: FlowParams = field(default_factory=FlowParams)
    flow_scale: float = 1.0 / 8.0
    length: int = 16
    size: int = 112


@dataclass
class ModalityBundle:
    rp_c1000: np.ndarray
    rp_c1: np.ndarray
    flow_far: np.ndarray
    flow_near: np.ndarray
    label: int
    id: str = ""

    def tensors(self):
        return {k: getattr(self, k) for k in BUNDLE_KEYS}


def _vectorize(frames):
    # (L, H, W, C) -> (L, C*H*W) in channel-first order
    frames = np.asarray(frames, dtype=np.float64)
    return frames.transpose(0, 3, 1, 2).reshape(frames.shape[0], -1)


def time_varying_mean(frames):
    """Cumulative mean of the vectorised frames with centred time targets.

    The running update leaves the mean bit-identical when frames repeat.
    """
    X = _vectorize(frames)
    if X.shape[0] == 0:
        raise ValueError("empty frame sequence")
    out = np.empty_like(X)
    m = X[0].copy()
    out[0] = m
    for t in range(1, X.shape[0]):
        m = m + (X[t] - m) / (t + 1)
        out[t] = m
    return FeatureSequence(out, centered_targets(X.shape[0]))


def raw_features(frames):
    X = _vectorize(frames)
    return FeatureSequence(X, centered_targets(X.shape[0]))


def normalize_channels(img):
    """Per-channel min-max to [0, 1]; constant channels become 0.5."""
    out = np.empty(img.shape, dtype=np.float32)
    for c in range(img.shape[0]):
        ch = img[c]
        lo, hi = ch.min(), ch.max()
        out[c] = 0.5 if hi == lo else (ch - lo) / (hi - lo)
    return out


def _check_track(frames, cfg, channels=3):
    want = (cfg.length, cfg.size, cfg.size, channels)
    if frames.shape != want:
        raise ValueError(f"expected frames of shape {want}, got {frames.shape}")


def rank_pool_solutions(frames, c_values, epsilon=0.1, tvm=True):
    fs = time_varying_mean(frames) if tvm else raw_features(frames)
    gram = fs.vectors @ fs.vectors.T
    return [solve_linear_svr(fs, C, epsilon, gram=gram) for C in c_values]


def rank_pool(track16, C, cfg=ModalityConfig()):
    """Dynamic image (3, H, W) in [0, 1] for one regularisation value ``C``."""
    frames = track16.frames if hasattr(track16, "frames") else np.asarray(track16)
    _check_track(frames, cfg)
    sol = rank_pool_solutions(frames, [C], cfg.epsilon, cfg.tvm)[0]
    H, W = frames.shape[1:3]
    return normalize_channels(sol.u.reshape(frames.shape[3], H, W))


def flow_tensor(a, b, cfg=ModalityConfig()):
    f = optical_flow(a, b, cfg.flow)
    return np.clip(f.stack() * cfg.flow_scale, -1.0, 1.0).astype(np.float32)


def make_bundle(track16, cfg=ModalityConfig()):
    frames = track16.frames
    _check_track(frames, cfg)
    H, W, C = frames.shape[1:]
    sols = rank_pool_solutions(frames, cfg.c_values, cfg.epsilon, cfg.tvm)
    rp = [normalize_channels(s.u.reshape(C, H, W)) for s in sols]
    return ModalityBundle(
        rp_c1000=rp[0],
        rp_c1=rp[1],
        flow_far=flow_tensor(frames[0], frames[-1], cfg),
        flow_near=flow_tensor(frames[0], frames[1], cfg),
        label=track16.label,
        id=track16.id,
    )


def raw_pair_concat(track16, cfg=ModalityConfig()):
    frames = track16.frames
    _check_track(frames, cfg)
    pair = np.concatenate([frames[0], frames[-1]], axis=2)
    return np.ascontiguousarray(pair.transpose(2, 0, 1), dtype=np.float32)


# -- AMOD files -------------------------------------------------------------

def write_bundle(path, bundle):
    parts = [AMOD_MAGIC, struct.pack("<H", AMOD_VERSION)]
    for key in BUNDLE_KEYS:
        arr = np.ascontiguousarray(getattr(bundle, key), dtype="<f4")
        c, h, w = arr.shape
        parts.append(struct.pack("<HHH", c, h, w))
        parts.append(arr.tobytes())
    ident = bundle.id.encode("utf-8")
    parts.append(struct.pack("<BH", int(bundle.label), len(ident)))
    parts.append(ident)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_bundle(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != AMOD_MAGIC:
        raise ValueError(f"{path}: not an AMOD file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != AMOD_VERSION:
        raise ValueError(f"{path}: unsupported AMOD version {version}")
    pos = 6
    arrays = {}
    for key in BUNDLE_KEYS:
        c, h, w = struct.unpack_from("<HHH", data, pos)
        pos += 6
        n = c * h * w
        arrays[key] = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(c, h, w).copy()
        pos += 4 * n
    label, n_id = struct.unpack_from("<BH", data, pos)
    pos += 3
    ident = data[pos:pos + n_id].decode("utf-8")
    if pos + n_id != len(data):
        raise ValueError(f"{path}: trailing bytes")
    return ModalityBundle(label=label, id=ident, **arrays)
