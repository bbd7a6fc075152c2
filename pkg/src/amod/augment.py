"""Track augmentation and preprocessing.

Training order: sequence augmentation (with probability ``sa_probability``),
black-border removal, square padding, one colour transform shared by the whole
track, then independent rotation / colour / shift noise per frame.
"""
from dataclasses import dataclass

import numpy as np

from . import imgops

BORDER_THRESHOLD = 2.0 / 255.0


@dataclass(frozen=True)
class AugmentConfig:
    sa_probability: float = 0.5
    equal_gain: float = 0.4
    equal_bias: float = 0.1
    per_frame_rotation_deg: float = 5.0
    per_frame_shift_px: int = 3
    per_frame_gain: float = 0.1
    per_frame_bias: float = 0.03
    target_size: int = 112

    def __post_init__(self):
        if not 0.0 <= self.sa_probability <= 1.0:
            raise ValueError("sa_probability must lie in [0, 1]")
        for name in ("equal_gain", "equal_bias", "per_frame_rotation_deg",
                     "per_frame_shift_px", "per_frame_gain", "per_frame_bias"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.target_size <= 0:
            raise ValueError("target_size must be positive")


NO_AUGMENT = AugmentConfig(sa_probability=0.0, equal_gain=0.0, equal_bias=0.0,
                           per_frame_rotation_deg=0.0, per_frame_shift_px=0,
                           per_frame_gain=0.0, per_frame_bias=0.0)


def sequence_augment(track, rng):
    """Replace every frame by copies of one random frame and relabel as fake."""
    if len(track) == 0:
        raise ValueError("cannot sequence-augment an empty track")
    i = int(rng.integers(len(track)))
    frames = np.repeat(track.frames[i:i + 1], len(track), axis=0)
    return track.replace(frames=frames, label=0)


def remove_black_borders(frame, threshold=BORDER_THRESHOLD):
    mask = frame.max(axis=2) > threshold
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return frame
    cols = np.flatnonzero(mask.any(axis=0))
    return frame[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]


def pad_square(frame, size=112):
    """Scale the longer side to ``size`` and zero-pad the shorter one symmetrically."""
    h, w = frame.shape[:2]
    if max(h, w) > 512:
        raise ValueError(f"frame {h}x{w} exceeds the 512 px sanity bound")
    if (h, w) == (size, size):
        return frame
    scale = size / max(h, w)
    nh = min(size, max(1, int(round(h * scale))))
    nw = min(size, max(1, int(round(w * scale))))
    scaled = imgops.resize_bilinear(frame, (nh, nw)).astype(frame.dtype, copy=False)
    out = np.zeros((size, size) + frame.shape[2:], dtype=frame.dtype)
    top, left = (size - nh) // 2, (size - nw) // 2
    out[top:top + nh, left:left + nw] = scaled
    return out


def preprocess(track, size=112):
    frames = np.stack([pad_square(remove_black_borders(f), size) for f in track.frames])
    return track.replace(frames=frames)


def color_transform(frames, gain, bias):
    gain = np.asarray(gain, dtype=frames.dtype)
    bias = np.asarray(bias, dtype=frames.dtype)
    return np.clip(frames * gain + bias, 0.0, 1.0)


def equal_color_jitter(track, rng, cfg=AugmentConfig()):
    """Apply one random per-channel gain/bias to every frame of the track."""
    if track.frames.shape[3] != 3:
        raise ValueError("equal_color_jitter expects 3-channel frames")
    gain = rng.uniform(1 - cfg.equal_gain, 1 + cfg.equal_gain, 3)
    bias = rng.uniform(-cfg.equal_bias, cfg.equal_bias, 3)
    return track.replace(frames=color_transform(track.frames, gain, bias))


def perturb_frame(frame, angle=0.0, gain=(1, 1, 1), bias=(0, 0, 0), dx=0, dy=0):
    out = imgops.rotate(frame, angle).astype(frame.dtype, copy=False)
    out = color_transform(out, np.asarray(gain)[:frame.shape[2]], np.asarray(bias)[:frame.shape[2]])
    return imgops.shift(out, dx, dy)


def per_frame_perturb(frame, rng, cfg=AugmentConfig()):
    r, s = cfg.per_frame_rotation_deg, int(cfg.per_frame_shift_px)
    angle = rng.uniform(-r, r)
    gain = rng.uniform(1 - cfg.per_frame_gain, 1 + cfg.per_frame_gain, 3)
    bias = rng.uniform(-cfg.per_frame_bias, cfg.per_frame_bias, 3)
    dx, dy = rng.integers(-s, s + 1, 2)
    return perturb_frame(frame, angle, gain, bias, dx, dy)


def augment_track(track, rng, cfg=AugmentConfig(), sequence_augmentation=True):
    """Full training chain on an already subsampled track."""
    if sequence_augmentation and rng.random() < cfg.sa_probability:
        track = sequence_augment(track, rng)
    track = preprocess(track, cfg.target_size)
    if track.frames.shape[3] == 3:
        track = equal_color_jitter(track, rng, cfg)
    frames = np.stack([per_frame_perturb(f, rng, cfg) for f in track.frames])
    return track.replace(frames=frames)
