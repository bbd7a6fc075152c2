"""Track loading, uniform frame selection, protocol lists and synthetic data.

A track is a short aligned face video stored as a directory of numbered frames
(``0001.png``, ``0002.png``, ... or binary ``.ppm``).  Frames are held in memory
as a single ``(T, H, W, C)`` float32 array with values in ``[0, 1]``.

Synthetic data uses numpy's PCG64 generator seeded through ``SeedSequence``;
every track draws from its own child stream, so results do not depend on the
order in which tracks are produced.
"""
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

FRAME_RE = re.compile(r"^(\d+)\.(png|ppm)$", re.IGNORECASE)


class DataError(Exception):
    """Raised for unreadable or inconsistent on-disk data."""


@dataclass
class Track:
    frames: np.ndarray
    label: int
    id: str = ""

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim == 3:
            self.frames = self.frames[..., None]
        if self.frames.ndim != 4:
            raise ValueError(f"frames must be (T, H, W, C), got {self.frames.shape}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.frames.shape[3] not in (1, 2, 3, 6):
            raise ValueError(f"unsupported channel count {self.frames.shape[3]}")
        self.label = int(self.label)

    def __len__(self):
        return self.frames.shape[0]

    def replace(self, frames=None, label=None):
        return Track(self.frames if frames is None else frames,
                     self.label if label is None else label, self.id)


@dataclass
class ProtocolSplit:
    train: list
    dev: list
    test: list
    protocol_id: int = 1

    def __post_init__(self):
        ids = [[t.id for t in part] for part in (self.train, self.dev, self.test)]
        seen = set()
        for part in ids:
            if seen.intersection(part):
                raise ValueError("train/dev/test overlap by track id")
            seen.update(part)


def _read_frame(path):
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc
    return arr.astype(np.float32) / 255.0


def frame_files(dir_path):
    entries = []
    for name in os.listdir(dir_path):
        m = FRAME_RE.match(name)
        if m:
            entries.append((int(m.group(1)), name))
    entries.sort()
    return [Path(dir_path) / name for _, name in entries]


def load_track(dir_path, label, track_id=None):
    """Load all numbered frames of a track directory."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise DataError(f"track directory not found: {dir_path}")
    files = frame_files(dir_path)
    if len(files) < 2:
        raise DataError(f"too few frames in {dir_path}: {len(files)}")
    frames = [_read_frame(f) for f in files]
    shape = frames[0].shape
    for f, arr in zip(files, frames):
        if arr.shape != shape:
            raise DataError(f"inconsistent dimensions in {dir_path}: "
                            f"{f.name} is {arr.shape}, expected {shape}")
    return Track(np.stack(frames), label, track_id if track_id is not None else str(dir_path))


def save_track(track, dir_path, fmt="png"):
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(track.frames):
        arr = np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)
        if arr.shape[2] == 1:
            arr = arr[..., 0]
        Image.fromarray(arr).save(dir_path / f"{i + 1:04d}.{fmt}")


def uniform_indices(T, L):
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    return np.minimum((np.arange(L) * T) // L, T - 1)


def select_uniform(track, L=16):
    """Pick ``L`` frames at ``floor(j * T / L)``; short tracks repeat frames."""
    idx = uniform_indices(len(track), L)
    return track.replace(frames=track.frames[idx])


def load_protocol(list_path):
    """Parse ``<track_dir> <label>`` lines; ``#`` lines are comments."""
    out = []
    with open(list_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{list_path}:{lineno}: expected '<dir> <label>', got {line!r}")
            if parts[1] not in ("0", "1"):
                raise DataError(f"{list_path}:{lineno}: label must be 0 or 1, got {parts[1]!r}")
            out.append((parts[0], int(parts[1])))
    return out


def write_protocol(list_path, entries):
    with open(list_path, "w", encoding="utf-8") as fh:
        for path, label in entries:
            fh.write(f"{path} {int(label)}\n")


def load_split(list_path, root=None):
    """Load every track named in a protocol list (paths relative to ``root``)."""
    list_path = Path(list_path)
    root = Path(root) if root is not None else list_path.parent
    tracks = []
    for rel, label in load_protocol(list_path):
        tracks.append(load_track(root / rel, label, track_id=rel))
    return tracks


# -- synthetic data ---------------------------------------------------------

TONES = np.array([
    [0.86, 0.66, 0.54],
    [0.74, 0.54, 0.42],
    [0.58, 0.41, 0.31],
])
# direction of the palette change applied to dev/test faces when eval_tone_shift > 0
TONE_SHIFT = np.array([-0.30, -0.05, 0.25])


@dataclass(frozen=True)
class SynthConfig:
    n_real: int = 8
    n_fake: int = 8
    frames_per_track: int = 32
    image_size: int = 112
    motion_amplitude: float = 3.0
    texture_seed: int = 0
    noise_sigma: float = 0.01
    # condition shift of dev/test relative to train
    eval_motion_scale: float = 1.0
    eval_tone_shift: float = 0.0

    def validate(self):
        if self.n_real < 1 or self.n_fake < 1:
            raise ValueError("train set must contain both labels")
        if min(self.n_real, self.n_fake) < 4:
            raise ValueError("need at least 4 tracks per label so dev and test contain both labels")
        if self.frames_per_track < 16:
            raise ValueError("frames_per_track must be >= 16")
        if self.image_size < 32:
            raise ValueError("image_size must be >= 32")
        if self.motion_amplitude < 0 or self.noise_sigma < 0:
            raise ValueError("motion_amplitude and noise_sigma must be nonnegative")


def _smooth_noise(rng, shape, sigma):
    f = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    return f / (f.std() + 1e-12)


class _Scene:
    """A textured elliptical 'face' over a static textured background."""

    def __init__(self, rng, size, tone):
        self.size = size
        self.bar = size // 8
        self.margin = int(np.ceil(size * 0.1)) + 8
        big = size + 2 * self.margin
        coarse = _smooth_noise(rng, (big, big), size / 16)
        fine = _smooth_noise(rng, (big, big), 1.5)
        shade = 0.75 + 0.12 * coarse + 0.10 * fine
        self.face = np.clip(shade[..., None] * tone[None, None, :], 0, 1)
        bg = 0.35 + 0.08 * _smooth_noise(rng, (size, size), size / 10)
        bg_tone = np.array([0.55, 0.6, 0.65]) + 0.1 * rng.uniform(-1, 1, 3)
        self.background = np.clip(bg[..., None] * bg_tone[None, None, :], 0, 1)
        self.center = size / 2 + rng.uniform(-0.04, 0.04, 2) * size
        self.axes = np.array([0.36, 0.27]) * size * rng.uniform(0.92, 1.08, 2)

    def render(self, dy, dx, gain=1.0):
        s, m = self.size, self.margin
        yy, xx = np.meshgrid(np.arange(s, dtype=np.float64), np.arange(s, dtype=np.float64),
                             indexing="ij")
        rows, cols = yy - dy + m, xx - dx + m
        face = np.stack([ndimage.map_coordinates(self.face[..., c], [rows, cols], order=1,
                                                 mode="nearest") for c in range(3)], axis=-1)
        ry = (yy - dy - self.center[0]) / self.axes[0]
        rx = (xx - dx - self.center[1]) / self.axes[1]
        r = np.sqrt(ry ** 2 + rx ** 2)
        alpha = np.clip((1.0 - r) * 12.0, 0.0, 1.0)[..., None]
        img = (alpha * face + (1 - alpha) * self.background) * gain
        img[:, :self.bar] = 0.0
        img[:, s - self.bar:] = 0.0
        return img


def _finish(img, rng, sigma, bar):
    img = img + sigma * rng.standard_normal(img.shape)
    # content stays clear of the border-removal threshold; bars stay exactly black
    img = np.clip(img, 0.05, 1.0)
    img[:, :bar] = 0.0
    img[:, img.shape[1] - bar:] = 0.0
    return (np.round(img * 255.0) / 255.0).astype(np.float32)


def _make_track(kind, cfg, tex_rng, rng, eval_cond, track_id):
    T, S = cfg.frames_per_track, cfg.image_size
    tone = TONES[tex_rng.integers(len(TONES))] * tex_rng.uniform(0.93, 1.07, 3)
    if eval_cond:
        tone = tone + cfg.eval_tone_shift * TONE_SHIFT
    tone = np.clip(tone, 0.15, 1.0)
    scene = _Scene(tex_rng, S, tone)
    frames = np.empty((T, S, S, 3), dtype=np.float32)
    if kind == "real":
        amp = cfg.motion_amplitude * (cfg.eval_motion_scale if eval_cond else 1.0)
        theta = rng.uniform(0, 2 * np.pi)
        wobble = rng.uniform(0.1, 0.25) * amp
        phase = rng.uniform(0, 2 * np.pi)
        for t in range(T):
            s = np.sin(np.pi * (t / (T - 1) - 0.5))
            w = wobble * np.sin(4 * np.pi * t / (T - 1) + phase)
            dy = amp * s * np.sin(theta) + w * np.cos(theta)
            dx = amp * s * np.cos(theta) - w * np.sin(theta)
            frames[t] = _finish(scene.render(dy, dx), rng, cfg.noise_sigma, scene.bar)
        label = 1
    elif kind == "print":
        dy, dx = rng.uniform(-1, 1, 2) * cfg.motion_amplitude
        base = scene.render(dy, dx)
        for t in range(T):
            frames[t] = _finish(base.copy(), rng, cfg.noise_sigma, scene.bar)
        label = 0
    else:
        dy, dx = rng.uniform(-1, 1, 2) * cfg.motion_amplitude
        base = scene.render(dy, dx)
        period = rng.uniform(6, 14)
        phase = rng.uniform(0, 2 * np.pi)
        depth = rng.uniform(0.05, 0.10)
        for t in range(T):
            gain = 1.0 + depth * np.sin(2 * np.pi * t / period + phase)
            frames[t] = _finish(base * gain, rng, cfg.noise_sigma, scene.bar)
        label = 0
    return Track(frames, label, track_id)


def _split_counts(n):
    n_train = int(round(0.5 * n))
    n_dev = int(round(0.25 * n))
    return n_train, n_dev, n - n_train - n_dev


def generate_synthetic(cfg=SynthConfig(), seed=0, protocol_id=1):
    """Deterministic synthetic protocol: moving real faces, static/flickering fakes.

    Real tracks translate smoothly (``motion_amplitude`` pixels peak offset);
    fakes are either a repeated still frame (print-like) or a frozen frame with
    global intensity flicker (replay-like), half each.  Each label is split
    50/25/25 into train/dev/test.  Dev and test use the ``eval_*`` condition
    shift.
    """
    cfg.validate()
    parts = {"train": [], "dev": [], "test": []}
    for label_name, n in (("real", cfg.n_real), ("fake", cfg.n_fake)):
        counts = _split_counts(n)
        names = ["train"] * counts[0] + ["dev"] * counts[1] + ["test"] * counts[2]
        key = 0 if label_name == "real" else 1
        for k, part in enumerate(names):
            if label_name == "real":
                kind = "real"
            else:
                kind = "print" if k % 2 == 0 else "replay"
            tex_rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([int(cfg.texture_seed), key, k])))
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([int(seed), int(protocol_id), key, k])))
            tid = f"{kind}/{k + 1:04d}"
            parts[part].append(_make_track(kind, cfg, tex_rng, rng, part != "train", tid))
    return ProtocolSplit(parts["train"], parts["dev"], parts["test"], protocol_id)


def materialize(split, out_dir, fmt="png"):
    """Write a split as track directories plus ``train/dev/test.txt`` lists."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for part in ("train", "dev", "test"):
        tracks = getattr(split, part)
        for t in tracks:
            save_track(t, out_dir / t.id, fmt=fmt)
        write_protocol(out_dir / f"{part}.txt", [(t.id, t.label) for t in tracks])
    return out_dir
