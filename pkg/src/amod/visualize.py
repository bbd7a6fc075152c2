"""PNG renderings of the artificial modalities."""
import numpy as np
from PIL import Image


def to_uint8(img):
    return np.clip(np.round(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_chw(path, chw):
    """Save a (C, H, W) tensor in [0, 1] with C in {1, 3}."""
    arr = to_uint8(np.asarray(chw).transpose(1, 2, 0))
    Image.fromarray(arr[..., 0] if arr.shape[2] == 1 else arr).save(path)


def flow_to_rgb(u, v):
    """Colour wheel: hue is the direction, saturation the magnitude (per-image max)."""
    mag = np.hypot(u, v)
    top = mag.max()
    sat = mag / top if top > 0 else np.zeros_like(mag)
    hue = (np.arctan2(-v, -u) / np.pi + 1.0) / 2.0
    hsv = np.stack([hue % 1.0, sat, np.ones_like(mag)], axis=-1)
    return np.asarray(Image.fromarray(to_uint8(hsv), mode="HSV").convert("RGB"))


def save_flow(path, flow):
    Image.fromarray(flow_to_rgb(flow[0], flow[1])).save(path)
