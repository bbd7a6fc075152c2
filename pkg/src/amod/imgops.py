"""Small image helpers shared by augmentation, flow and the synthetic generator.

Images are ``(H, W)`` or ``(H, W, C)`` float arrays.  Resampling uses pixel-centre
coordinates, so a resize never shifts the image content.
"""
import numpy as np
from scipy import ndimage

LUMA = np.array([0.299, 0.587, 0.114])


def to_gray(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[..., 0]
    if img.shape[2] != 3:
        raise ValueError(f"cannot convert {img.shape[2]}-channel image to gray")
    return img @ LUMA


def _sample(img, rows, cols, mode, cval=0.0):
    if img.ndim == 2:
        return ndimage.map_coordinates(img, [rows, cols], order=1, mode=mode, cval=cval)
    out = np.empty(rows.shape + (img.shape[2],), dtype=img.dtype)
    for c in range(img.shape[2]):
        out[..., c] = ndimage.map_coordinates(img[..., c], [rows, cols], order=1,
                                              mode=mode, cval=cval)
    return out


def resize_bilinear(img, shape):
    """Bilinear resize of a 2-D or channel-last image to ``shape=(h, w)``."""
    h, w = int(shape[0]), int(shape[1])
    H, W = img.shape[:2]
    if (h, w) == (H, W):
        return img.copy()
    ry = (np.arange(h) + 0.5) * (H / h) - 0.5
    rx = (np.arange(w) + 0.5) * (W / w) - 0.5
    rows, cols = np.meshgrid(ry, rx, indexing="ij")
    return _sample(img, rows, cols, mode="nearest")


def rotate(img, degrees):
    """Rotate about the image centre (bilinear, zero fill)."""
    if degrees == 0:
        return img.copy()
    H, W = img.shape[:2]
    cy, cx = (H - 1) / 2.0, (W - 1) / 2.0
    t = np.deg2rad(degrees)
    yy, xx = np.meshgrid(np.arange(H) - cy, np.arange(W) - cx, indexing="ij")
    # inverse mapping: output pixel -> source location
    rows = cy + np.cos(t) * yy - np.sin(t) * xx
    cols = cx + np.sin(t) * yy + np.cos(t) * xx
    return _sample(img, rows, cols, mode="constant", cval=0.0)


def shift(img, dx, dy):
    """Integer translation by ``dx`` columns and ``dy`` rows with zero fill."""
    dx, dy = int(dx), int(dy)
    out = np.zeros_like(img)
    H, W = img.shape[:2]
    if abs(dx) >= W or abs(dy) >= H:
        return out
    src_r = slice(max(0, -dy), H - max(0, dy))
    dst_r = slice(max(0, dy), H - max(0, -dy))
    src_c = slice(max(0, -dx), W - max(0, dx))
    dst_c = slice(max(0, dx), W - max(0, -dx))
    out[dst_r, dst_c] = img[src_r, src_c]
    return out


def warp(img, u, v):
    """Sample ``img`` at ``(y + v, x + u)`` with edge clamping."""
    H, W = img.shape
    yy, xx = np.meshgrid(np.arange(H, dtype=np.float64), np.arange(W, dtype=np.float64),
                         indexing="ij")
    return ndimage.map_coordinates(img, [yy + v, xx + u], order=1, mode="nearest")
