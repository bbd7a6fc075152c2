"""Forward/backward primitives on channel-last (N, H, W, C) arrays.

Each ``*_forward`` returns ``(out, cache)``; the matching ``*_backward`` takes
the upstream gradient and the cache.  Reductions run in a fixed order so that
repeated runs are bit-identical.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_forward(x, w, b, pad):
    """``w`` has shape (F, C, kh, kw); stride 1; zero padding ``pad``."""
    N, H, W, C = x.shape
    F, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    Ho, Wo = H + 2 * pad - kh + 1, W + 2 * pad - kw + 1
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # N, Ho, Wo, C, kh, kw
    cols = win.reshape(N * Ho * Wo, C * kh * kw)
    wmat = w.reshape(F, C * kh * kw).T
    out = (cols @ wmat + b).reshape(N, Ho, Wo, F)
    return out, (x.shape, cols, w, pad)


def conv_backward(dout, cache, need_dx=True):
    xshape, cols, w, pad = cache
    N, H, W, C = xshape
    F, _, kh, kw = w.shape
    Ho, Wo = dout.shape[1:3]
    dflat = dout.reshape(-1, F)
    dw = (cols.T @ dflat).T.reshape(F, C, kh, kw)
    db = dflat.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (dflat @ w.reshape(F, -1)).reshape(N, Ho, Wo, C, kh, kw)
    dxp = np.zeros((N, H + 2 * pad, W + 2 * pad, C), dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + Ho, j:j + Wo, :] += dcols[..., i, j]
    dx = dxp[:, pad:pad + H, pad:pad + W, :] if pad else dxp
    return dx, dw, db


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train,
                      momentum=0.1, eps=1e-5):
    """Per-channel normalisation; updates the running buffers in place when training."""
    if train:
        axes = tuple(range(x.ndim - 1))
        n = x.size // x.shape[-1]
        mu = x.mean(axis=axes)
        var = x.var(axis=axes)
        running_mean *= 1 - momentum
        running_mean += momentum * mu
        running_var *= 1 - momentum
        running_var += momentum * var * (n / max(n - 1, 1))
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    out = gamma * xhat + beta
    return out, (xhat, inv, gamma, train)


def batchnorm_backward(dout, cache):
    xhat, inv, gamma, train = cache
    axes = tuple(range(dout.ndim - 1))
    dgamma = (dout * xhat).sum(axis=axes)
    dbeta = dout.sum(axis=axes)
    dxhat = dout * gamma
    if not train:
        return dxhat * inv, dgamma, dbeta
    n = dout.size // dout.shape[-1]
    dx = (inv / n) * (n * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes))
    return dx, dgamma, dbeta


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def maxpool_forward(x):
    """2x2 / stride 2; ties go to the first element in row-major window order."""
    N, H, W, C = x.shape
    win = x.reshape(N, H // 2, 2, W // 2, 2, C).transpose(0, 1, 3, 5, 2, 4)
    win = win.reshape(N, H // 2, W // 2, C, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, (x.shape, idx)


def maxpool_backward(dout, cache):
    shape, idx = cache
    N, H, W, C = shape
    dwin = np.zeros(idx.shape + (4,), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dwin = dwin.reshape(N, H // 2, W // 2, C, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return dwin.reshape(N, H, W, C)


def global_avgpool_forward(x):
    return x.mean(axis=(1, 2)), x.shape


def global_avgpool_backward(dout, shape):
    N, H, W, C = shape
    return np.broadcast_to((dout / (H * W))[:, None, None, :], shape).astype(dout.dtype)


def pool_modalities_forward(emb):
    """Max, mean and min over the modality axis of ``emb`` (M, N, D).

    Values are sorted along the modality axis before summing, which makes the
    result bit-identical under any reordering of the modalities.
    """
    order = np.argsort(emb, axis=0, kind="stable")
    srt = np.take_along_axis(emb, order, axis=0)
    M = emb.shape[0]
    fused = np.concatenate([srt[-1], srt.sum(axis=0) / M, srt[0]], axis=1)
    return fused, (order, M)


def pool_modalities_backward(dfused, cache):
    order, M = cache
    D = dfused.shape[1] // 3
    dmax, davg, dmin = dfused[:, :D], dfused[:, D:2 * D], dfused[:, 2 * D:]
    demb = np.broadcast_to(davg / M, (M,) + davg.shape).copy()
    hi = np.zeros_like(demb)
    lo = np.zeros_like(demb)
    np.put_along_axis(hi, order[-1:], dmax[None], axis=0)
    np.put_along_axis(lo, order[:1], dmin[None], axis=0)
    return demb + hi + lo


def bce_with_logits(z, y):
    """Mean stable binary cross entropy and its gradient w.r.t. the logits."""
    z = np.asarray(z)
    y = np.asarray(y, dtype=z.dtype)
    losses = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    grad = (sigmoid(z) - y) / z.size
    return float(losses.mean()), grad.astype(z.dtype)


def sigmoid(z):
    z = np.asarray(z)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(z.dtype)
