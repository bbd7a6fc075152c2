"""Coarse-to-fine variational optical flow with Charbonnier penalties.

Energy (intensities on the 0..255 scale, forward differences, Neumann border):

    E(u, v) = sum_x phi(I_b(x + w) - I_a(x)) + alpha * sum_x phi(|grad u|^2 + |grad v|^2)

with ``phi(s^2) = sqrt(s^2 + eps^2)``.  Each pyramid level runs a few warping
iterations; each warp linearises the data term around the current flow and
solves for the increment with lagged-diffusivity Gauss-Seidel sweeps.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from . import imgops

MIN_LEVEL_SIZE = 16
_DERIV = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class FlowParams:
    pyramid_scale: float = 0.5
    levels: int = 4
    warps_per_level: int = 3
    smoothness_alpha: float = 20.0
    charbonnier_eps: float = 1e-3
    solver_iters: int = 50
    solver_tol: float = 1e-4
    omega: float = 1.8

    def __post_init__(self):
        if not 0.0 < self.pyramid_scale < 1.0:
            raise ValueError("pyramid_scale must lie in (0, 1)")
        for name in ("levels", "warps_per_level", "solver_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class FlowField:
    u: np.ndarray
    v: np.ndarray
    params: FlowParams = field(default_factory=FlowParams)

    def stack(self):
        return np.stack([self.u, self.v])


def pyramid_shapes(shape, p):
    shapes = [tuple(shape)]
    while len(shapes) < p.levels:
        h, w = shapes[-1]
        nxt = (int(round(h * p.pyramid_scale)), int(round(w * p.pyramid_scale)))
        if min(nxt) < MIN_LEVEL_SIZE:
            break
        shapes.append(nxt)
    return shapes


def _pyramid(img, shapes, scale):
    levels = [img]
    sigma = 0.5 / scale
    for shape in shapes[1:]:
        levels.append(imgops.resize_bilinear(ndimage.gaussian_filter(levels[-1], sigma), shape))
    return levels


def _gradients(img):
    gx = ndimage.correlate1d(img, _DERIV, axis=1, mode="nearest")
    gy = ndimage.correlate1d(img, _DERIV, axis=0, mode="nearest")
    return gx, gy


@njit(cache=True, nogil=True)
def _solve_increment(Ix, Iy, Iz, u, v, alpha, eps, iters, tol, omega):
    H, W = Ix.shape
    du = np.zeros((H, W))
    dv = np.zeros((H, W))
    U = u.copy()
    V = v.copy()
    psi_d = np.empty((H, W))
    psi_s = np.empty((H, W))
    # edge weights: wx[y, x] joins (y, x) and (y, x + 1); wy[y, x] joins (y, x) and (y + 1, x)
    wx = np.zeros((H, W))
    wy = np.zeros((H, W))
    eps2 = eps * eps
    n_done = 0
    for it in range(iters):
        n_done = it + 1
        for y in range(H):
            for x in range(W):
                r = Iz[y, x] + Ix[y, x] * du[y, x] + Iy[y, x] * dv[y, x]
                psi_d[y, x] = 1.0 / np.sqrt(r * r + eps2)
                Uc = U[y, x]
                Vc = V[y, x]
                ux = uy = vx = vy = 0.0
                if x + 1 < W:
                    ux = U[y, x + 1] - Uc
                    vx = V[y, x + 1] - Vc
                if y + 1 < H:
                    uy = U[y + 1, x] - Uc
                    vy = V[y + 1, x] - Vc
                psi_s[y, x] = 1.0 / np.sqrt(ux * ux + uy * uy + vx * vx + vy * vy + eps2)
        for y in range(H):
            for x in range(W - 1):
                wx[y, x] = 0.5 * (psi_s[y, x] + psi_s[y, x + 1])
        for y in range(H - 1):
            for x in range(W):
                wy[y, x] = 0.5 * (psi_s[y, x] + psi_s[y + 1, x])
        change = 0.0
        for y in range(H):
            for x in range(W):
                sw = 0.0
                su = 0.0
                sv = 0.0
                uc = u[y, x]
                vc = v[y, x]
                if x > 0:
                    wq = wx[y, x - 1]
                    sw += wq
                    su += wq * (U[y, x - 1] - uc)
                    sv += wq * (V[y, x - 1] - vc)
                if x + 1 < W:
                    wq = wx[y, x]
                    sw += wq
                    su += wq * (U[y, x + 1] - uc)
                    sv += wq * (V[y, x + 1] - vc)
                if y > 0:
                    wq = wy[y - 1, x]
                    sw += wq
                    su += wq * (U[y - 1, x] - uc)
                    sv += wq * (V[y - 1, x] - vc)
                if y + 1 < H:
                    wq = wy[y, x]
                    sw += wq
                    su += wq * (U[y + 1, x] - uc)
                    sv += wq * (V[y + 1, x] - vc)
                pd = psi_d[y, x]
                ix = Ix[y, x]
                iy = Iy[y, x]
                iz = Iz[y, x]
                a11 = pd * ix * ix + alpha * sw
                a12 = pd * ix * iy
                a22 = pd * iy * iy + alpha * sw
                b1 = -pd * ix * iz + alpha * su
                b2 = -pd * iy * iz + alpha * sv
                det = a11 * a22 - a12 * a12
                if det <= 0.0:
                    continue
                ndu = (a22 * b1 - a12 * b2) / det
                ndv = (a11 * b2 - a12 * b1) / det
                ndu = du[y, x] + omega * (ndu - du[y, x])
                ndv = dv[y, x] + omega * (ndv - dv[y, x])
                c = max(abs(ndu - du[y, x]), abs(ndv - dv[y, x]))
                if c > change:
                    change = c
                du[y, x] = ndu
                dv[y, x] = ndv
                U[y, x] = uc + ndu
                V[y, x] = vc + ndv
        if change < tol:
            break
    return du, dv, n_done


def _gray255(img):
    return imgops.to_gray(img) * 255.0


def optical_flow(a, b, p=FlowParams()):
    """Dense flow ``w`` such that ``b(x + w) ~ a(x)``; ``u`` is along columns."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    A = _gray255(a)
    B = _gray255(b)
    shapes = pyramid_shapes(A.shape, p)
    pa = _pyramid(A, shapes, p.pyramid_scale)
    pb = _pyramid(B, shapes, p.pyramid_scale)
    u = np.zeros(shapes[-1])
    v = np.zeros(shapes[-1])
    for lvl in range(len(shapes) - 1, -1, -1):
        shape = shapes[lvl]
        if u.shape != shape:
            sy, sx = shape[0] / u.shape[0], shape[1] / u.shape[1]
            u = imgops.resize_bilinear(u, shape) * sx
            v = imgops.resize_bilinear(v, shape) * sy
        La, Lb = pa[lvl], pb[lvl]
        gax, gay = _gradients(La)
        for _ in range(p.warps_per_level):
            Bw = imgops.warp(Lb, u, v)
            gbx, gby = _gradients(Bw)
            Ix = 0.5 * (gax + gbx)
            Iy = 0.5 * (gay + gby)
            Iz = Bw - La
            du, dv, _ = _solve_increment(Ix, Iy, Iz, u, v, p.smoothness_alpha,
                                         p.charbonnier_eps, p.solver_iters, p.solver_tol,
                                         p.omega)
            u = u + du
            v = v + dv
    return FlowField(u, v, p)


def flow_energy(a, b, u, v, p=FlowParams()):
    """The energy minimised by :func:`optical_flow`, at full resolution."""
    A = _gray255(a)
    B = _gray255(b)
    r = imgops.warp(B, u, v) - A
    eps2 = p.charbonnier_eps ** 2
    data = np.sqrt(r * r + eps2).sum()
    ux = np.zeros_like(u)
    uy = np.zeros_like(u)
    vx = np.zeros_like(v)
    vy = np.zeros_like(v)
    ux[:, :-1] = np.diff(u, axis=1)
    uy[:-1] = np.diff(u, axis=0)
    vx[:, :-1] = np.diff(v, axis=1)
    vy[:-1] = np.diff(v, axis=0)
    smooth = np.sqrt(ux ** 2 + uy ** 2 + vx ** 2 + vy ** 2 + eps2).sum()
    return float(data + p.smoothness_alpha * smooth)
