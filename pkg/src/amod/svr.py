"""Linear epsilon-insensitive support vector regression for rank pooling.

Minimises

    P(u, b) = 1/2 |u|^2 + C * sum_t max(0, |c_t - u.v_t - b| - eps)

for a handful of very high dimensional samples ``v_t``.  Because the number of
samples is tiny, the work happens in the dual

    min_beta  1/2 beta' K beta - c' beta + eps |beta|_1
    s.t.      sum(beta) = 0,  -C <= beta_t <= C,

with Gram matrix ``K = V V'`` and ``u = V' beta``.  The dual is solved by
pairwise coordinate descent (maximal violating pair, exact 1-D minimisation)
with active-set steps on the current sign pattern.  After every outer iteration the primal iterate
moves toward the current dual candidate by an exact-best step on the segment,
so the recorded primal objective never increases.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass
class FeatureSequence:
    vectors: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 2:
            raise ValueError("need at least 2 feature vectors")
        if self.targets is None:
            self.targets = centered_targets(self.vectors.shape[0])
        self.targets = np.asarray(self.targets, dtype=np.float64)


@dataclass
class SvrSolution:
    u: np.ndarray
    b: float
    C: float
    epsilon: float
    objective: float
    iterations: int
    converged: bool
    beta: np.ndarray = None
    history: list = field(default_factory=list)


def centered_targets(L):
    t = np.arange(1, L + 1, dtype=np.float64)
    return t - (L + 1) / 2.0


def best_bias(r, epsilon):
    """Minimise sum max(0, |r_t - b| - eps) over b; midpoint of the optimal set."""
    cand = np.unique(np.concatenate([r - epsilon, r + epsilon]))
    loss = np.maximum(0.0, np.abs(r[None, :] - cand[:, None]) - epsilon).sum(axis=1)
    best = loss.min()
    tied = cand[loss <= best + 1e-12 * (1.0 + best)]
    return 0.5 * (tied[0] + tied[-1]), best


def _primal(beta, K, c, C, epsilon):
    pred = K @ beta
    b, loss = best_bias(c - pred, epsilon)
    return 0.5 * float(beta @ pred) + C * loss, b


def _dual(beta, K, c, epsilon):
    return 0.5 * float(beta @ K @ beta) - float(c @ beta) + epsilon * float(np.abs(beta).sum())


def _pair_step(beta, g, K, i, j, C, epsilon):
    """Exact minimiser of the dual along beta_i += d, beta_j -= d."""
    bi, bj = beta[i], beta[j]
    lo = max(-C - bi, bj - C)
    hi = min(C - bi, bj + C)
    if hi <= lo:
        return 0.0
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    eta = max(eta, 0.0)
    lin = g[i] - g[j]

    def f(d):
        return 0.5 * eta * d * d + lin * d + epsilon * (abs(bi + d) + abs(bj - d))

    knots = sorted({lo, hi, *(k for k in (-bi, bj) if lo < k < hi)})
    cands = list(knots)
    if eta > 0:
        for a, z in zip(knots[:-1], knots[1:]):
            mid = 0.5 * (a + z)
            si = 1.0 if bi + mid > 0 else -1.0
            sj = 1.0 if bj - mid > 0 else -1.0
            d = -(lin + epsilon * (si - sj)) / eta
            cands.append(min(max(d, a), z))
    base = f(0.0)
    best_d, best_f = 0.0, base
    for d in cands:
        fd = f(d)
        if fd < best_f - 1e-15 * (1.0 + abs(base)) or (fd == best_f and abs(d) < abs(best_d)):
            best_d, best_f = d, fd
    return best_d


def _violation(beta, g, C, epsilon):
    """Most negative pairwise directional derivative and the pair achieving it."""
    pos = beta >= 0
    up = g + np.where(pos, epsilon, -epsilon)
    down = -g + np.where(beta <= 0, epsilon, -epsilon)
    up = np.where(beta < C, up, np.inf)
    down = np.where(beta > -C, down, np.inf)
    i = int(np.argmin(up))
    down_i = down.copy()
    down_i[i] = np.inf
    j = int(np.argmin(down_i))
    best = up[i] + down_i[j]
    # the pair with j fixed first may be better
    j2 = int(np.argmin(down))
    up_j = up.copy()
    up_j[j2] = np.inf
    i2 = int(np.argmin(up_j))
    if up_j[i2] + down[j2] < best:
        i, j, best = i2, j2, up_j[i2] + down[j2]
    return -best, i, j


def _active_step(beta, K, c, C, epsilon):
    """One active-set move on the current sign pattern of ``beta``.

    Solves the equality-constrained problem over the free coordinates and steps
    toward it until a coordinate reaches 0 or a bound.  When the reduced Gram
    matrix is singular and the problem is unbounded on the free set, the step
    follows the flat descent direction instead.  Returns ``(beta, reached)``.
    """
    free = (beta != 0) & (np.abs(beta) < C)
    if not free.any():
        return beta, True
    F = np.flatnonzero(free)
    B = np.flatnonzero(~free)
    s = np.sign(beta[F])
    n = F.size
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = K[np.ix_(F, F)]
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    rhs = np.empty(n + 1)
    rhs[:n] = c[F] - epsilon * s - K[np.ix_(F, B)] @ beta[B]
    rhs[n] = -beta[B].sum()
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    resid = rhs - A @ sol
    scale = 1.0 + np.abs(rhs).max()
    if np.abs(resid).max() <= 1e-10 * scale:
        d = sol[:n] - beta[F]
        tau = 1.0
    else:
        # rhs has a component in null(A): zero-curvature descent direction
        d = resid[:n]
        tau = np.inf
    if not np.any(d):
        return beta, True
    hit = None
    for k in range(n):
        if d[k] == 0:
            continue
        mag, rate = abs(beta[F[k]]), d[k] * s[k]
        limit = (mag / -rate) if rate < 0 else ((C - mag) / rate)
        if limit < tau:
            tau, hit = limit, k
    if not np.isfinite(tau):
        return beta, True
    out = beta.copy()
    out[F] = beta[F] + tau * d
    if hit is not None:
        t = F[hit]
        out[t] = 0.0 if d[hit] * s[hit] < 0 else s[hit] * C
    return out, hit is None


def solve_linear_svr(fs, C, epsilon=0.1, max_iter=500, tol=1e-9, gram=None):
    """Fit the epsilon-insensitive linear SVR; see module docstring.

    ``tol`` bounds the pairwise KKT violation (scaled by ``1 + max|c|``).
    ``gram`` may carry a precomputed ``V V'`` so several ``C`` share one product.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    V = fs.vectors
    c = fs.targets
    if not np.all(np.isfinite(V)) or not np.all(np.isfinite(c)):
        raise ValueError("non-finite features")
    L = V.shape[0]
    K = V @ V.T if gram is None else gram
    beta = np.zeros(L)

    if np.all(V == V[0]):
        # u = 0 is forced: any other u costs |u|^2/2 without changing the loss
        obj, b = _primal(beta, K, c, C, epsilon)
        return SvrSolution(np.zeros(V.shape[1]), b, C, epsilon, obj, 0, True, beta, [obj])

    p_beta = beta.copy()
    p_obj, p_b = _primal(p_beta, K, c, C, epsilon)
    history = [p_obj]
    g = K @ beta - c
    kkt_tol = tol * (1.0 + np.abs(c).max())
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for _ in range(L):
            viol, i, j = _violation(beta, g, C, epsilon)
            if viol <= kkt_tol:
                break
            d = _pair_step(beta, g, K, i, j, C, epsilon)
            if d == 0.0:
                break
            beta[i] += d
            beta[j] -= d
            g += d * (K[:, i] - K[:, j])
        for _ in range(L + 1):
            moved, reached = _active_step(beta, K, c, C, epsilon)
            if _dual(moved, K, c, epsilon) <= _dual(beta, K, c, epsilon):
                beta = moved
            if reached:
                break
        g = K @ beta - c
        viol, _, _ = _violation(beta, g, C, epsilon)

        cand_obj, cand_b = _primal(beta, K, c, C, epsilon)
        if cand_obj <= p_obj:
            p_beta, p_obj, p_b = beta.copy(), cand_obj, cand_b
        else:
            step = beta - p_beta
            res = minimize_scalar(lambda t: _primal(p_beta + t * step, K, c, C, epsilon)[0],
                                  bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-10})
            if res.fun < p_obj:
                p_beta = p_beta + res.x * step
                p_obj, p_b = _primal(p_beta, K, c, C, epsilon)
        history.append(p_obj)
        if viol <= kkt_tol:
            converged = True
            break

    u = V.T @ p_beta
    return SvrSolution(u, float(p_b), C, epsilon, float(p_obj), it, converged, p_beta, history)
