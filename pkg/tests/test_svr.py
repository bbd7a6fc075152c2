import numpy as np
import pytest

from amod.svr import FeatureSequence, best_bias, centered_targets, solve_linear_svr
from oracles import svr_active_set_oracle, svr_grid_oracle


def _primal(u, b, V, c, C, eps):
    return 0.5 * u @ u + C * np.maximum(0, np.abs(c - V @ u - b) - eps).sum()


def test_centered_targets():
    c = centered_targets(16)
    assert c.sum() == 0 and c[0] == -7.5 and c[-1] == 7.5


def test_best_bias_midpoint():
    b, loss = best_bias(np.array([0.0, 1.0]), 0.1)
    assert loss == pytest.approx(0.8) and b == pytest.approx(0.5)


def test_identical_vectors_give_zero_u():
    V = np.tile(np.arange(5.0), (4, 1))
    s = solve_linear_svr(FeatureSequence(V, None), 1000.0)
    assert np.all(s.u == 0) and s.converged


def test_linear_sequence_fits_within_epsilon():
    L = 8
    V = np.zeros((L, 3))
    V[:, 0] = np.arange(1, L + 1)
    c = centered_targets(L)
    s = solve_linear_svr(FeatureSequence(V, c), 1000.0, epsilon=0.1)
    resid = np.abs(c - V @ s.u - s.b)
    assert resid.max() <= 0.1 + 1e-6
    # the exact fit u = e1 (b = -(L+1)/2) is feasible; optimum cannot be worse
    u_fit = np.array([1.0, 0.0, 0.0])
    assert s.objective <= _primal(u_fit, -(L + 1) / 2, V, c, 1000.0, 0.1) + 1e-9


@pytest.mark.parametrize("C", [1.0, 1000.0])
def test_matches_grid_oracle(C):
    rng = np.random.default_rng(11)
    c = centered_targets(4)
    done = 0
    while done < 3:
        V = rng.uniform(-2, 2, (4, 2))
        s = solve_linear_svr(FeatureSequence(V, c), C)
        if np.abs(s.u).max() > 2.9 or abs(s.b) > 2.9:
            continue
        coarse, refined = svr_grid_oracle(V, c, C, 0.1)
        assert s.objective <= coarse + 1e-9
        assert abs(s.objective - refined) < 1e-2
        done += 1


@pytest.mark.parametrize("C", [1.0, 1000.0])
def test_matches_active_set_oracle(C):
    rng = np.random.default_rng(12)
    c = centered_targets(4)
    for _ in range(4):
        V = rng.uniform(-2, 2, (4, 2))
        s = solve_linear_svr(FeatureSequence(V, c), C)
        assert s.objective == pytest.approx(svr_active_set_oracle(V, c, C, 0.1), abs=1e-6)


def test_objective_reported_and_monotone():
    rng = np.random.default_rng(2)
    V = rng.standard_normal((16, 300))
    c = centered_targets(16)
    for C in (1.0, 1000.0):
        s = solve_linear_svr(FeatureSequence(V, c), C)
        assert s.objective == pytest.approx(_primal(s.u, s.b, V, c, C, 0.1), rel=1e-10, abs=1e-10)
        assert np.all(np.diff(s.history) <= 1e-9)
        assert s.objective >= 0 and s.converged


def test_scaling_exact_fit_regime():
    # epsilon = 0, perfectly linear features: the minimiser scales as u / s
    L = 6
    V = np.outer(np.arange(1, L + 1), [1.0, 2.0])
    c = centered_targets(L)
    a = solve_linear_svr(FeatureSequence(V, c), 1e4, epsilon=0.0)
    b = solve_linear_svr(FeatureSequence(3.0 * V, c), 1e4, epsilon=0.0)
    np.testing.assert_allclose(b.u, a.u / 3.0, rtol=1e-6)


def test_errors():
    with pytest.raises(ValueError):
        solve_linear_svr(FeatureSequence(np.ones((3, 2)), None), 0.0)
    V = np.ones((3, 2))
    V[0, 0] = np.nan
    with pytest.raises(ValueError):
        solve_linear_svr(FeatureSequence(V, None), 1.0)
    with pytest.raises(ValueError):
        FeatureSequence(np.ones((1, 2)), None)
