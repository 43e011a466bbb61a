import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqrel.channel import CqChannel, bsc, pure2, random_channel
from cqrel.errors import OptimizationError, ValidationError
from cqrel.exponents import holevo_quantity
from cqrel.simplex import (
    KKT_TOL,
    _GEvaluator,
    cri_residual,
    kkt_residual,
    maximize_concave_over_simplex,
    minimize_G,
    minimize_quadratic_form,
    project_simplex,
)


def _grid(a, step=1e-3):
    k = int(round(1 / step))
    if a == 2:
        p = np.arange(k + 1) / k
        return np.stack([p, 1 - p], axis=1)
    pts = [(i, j, k - i - j) for i in range(k + 1) for j in range(k + 1 - i)]
    return np.array(pts, dtype=float) / k


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_project_simplex(v):
    x = project_simplex(np.array(v))
    assert np.all(x >= 0) and abs(x.sum() - 1) < 1e-12


def test_minimize_G_symmetric_channels():
    for ch in (bsc(0.1), pure2(0.5)):
        for s in (0.3, 1.0):
            rep = minimize_G(ch, s)
            assert np.allclose(rep.pi, 0.5, atol=1e-6)
            assert rep.converged and rep.kkt_residual <= KKT_TOL


def test_minimize_G_trivial_alphabet():
    rep = minimize_G(CqChannel((np.eye(2) / 2,)), 0.5)
    assert rep.optimum == 1.0 and np.array_equal(rep.pi, [1.0])
    with pytest.raises(ValidationError):
        minimize_G(bsc(0.1), 0.0)


def grid_G(ch, s, grid):
    """``G(pi, s)`` at every grid point, evaluated in one batch."""
    from cqrel.operators import matrix_power

    powers = np.array([matrix_power(x, 1 / (1 + s)) for x in ch.states])
    out = []
    for chunk in np.array_split(grid, max(len(grid) // 50_000, 1)):
        w = np.clip(np.linalg.eigvalsh(np.tensordot(chunk, powers, axes=1)), 0, None)
        out.append(np.sum(w ** (1 + s), axis=1))
    return np.concatenate(out)


def test_minimize_G_matches_dense_grid(rng):
    for a in (2, 3):
        grid = _grid(a)
        for _ in range(2):
            ch = random_channel(a, 2, rng)
            s = float(rng.uniform(0.2, 1.0))
            rep = minimize_G(ch, s)
            best = grid_G(ch, s, grid).min()
            assert rep.optimum <= best + 1e-12
            assert abs(rep.optimum - best) <= 1e-6
            assert rep.kkt_residual <= KKT_TOL


def test_cri_certificate_and_identity(rng):
    for _ in range(20):
        ch = random_channel(int(rng.integers(2, 5)), 3, rng, rank=int(rng.integers(1, 4)))
        s = float(rng.uniform(0.05, 1.0))
        rep = minimize_G(ch, s)
        ev = _GEvaluator(ch, s)
        G, t = ev(rep.pi)
        assert np.all(t >= G - 1e-7)
        on = rep.pi > 1e-9
        assert np.all(np.abs(t[on] - G) <= 1e-7)
        assert cri_residual(G, t, rep.pi) == pytest.approx(rep.kkt_residual)
        pi = rng.dirichlet(np.ones(ch.alphabet_size))
        G, t = ev(pi)
        assert abs(pi @ t - G) <= 1e-10


def test_quadratic_form_examples():
    for a in (2, 3, 5):
        rep = minimize_quadratic_form(np.eye(a), convex_hint=True)
        assert rep.optimum == pytest.approx(1 / a, abs=1e-10)
        assert np.allclose(rep.pi, 1 / a, atol=1e-6)
    rep = minimize_quadratic_form([[1, 0.25], [0.25, 1]], convex_hint=True)
    assert rep.optimum == pytest.approx(0.625, abs=1e-12)
    assert -np.log2(rep.optimum) == pytest.approx(0.678071905113, abs=1e-9)
    rep = minimize_quadratic_form(np.ones((3, 3)))
    assert rep.optimum == pytest.approx(1.0)


def test_quadratic_form_validation():
    with pytest.raises(ValidationError):
        minimize_quadratic_form([[1, 0], [0.5, 1]])
    with pytest.raises(ValidationError):
        minimize_quadratic_form(np.ones((2, 3)))
    rep = minimize_quadratic_form([[2.0]])
    assert rep.optimum == 2.0


def test_quadratic_nonconvex_multistart(rng):
    F = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    rep = minimize_quadratic_form(F, convex_hint=False, starts=10, seed=1)
    assert rep.optimum == pytest.approx(0.0, abs=1e-12)
    assert rep.starts_used == 10 and len(rep.starts) == 10
    assert rep.optimum == min(r[0] for r in rep.starts)
    grid = _grid(3, 1e-2)
    for _ in range(5):
        X = rng.uniform(0, 1, (3, 3))
        F = (X + X.T) / 2
        rep = minimize_quadratic_form(F, starts=20, seed=0)
        best = min(p @ F @ p for p in grid)
        assert rep.optimum <= best + 1e-12


def test_quadratic_reproducible_and_convex_spread(rng):
    X = rng.normal(size=(4, 4))
    F = X + X.T
    r1 = minimize_quadratic_form(F, starts=12, seed=5)
    r2 = minimize_quadratic_form(F, starts=12, seed=5)
    assert r1.optimum == r2.optimum and np.array_equal(r1.pi, r2.pi)
    Q = X @ X.T + 0.1 * np.eye(4)
    rep = minimize_quadratic_form(Q, convex_hint=False, starts=12)
    vals = [r[0] for r in rep.starts]
    assert max(vals) - min(vals) <= 1e-7
    conv = minimize_quadratic_form(Q, convex_hint=True)
    assert conv.optimum == pytest.approx(rep.optimum, abs=1e-9)


def test_quadratic_auto_detect(rng):
    X = rng.normal(size=(3, 3))
    rep = minimize_quadratic_form(X @ X.T)
    assert rep.starts_used == 1


def test_maximize_concave_examples():
    c = np.array([0.2, 0.9, 0.5])
    rep = maximize_concave_over_simplex(lambda p: float(c @ p), lambda p: c, 3)
    assert np.array_equal(rep.pi, [0, 1, 0]) and rep.optimum == pytest.approx(0.9)
    rep = maximize_concave_over_simplex(lambda p: 1.0, lambda p: np.zeros(3), 3)
    assert rep.iterations == 0 and rep.kkt_residual == 0.0 and rep.converged
    ch = pure2(0.5)
    from cqrel.exponents import capacity_report

    assert np.allclose(capacity_report(ch).pi, 0.5, atol=1e-5)


def test_maximize_concave_rejects_non_finite():
    with pytest.raises(OptimizationError):
        maximize_concave_over_simplex(lambda p: np.nan, lambda p: np.ones(2), 2)


def test_kkt_residual():
    assert kkt_residual(np.array([0.5, 0.5, 0.0]), np.array([1.0, 1.0, 2.0])) == 0.0
    assert kkt_residual(np.array([0.5, 0.5, 0.0]), np.array([1.0, 1.0, 0.5])) == pytest.approx(0.5)


def test_capacity_against_grid():
    ch = random_channel(3, 2, np.random.default_rng(4))
    from cqrel.exponents import capacity

    best = max(holevo_quantity(ch, p) for p in _grid(3, 1e-2))
    assert capacity(ch) >= best - 1e-9
