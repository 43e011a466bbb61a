"""Classical Gallager exponents computed directly from a transition matrix.

This module never touches density matrices. It exists as an independent
reference for channels built with :func:`cqrel.channel.from_classical`:
the input distribution is optimized with SLSQP and the parameter search
uses its own grids, so agreement with :mod:`cqrel.exponents` is a genuine
cross-check.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize, minimize_scalar


def _stochastic(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if not np.allclose(P.sum(axis=1), 1.0):
        raise ValueError("rows must sum to one")
    return P


def e0(P, Q, rho: float) -> float:
    """``E_0(rho, Q) = -log2 sum_y (sum_x Q(x) P(y|x)^(1/(1+rho)))^(1+rho)``."""
    P = _stochastic(P)
    inner = np.asarray(Q, dtype=float) @ P ** (1.0 / (1.0 + rho))
    return -np.log2(np.sum(inner ** (1.0 + rho)))


def bhattacharyya(P) -> np.ndarray:
    """``B(x, x') = sum_y sqrt(P(y|x) P(y|x'))``."""
    R = np.sqrt(_stochastic(P))
    return R @ R.T


def ex_function(P, Q, rho: float) -> float:
    """``E_x(rho, Q) = -rho log2 sum_{x,x'} Q(x) Q(x') B(x, x')^(1/rho)``."""
    Q = np.asarray(Q, dtype=float)
    return -rho * np.log2(Q @ bhattacharyya(P) ** (1.0 / rho) @ Q)


def _simplex_min(f, jac, a: int, starts: int, seed: int = 0, start=None) -> tuple[float, np.ndarray]:
    rng = np.random.default_rng(seed)
    inits = [np.full(a, 1.0 / a)] + [rng.dirichlet(np.ones(a)) for _ in range(starts - 1)]
    if start is not None:
        inits.insert(0, np.asarray(start, dtype=float))
    best = (np.inf, None)
    cons = ({"type": "eq", "fun": lambda q: q.sum() - 1.0, "jac": lambda q: np.ones_like(q)},)
    for q0 in inits:
        res = minimize(f, q0, jac=jac, method="SLSQP", bounds=[(0.0, 1.0)] * a, constraints=cons,
                       options={"ftol": 1e-16, "maxiter": 1000})
        q = np.clip(res.x, 0.0, None)
        q /= q.sum()
        val = f(q)
        if val < best[0]:
            best = (val, q)
    return best


def max_e0(P, rho: float, starts: int = 2, start=None) -> tuple[float, np.ndarray]:
    """Maximize ``E_0`` over ``Q``; the underlying sum is convex in ``Q``."""
    P = _stochastic(P)
    Pr = P ** (1.0 / (1.0 + rho))
    val, q = _simplex_min(
        lambda Q: np.sum((Q @ Pr) ** (1.0 + rho)),
        lambda Q: (1.0 + rho) * Pr @ (Q @ Pr) ** rho,
        P.shape[0],
        starts,
        start=start,
    )
    return -np.log2(val), q


def max_ex(P, rho: float, starts: int = 6, start=None) -> tuple[float, np.ndarray]:
    Bp = bhattacharyya(P) ** (1.0 / rho)
    val, q = _simplex_min(lambda Q: Q @ Bp @ Q, lambda Q: 2.0 * Bp @ Q, Bp.shape[0], starts, start=start)
    return -rho * np.log2(val), q


def cutoff_rate(P) -> float:
    return max_e0(P, 1.0)[0]


def _curve(opt, rates, xs, refine_starts: int) -> np.ndarray:
    """``max(sup_x [opt(x) - x R], 0)`` for each rate, sharing one table of ``opt`` over ``xs``."""
    table = [opt(x) for x in xs]
    vals = np.array([v for v, _ in table])
    out = []
    for R in np.atleast_1d(np.asarray(rates, dtype=float)):
        k = int(np.argmax(vals - xs * R))
        lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
        q0 = table[k][1]
        res = minimize_scalar(
            lambda x: -(opt(x, refine_starts, q0)[0] - x * R),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10},
        )
        out.append(max(vals[k] - xs[k] * R, -res.fun, 0.0))
    return np.array(out)


def random_coding_curve(P, rates) -> np.ndarray:
    """``E_r(R) = max_{0<=rho<=1} [max_Q E_0(rho, Q) - rho R]`` (clamped at 0)."""
    P = _stochastic(P)
    opt = lambda r, starts=2, start=None: max_e0(P, r, starts, start)
    return _curve(opt, rates, np.linspace(1e-6, 1.0, 21), 1)


def expurgated_curve(P, rates, rho_max: float = 1e4) -> np.ndarray:
    """``E_ex(R) = sup_{rho>=1} [max_Q E_x(rho, Q) - rho R]`` (clamped at 0)."""
    P = _stochastic(P)
    opt = lambda r, starts=6, start=None: max_ex(P, r, starts, start)
    return _curve(opt, rates, np.geomspace(1.0, rho_max, 41), 2)


def random_coding_exponent(P, R: float) -> float:
    return float(random_coding_curve(P, [R])[0])


def expurgated_exponent(P, R: float, rho_max: float = 1e4) -> float:
    return float(expurgated_curve(P, [R], rho_max)[0])
