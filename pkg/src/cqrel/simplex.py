"""Optimization over the probability simplex with optimality certificates.

The workhorse is a pairwise conditional-gradient method: each step moves
mass from the active vertex with the largest gradient component to the
vertex with the smallest. The spread between those two components bounds
the duality gap, so the stopping rule doubles as a KKT certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .channel import CqChannel
from .errors import OptimizationError, ValidationError
from .operators import is_diagonal, matrix_power, support_threshold

KKT_TOL = 1e-7


@dataclass
class OptimizationReport:
    optimum: float
    pi: np.ndarray
    kkt_residual: float
    iterations: int
    starts_used: int = 1
    converged: bool = True
    starts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "optimum": self.optimum,
            "pi": [float(x) for x in self.pi],
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "starts_used": self.starts_used,
            "converged": self.converged,
        }


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def kkt_residual(pi: np.ndarray, grad: np.ndarray, active_tol: float = 1e-9) -> float:
    """Distance from the minimization KKT conditions on the simplex.

    At a minimizer every gradient component is at least the common value
    ``c = pi . grad`` and equals it wherever ``pi_j > 0``.
    """
    c = float(pi @ grad)
    below = float(np.max(np.maximum(0.0, c - grad)))
    on = pi > active_tol
    spread = float(np.max(np.abs(grad[on] - c))) if np.any(on) else 0.0
    return below + spread


def _finite(g: np.ndarray) -> np.ndarray:
    if np.any(np.isnan(g)):
        raise OptimizationError("gradient evaluated to NaN")
    return np.clip(g, -1e300, 1e300)


def conditional_gradient(
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float,
    max_iter: int = 10_000,
    step: Callable[[np.ndarray, np.ndarray, float], float] | None = None,
    objective: Callable[[np.ndarray], float] | None = None,
) -> tuple[np.ndarray, float, int, bool]:
    """Minimize a function over the simplex given its gradient.

    Returns ``(x, gap, iterations, converged)`` where ``gap`` is the pairwise
    gap at the final iterate. Ties in vertex selection go to the lowest index.
    Without a ``step`` rule the line search solves for a zero of the
    directional derivative, which assumes convexity along the segment.
    """
    x = np.array(x0, dtype=float)
    gap = np.inf
    for it in range(max_iter + 1):
        if objective is not None and not np.isfinite(objective(x)):
            raise OptimizationError(f"objective is not finite at iterate {it}")
        g = _finite(grad(x))
        j_min = int(np.argmin(g))
        active = np.flatnonzero(x > 0)
        j_away = int(active[np.argmax(g[active])])
        gap = float(g[j_away] - g[j_min])
        if gap <= tol:
            return x, max(gap, 0.0), it, True
        if it == max_iter:
            break
        d = np.zeros_like(x)
        d[j_min] += 1.0
        d[j_away] -= 1.0
        gmax = float(x[j_away])
        if step is not None:
            gamma = step(x, d, gmax)
        else:
            def slope(t):
                gt = _finite(grad(x + t * d))
                return float(gt[j_min] - gt[j_away])

            if slope(gmax) <= 0:
                gamma = gmax
            else:
                gamma = brentq(slope, 0.0, gmax, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        if gamma <= 0:
            break
        x = x + gamma * d
        if gamma >= gmax:
            x[j_away] = 0.0
        x = np.clip(x, 0.0, None)
        x /= x.sum()
    return x, max(gap, 0.0), max_iter, False


def maximize_concave_over_simplex(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    a: int,
    tol: float = 1e-10,
    start: np.ndarray | None = None,
    max_iter: int = 10_000,
) -> OptimizationReport:
    """Conditional-gradient ascent of a concave function over the simplex.

    ``kkt_residual`` is the pairwise gap at the returned point.
    """
    x0 = np.full(a, 1.0 / a) if start is None else np.asarray(start, dtype=float)
    if a == 1:
        x0 = np.ones(1)
    x, gap, it, ok = conditional_gradient(
        lambda p: -np.asarray(gradient(p), dtype=float),
        x0,
        tol,
        max_iter,
        objective=objective,
    )
    value = float(objective(x))
    if not np.isfinite(value):
        raise OptimizationError("objective is not finite at the returned point")
    return OptimizationReport(value, x, gap, it, 1, ok)


class _GEvaluator:
    """``G(pi) = Tr (sum_i pi_i S_i^q)^(1+s)`` with ``q = 1/(1+s)`` and its trace terms."""

    def __init__(self, ch: CqChannel, s: float):
        self.s = s
        q = 1.0 / (1.0 + s)
        powers = [matrix_power(x, q) for x in ch.states]
        self.diagonal = all(is_diagonal(p) for p in powers)
        if self.diagonal:
            self.powers = np.array([np.real(np.diag(p)) for p in powers])
        else:
            self.powers = np.array(powers)

    def __call__(self, pi: np.ndarray) -> tuple[float, np.ndarray]:
        """Return ``(G, t)`` with ``t_j = Tr S_j^q A^s``."""
        s = self.s
        if self.diagonal:
            w = np.clip(pi @ self.powers, 0.0, None)
            on = w > support_threshold(w)
            ws = np.zeros_like(w)
            ws[on] = w[on] ** s
            return float(np.sum(ws * w)), self.powers @ ws
        A = np.tensordot(pi, self.powers, axes=1)
        w, v = np.linalg.eigh((A + A.conj().T) / 2)
        w = np.clip(w, 0.0, None)
        on = w > support_threshold(w)
        ws = np.zeros_like(w)
        ws[on] = w[on] ** s
        As = (v * ws) @ v.conj().T
        t = np.real(np.einsum("kij,ji->k", self.powers, As))
        return float(np.sum(ws * w)), t


def cri_residual(G: float, t: np.ndarray, pi: np.ndarray, active_tol: float = 1e-9) -> float:
    """Residual of the optimality criterion for minimizing G.

    ``Tr S_j^q A^s >= Tr A^(1+s)`` for every j, with equality where
    ``pi_j > active_tol``.
    """
    below = float(np.max(np.maximum(0.0, G - t)))
    on = pi > active_tol
    return below + float(np.max(np.abs(t[on] - G)))


def minimize_G(
    ch: CqChannel,
    s: float,
    start: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> OptimizationReport:
    """Minimize ``G(pi, s)`` over input distributions (convex in ``pi``).

    Maximizing ``mu(pi, s) = -log G(pi, s)`` is the same problem.
    """
    if s <= 0:
        raise ValidationError(f"s must be positive, got {s}")
    a = ch.alphabet_size
    if a == 1:
        return OptimizationReport(1.0, np.ones(1), 0.0, 0, 1, True)
    ev = _GEvaluator(ch, s)
    x0 = np.full(a, 1.0 / a) if start is None else np.array(start, dtype=float)
    x, _, it, ok = conditional_gradient(lambda p: (1.0 + s) * ev(p)[1], x0, tol, max_iter)
    G, t = ev(x)
    res = cri_residual(G, t, x)
    return OptimizationReport(G, x, res, it, 1, ok and res <= KKT_TOL)


def _quadratic_step(F: np.ndarray):
    def step(x, d, gmax):
        slope0 = 2.0 * float(d @ F @ x)
        curv = float(d @ F @ d)
        if curv <= 0:
            return gmax
        return min(gmax, max(0.0, -slope0 / (2.0 * curv)))

    return step


def project_simplex_rows(V: np.ndarray) -> np.ndarray:
    """Row-wise :func:`project_simplex`."""
    a = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    cond = U - css / np.arange(1, a + 1) > 0
    rho = a - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def _kkt_rows(X: np.ndarray, Gr: np.ndarray, active_tol: float = 1e-9) -> np.ndarray:
    c = np.sum(X * Gr, axis=1, keepdims=True)
    below = np.max(np.maximum(0.0, c - Gr), axis=1)
    spread = np.max(np.where(X > active_tol, np.abs(Gr - c), 0.0), axis=1)
    return below + spread


def _projected_gradient(F: np.ndarray, X0: np.ndarray, tol: float, max_iter: int = 20_000) -> tuple[np.ndarray, np.ndarray]:
    """Projected gradient from every row of ``X0`` at once.

    Returns the final points and the iteration count of each start.
    """
    # pi^T 1 1^T pi is constant on the simplex, so only the tangent part of F sets the step
    a = F.shape[0]
    P = np.eye(a) - 1.0 / a
    L = 2.0 * max(np.linalg.norm(P @ F @ P, 2), 1e-300)
    X = X0.copy()
    iters = np.zeros(X.shape[0], dtype=int)
    live = np.ones(X.shape[0], dtype=bool)
    for it in range(1, max_iter + 1):
        Xl = X[live]
        nxt = project_simplex_rows(Xl - 2.0 * Xl @ F / L)
        done = (np.max(np.abs(nxt - Xl), axis=1) <= 1e-15) | (_kkt_rows(nxt, 2.0 * nxt @ F) <= tol)
        X[live] = nxt
        idx = np.flatnonzero(live)
        iters[idx] = it
        live[idx[done]] = False
        if not live.any():
            break
    return X, iters


def minimize_quadratic_form(
    F,
    convex_hint: bool | None = None,
    starts: int = 20,
    seed: int = 0,
    tol: float = 1e-10,
    start: np.ndarray | None = None,
) -> OptimizationReport:
    """Minimize ``pi^T F pi`` over the simplex.

    With ``convex_hint`` true (``F`` PSD) a single conditional-gradient run
    is used. Otherwise projected gradient is run from ``start`` (if given),
    the vertices, the uniform point and Dirichlet(1) draws, ``starts`` runs in
    all, and the best value is returned (ties go to the earliest start).
    ``None`` decides by checking the spectrum of ``F``.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValidationError("quadratic form must be a square matrix")
    if np.max(np.abs(F - F.T), initial=0.0) > 1e-10:
        raise ValidationError("quadratic form must be symmetric")
    F = (F + F.T) / 2
    a = F.shape[0]
    if a == 1:
        return OptimizationReport(float(F[0, 0]), np.ones(1), 0.0, 0, 1, True)
    if convex_hint is None:
        scale = max(np.max(np.abs(F)), 1e-300)
        convex_hint = bool(np.linalg.eigvalsh(F)[0] >= -1e-12 * scale)

    if convex_hint:
        x0 = np.full(a, 1.0 / a) if start is None else np.array(start, dtype=float)
        x, _, it, ok = conditional_gradient(lambda p: 2.0 * F @ p, x0, tol, 100_000, step=_quadratic_step(F))
        res = kkt_residual(x, 2.0 * F @ x)
        return OptimizationReport(float(x @ F @ x), x, res, it, 1, ok and res <= KKT_TOL)

    rng = np.random.default_rng(seed)
    inits = [] if start is None else [np.array(start, dtype=float)]
    inits += [np.eye(a)[k] for k in range(a)] + [np.full(a, 1.0 / a)]
    while len(inits) < starts:
        inits.append(rng.dirichlet(np.ones(a)))
    inits = inits[: max(starts, 1)]
    X, iters = _projected_gradient(F, np.array(inits), tol)
    records = [(float(x @ F @ x), x, int(k), kkt_residual(x, 2.0 * F @ x)) for x, k in zip(X, iters)]
    best = min(range(len(records)), key=lambda k: (records[k][0], k))
    value, x, it, res = records[best]
    return OptimizationReport(value, x, res, sum(r[2] for r in records), len(records), res <= KKT_TOL, records)
