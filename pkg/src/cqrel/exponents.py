"""Error-exponent functionals of a classical-quantum channel.

All public values are in bits. Internally some quantities are computed with
natural logarithms and converted on the way out.

Two families of functions appear throughout:

* ``mu_rc(pi, s) = -log2 Tr (sum_i pi_i S_i^(1/(1+s)))^(1+s)`` drives the
  random-coding exponent, with ``s`` in ``(0, 1]``;
* ``mu_ex(pi, s) = -s log2 sum_ik pi_i pi_k (Tr sqrt(S_i) sqrt(S_k))^(1/s)``
  drives the expurgation exponent, with ``s >= 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .channel import CqChannel, distribution
from .errors import ConjectureModeError, ValidationError
from .operators import (
    LN2,
    SUPPORT_REL,
    matrix_function,
    matrix_power,
    support_threshold,
    von_neumann_entropy,
)
from .parallel import ordered_map
from .simplex import (
    OptimizationReport,
    maximize_concave_over_simplex,
    minimize_G,
    minimize_quadratic_form,
)

S_MAX = 1e4
RC_GRID = 512
EX_GRID = 128
QF_STARTS = 20


@dataclass(frozen=True)
class ExponentRecord:
    rate: float
    value: float
    s_opt: float
    pi_opt: np.ndarray
    raw: float  # unclamped supremum


@dataclass
class ExponentCurve:
    records: list = field(default_factory=list)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r.rate for r in self.records])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    @property
    def s_opt(self) -> np.ndarray:
        return np.array([r.s_opt for r in self.records])

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass(frozen=True)
class BoundReport:
    value: float
    kind: str
    M: int
    n: int
    s: float
    pi: np.ndarray
    c: float
    proved_regime: bool

    @property
    def display_value(self) -> float:
        return min(self.value, 1.0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "display_value": self.display_value,
            "M": self.M,
            "n": self.n,
            "s": self.s,
            "pi": [float(x) for x in self.pi],
            "c": self.c,
            "proved_regime": self.proved_regime,
        }


class ZeroRateBounds(NamedTuple):
    lower: float
    upper: float

    @property
    def infinite(self) -> bool:
        return np.isinf(self.lower) and np.isinf(self.upper)


def _pi(ch: CqChannel, pi) -> np.ndarray:
    return distribution(pi, ch.alphabet_size)


def _overlap_tol(ch: CqChannel) -> float:
    return ch.dim * SUPPORT_REL


def average_state(ch: CqChannel, pi) -> np.ndarray:
    pi = _pi(ch, pi)
    return np.tensordot(pi, np.array(ch.states), axes=1)


# ---------------------------------------------------------------------------
# chi and capacity
# ---------------------------------------------------------------------------

def holevo_quantity(ch: CqChannel, pi) -> float:
    """``H(sum_i pi_i S_i) - sum_i pi_i H(S_i)`` in bits."""
    pi = _pi(ch, pi)
    avg = average_state(ch, pi)
    own = sum(p * von_neumann_entropy(s) for p, s in zip(pi, ch.states) if p > 0)
    return max(von_neumann_entropy(avg) - own, 0.0)


def _divergences_to_average(ch: CqChannel, entropies: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """``H(S_j, sum_l pi_l S_l)`` for every letter j, in bits."""
    avg = average_state(ch, pi)
    w, v = np.linalg.eigh(avg)
    w = np.clip(w, 0.0, None)
    on = w > support_threshold(w)
    log_w = np.zeros_like(w)
    log_w[on] = np.log2(w[on])
    out = np.empty(ch.alphabet_size)
    for j, s in enumerate(ch.states):
        diag = np.real(np.einsum("ij,ik,kj->j", v.conj(), s, v))
        leak = float(np.sum(diag[~on]))
        if leak > max(ch.dim * SUPPORT_REL, 1e-14):
            out[j] = np.inf
        else:
            out[j] = -entropies[j] - float(diag[on] @ log_w[on])
    return out


def capacity_report(ch: CqChannel, tol: float = 1e-11) -> OptimizationReport:
    """Maximize chi over input distributions.

    The ascent direction uses ``d chi / d pi_j = H(S_j, avg) + const``, so the
    returned ``kkt_residual`` certifies ``H(S_j, avg) <= chi + residual``.
    """
    entropies = np.array([von_neumann_entropy(s) for s in ch.states])
    return maximize_concave_over_simplex(
        lambda p: holevo_quantity(ch, p),
        lambda p: _divergences_to_average(ch, entropies, p),
        ch.alphabet_size,
        tol=tol,
    )


def capacity(ch: CqChannel) -> float:
    return capacity_report(ch).optimum


# ---------------------------------------------------------------------------
# Random-coding function mu and its s-derivative
# ---------------------------------------------------------------------------

def G_value(ch: CqChannel, pi, s: float) -> float:
    """``Tr (sum_i pi_i S_i^(1/(1+s)))^(1+s)``."""
    pi = _pi(ch, pi)
    q = 1.0 / (1.0 + s)
    A = sum(p * matrix_power(x, q) for p, x in zip(pi, ch.states) if p > 0)
    return float(np.real(np.trace(matrix_power(A, 1.0 + s))))


def mu_rc(ch: CqChannel, pi, s: float) -> float:
    """Random-coding function in bits.

    Proved statements use ``0 < s <= 1``; larger ``s`` is accepted for
    exploration.
    """
    if s <= 0:
        raise ValidationError(f"s must be positive, got {s}")
    return -np.log2(G_value(ch, pi, s))


def mu_rc_s_derivative(ch: CqChannel, pi, s: float) -> float:
    """Closed-form ``d mu_rc / d s`` in bits.

    Uses ``G'(s) = -Tr A^s sum_i pi_i S_i^q (log S_i^q - log A)`` with
    ``A = sum_i pi_i S_i^q`` and ``q = 1/(1+s)``. Logarithms are taken on
    the supports, so ``0 log 0 = 0``.
    """
    if s <= 0:
        raise ValidationError(f"s must be positive, got {s}")
    pi = _pi(ch, pi)
    q = 1.0 / (1.0 + s)
    A = np.zeros((ch.dim, ch.dim), dtype=np.complex128)
    terms = []
    for p, x in zip(pi, ch.states):
        if p <= 0:
            continue
        A = A + p * matrix_power(x, q)
        terms.append((p, matrix_function(x, lambda w: w ** q * (q * np.log(w)))))
    w, v = np.linalg.eigh((A + A.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    on = w > support_threshold(w)
    ws = np.zeros_like(w)
    ws[on] = w[on] ** s
    As = (v * ws) @ v.conj().T
    t1 = sum(p * float(np.real(np.vdot(m, As))) for p, m in terms)
    t2 = float(np.sum(w[on] ** (1.0 + s) * np.log(w[on])))
    G = float(np.sum(ws * w))
    return (t1 - t2) / (G * LN2)


# ---------------------------------------------------------------------------
# Expurgation function mu_ex
# ---------------------------------------------------------------------------

def _powered(b: np.ndarray, s: float, tol: float) -> np.ndarray:
    out = np.zeros_like(b)
    on = b > tol
    out[on] = b[on] ** (1.0 / s)
    return out


def _mu_ex(b: np.ndarray, pi: np.ndarray, s: float, tol: float) -> float:
    return -s * np.log2(float(pi @ _powered(b, s, tol) @ pi))


def _mu_ex_derivs(b: np.ndarray, pi: np.ndarray, s: float, tol: float) -> tuple[float, float]:
    w = np.outer(pi, pi)
    on = (b > tol) & (w > 0)
    F_ik = b[on] ** (1.0 / s)
    L = np.log(b[on]) / s
    wk = w[on]
    F = float(wk @ F_ik)
    B = float(wk @ (F_ik * L))
    C = float(wk @ (F_ik * L * L))
    first = B / F - np.log(F)
    second = (B * B - C * F) / (s * F * F)
    return first / LN2, second / LN2


def _mu_ex_limit(b: np.ndarray, pi: np.ndarray, tol: float) -> float:
    w = np.outer(pi, pi)
    pos = w > 0
    if np.any(b[pos] <= tol):
        return float("inf")
    return float(-np.sum(w[pos] * np.log2(b[pos])))


def mu_ex(ch: CqChannel, pi, s: float) -> float:
    """Expurgation function in bits; the proved regime is ``s >= 1``."""
    if s <= 0:
        raise ValidationError(f"s must be positive, got {s}")
    return _mu_ex(ch.overlaps, _pi(ch, pi), s, _overlap_tol(ch))


def mu_ex_limit(ch: CqChannel, pi) -> float:
    """``mu_ex(pi, s)`` as ``s -> inf``; infinite if a weighted pair of states is orthogonal."""
    return _mu_ex_limit(ch.overlaps, _pi(ch, pi), _overlap_tol(ch))


def mu_ex_derivatives(ch: CqChannel, pi, s: float) -> tuple[float, float]:
    """First and second ``s``-derivatives of ``mu_ex``, closed form, in bits.

    With ``F_ik = b_ik^(1/s)`` and ``F = sum pi_i pi_k F_ik``::

        first  = F^-1 sum pi_i pi_k F_ik (log F_ik - log F)
        second = (s F^2)^-1 [(sum w F_ik log F_ik)^2 - F sum w F_ik (log F_ik)^2]

    Pairs with zero overlap drop out of the sums.
    """
    if s <= 0:
        raise ValidationError(f"s must be positive, got {s}")
    return _mu_ex_derivs(ch.overlaps, _pi(ch, pi), s, _overlap_tol(ch))


# ---------------------------------------------------------------------------
# Random-coding exponent
# ---------------------------------------------------------------------------

def rc_s_grid(size: int = RC_GRID) -> np.ndarray:
    """Grid on (0, 1], log-spaced near zero and linear above 0.1."""
    k = max(size // 4, 2)
    return np.unique(np.concatenate([np.geomspace(1e-4, 0.1, k), np.linspace(0.1, 1.0, size - k + 1)]))


def _max_mu_rc(ch: CqChannel, s: float, start=None) -> tuple[float, np.ndarray]:
    rep = minimize_G(ch, s, start=start)
    return -np.log2(rep.optimum), rep.pi


def random_coding_exponent(
    ch: CqChannel,
    rates,
    grid_size: int = RC_GRID,
    clamp: bool = True,
) -> ExponentCurve:
    """``E_r(R) = max_pi sup_{0<s<=1} [mu_rc(pi, s) - s R]`` on a grid of rates.

    ``max_pi mu_rc`` is tabulated on a dense ``s`` grid and the best bracket is
    refined with a bounded scalar search. Concavity in ``s`` is never assumed.
    """
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValidationError("rates must be non-negative")
    grid = rc_s_grid(grid_size)
    table = []
    start = None
    for s in grid:
        val, start = _max_mu_rc(ch, s, start)
        table.append((val, start))
    best = np.array([t[0] for t in table])

    def one(R: float) -> ExponentRecord:
        obj = best - grid * R
        k = int(np.argmax(obj))
        cand = (float(obj[k]), float(grid[k]), table[k][1])
        lo = grid[k - 1] if k > 0 else grid[0] * 1e-2
        hi = grid[k + 1] if k + 1 < grid.size else grid[k]
        if hi > lo:
            def neg(s):
                return -(_max_mu_rc(ch, s, table[k][1])[0] - s * R)

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            if -res.fun > cand[0]:
                val, pi = _max_mu_rc(ch, res.x, table[k][1])
                cand = (val - res.x * R, float(res.x), pi)
        raw, s_opt, pi = cand
        return ExponentRecord(float(R), max(raw, 0.0) if clamp else raw, s_opt, pi, raw)

    return ExponentCurve(ordered_map(one, rates))


def conjecture_probe(ch: CqChannel, pi, s_steps: int = 200) -> dict:
    """Second differences of ``mu_rc(pi, .)`` on a uniform grid of (0, 1].

    Concavity in ``s`` is only conjectured for general states; this reports
    what the numbers show and proves nothing.
    """
    pi = _pi(ch, pi)
    s = np.linspace(1.0 / s_steps, 1.0, s_steps)
    mu = np.array([mu_rc(ch, pi, x) for x in s])
    d2 = mu[:-2] - 2 * mu[1:-1] + mu[2:]
    worst = int(np.argmax(d2)) if d2.size else 0
    return {
        "s_steps": s_steps,
        "max_second_difference": float(d2[worst]) if d2.size else 0.0,
        "at_s": float(s[worst + 1]) if d2.size else float("nan"),
        "concave_on_grid": bool(np.all(d2 <= 1e-12)),
        "pi": [float(x) for x in pi],
    }


# ---------------------------------------------------------------------------
# Expurgation exponent
# ---------------------------------------------------------------------------

def _ex_fixed(b, pi, R, s_max, tol) -> tuple[float, float]:
    """``(raw value, s_opt)`` of ``sup_{s>=1} [mu_ex(pi, s) - s R]``."""
    d1, _ = _mu_ex_derivs(b, pi, 1.0, tol)
    if d1 <= R:
        return _mu_ex(b, pi, 1.0, tol) - R, 1.0
    if _mu_ex_derivs(b, pi, s_max, tol)[0] > R:
        return _mu_ex_limit(b, pi, tol), float("inf")
    u = brentq(lambda u: _mu_ex_derivs(b, pi, np.exp(u), tol)[0] - R, 0.0, np.log(s_max), xtol=1e-14)
    s = float(np.exp(u))
    return _mu_ex(b, pi, s, tol) - s * R, s


def expurgation_exponent_fixed_pi(
    ch: CqChannel, pi, R: float, s_max: float = S_MAX, clamp: bool = True
) -> float:
    """``E_ex(pi, R) = sup_{s>=1} [mu_ex(pi, s) - s R]`` for ``R > 0``.

    ``mu_ex`` is concave in ``s``, so the supremum sits where its derivative
    equals ``R``; that point is found by bisection. When the derivative is
    still above ``R`` at ``s_max`` the limit value ``mu_ex_limit`` is
    returned. At ``R = 0`` call :func:`mu_ex_limit` directly.
    """
    if R <= 0:
        raise ValidationError("R must be positive; use mu_ex_limit for R = +0")
    raw, _ = _ex_fixed(ch.overlaps, _pi(ch, pi), R, s_max, _overlap_tol(ch))
    return max(raw, 0.0) if clamp else raw


def _tangent_psd(F: np.ndarray) -> bool:
    a = F.shape[0]
    P = np.eye(a) - 1.0 / a
    ev = np.linalg.eigvalsh(P @ F @ P)
    return bool(ev[0] >= -1e-12 * max(np.max(np.abs(F)), 1e-300))


def _min_form(F: np.ndarray, start=None, starts: int = QF_STARTS, seed: int = 0) -> OptimizationReport:
    return minimize_quadratic_form(F, convex_hint=_tangent_psd(F), starts=starts, seed=seed, start=start)


def expurgation_exponent(
    ch: CqChannel,
    rates,
    grid_size: int = EX_GRID,
    s_max: float = S_MAX,
    starts: int = QF_STARTS,
    seed: int = 0,
    clamp: bool = True,
) -> ExponentCurve:
    """``E_ex(R) = max_pi sup_{s>=1} [mu_ex(pi, s) - s R]`` on a grid of rates.

    For fixed ``s`` the inner maximization over ``pi`` is a quadratic-form
    minimization; it is tabulated on a log grid of ``s`` in ``[1, s_max]``
    and refined around the best grid point. The reported value is then
    recomputed exactly as ``E_ex(pi, R)`` for the candidate distributions, so
    every value is achieved by the recorded ``pi``.
    """
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ValidationError("rates must be positive; use zero_rate_bounds at R = +0")
    b = ch.overlaps
    tol = _overlap_tol(ch)
    grid = np.geomspace(1.0, s_max, grid_size)
    table = []
    start = None
    for s in grid:
        rep = _min_form(_powered(b, s, tol), start, starts, seed)
        start = rep.pi
        table.append((-s * np.log2(rep.optimum), rep.pi))
    best = np.array([t[0] for t in table])
    limit_pi = _zero_rate_lower(ch, starts, seed)[1]

    def max_mu_ex(s, start):
        # local refinement around a grid point that was already multi-started
        rep = _min_form(_powered(b, s, tol), start, 1, seed)
        return -s * np.log2(rep.optimum), rep.pi

    def one(R: float) -> ExponentRecord:
        obj = best - grid * R
        k = int(np.argmax(obj))
        cands = [table[k][1], limit_pi]
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda s: -(max_mu_ex(s, table[k][1])[0] - s * R),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-10 * hi},
            )
            cands.append(max_mu_ex(res.x, table[k][1])[1])
        scored = [(_ex_fixed(b, p, R, s_max, tol), p) for p in cands]
        (raw, s_opt), pi = max(scored, key=lambda t: t[0][0])
        return ExponentRecord(float(R), max(raw, 0.0) if clamp else raw, s_opt, pi, raw)

    return ExponentCurve(ordered_map(one, rates))


# ---------------------------------------------------------------------------
# Cutoff rate, zero-rate bounds, finite-M bounds
# ---------------------------------------------------------------------------

def cutoff_report(ch: CqChannel) -> tuple[float, OptimizationReport]:
    """Cutoff rate ``-log2 min_pi Tr (sum_i pi_i sqrt(S_i))^2`` and its optimizer."""
    rep = minimize_quadratic_form(ch.overlaps, convex_hint=True)
    return -np.log2(rep.optimum), rep


def cutoff_rate(ch: CqChannel) -> float:
    return cutoff_report(ch)[0]


def quadratic_min_2x2(F) -> tuple[float, np.ndarray]:
    """Closed-form minimum of ``pi^T F pi`` over the 2-letter simplex."""
    F = np.asarray(F, dtype=float)
    den = F[0, 0] + F[1, 1] - 2 * F[0, 1]
    cands = [0.0, 1.0]
    if den > 0:
        cands.append(min(1.0, max(0.0, (F[1, 1] - F[0, 1]) / den)))
    p = min(cands, key=lambda t: np.array([t, 1 - t]) @ F @ np.array([t, 1 - t]))
    pi = np.array([p, 1 - p])
    return float(pi @ F @ pi), pi


def _zero_rate_lower(ch: CqChannel, starts=QF_STARTS, seed=0) -> tuple[float, np.ndarray]:
    b = ch.overlaps
    a = ch.alphabet_size
    if np.any(ch.abs_overlaps <= _overlap_tol(ch)):
        return float("inf"), np.full(a, 1.0 / a)
    rep = _min_form(np.log2(b), None, starts, seed)
    return -rep.optimum, rep.pi


def zero_rate_bounds(ch: CqChannel, starts: int = QF_STARTS, seed: int = 0) -> ZeroRateBounds:
    """Lower and upper limits on the reliability function at zero rate.

    ``lower = -min_pi sum pi_i pi_k log2 Tr sqrt(S_i) sqrt(S_k)`` and
    ``upper = -2 min_pi sum pi_i pi_k log2 Tr |sqrt(S_i) sqrt(S_k)|``. Both are
    infinite when some pair of states has ``S_i S_k = 0``.
    """
    if np.any(ch.abs_overlaps <= _overlap_tol(ch)):
        return ZeroRateBounds(float("inf"), float("inf"))
    lower = _zero_rate_lower(ch, starts, seed)[0]
    upper = -2.0 * _min_form(np.log2(ch.abs_overlaps), None, starts, seed).optimum
    return ZeroRateBounds(float(lower), float(upper))


def finite_M_bounds(
    ch: CqChannel,
    pi,
    M: int,
    n: int,
    s: float,
    kind: str,
    conjecture: bool = False,
    c: float | None = None,
) -> BoundReport:
    """Error-probability bound for a code of ``M`` words and length ``n``.

    ``kind="rc"``: ``c (M-1)^s G(pi, s)^n``. Proved for ``s = 1`` with
    ``c = 1``; ``s < 1`` needs ``conjecture=True`` and defaults to ``c = 2``.

    ``kind="ex"``: ``(4 (M-1) [sum pi_i pi_k b_ik^(1/s)]^n)^s`` for ``s >= 1``.

    The raw value is kept even when it exceeds 1.
    """
    if M < 2 or n < 1:
        raise ValidationError("need M >= 2 and n >= 1")
    pi = _pi(ch, pi)
    if kind == "rc":
        if not 0 < s <= 1:
            raise ValidationError(f"random-coding bound needs 0 < s <= 1, got {s}")
        if s < 1 and not conjecture:
            raise ConjectureModeError("random-coding bound with s < 1 is conjectural; pass conjecture=True")
        if c is None:
            c = 1.0 if s == 1 else 2.0
        value = c * (M - 1) ** s * G_value(ch, pi, s) ** n
        proved = s == 1 and c >= 1.0
    elif kind == "ex":
        if s < 1:
            raise ValidationError(f"expurgation bound needs s >= 1, got {s}")
        c = 4.0
        q = float(pi @ _powered(ch.overlaps, s, _overlap_tol(ch)) @ pi)
        value = (4.0 * (M - 1) * q ** n) ** s
        proved = True
    else:
        raise ValidationError(f"kind must be 'rc' or 'ex', got {kind!r}")
    return BoundReport(float(value), kind, M, n, float(s), pi, float(c), proved)
