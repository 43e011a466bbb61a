"""Exact small-instance decoding experiments.

The decoder is the square-root measurement

    X_j = (sum_l S_l^r)^(-1/2) S_j^r (sum_l S_l^r)^(-1/2)

with the inverse square root taken on the support of ``sum_l S_l^r``. The
part of the space outside that support (``I - sum_j X_j``) is an
inconclusive outcome and counts as an error for every message.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel import CqChannel, distribution, product_operator, sample_codebook, trial_seed
from .errors import DimensionCapError, ValidationError
from .exponents import finite_M_bounds
from .operators import DIM_CAP, matrix_power, trace_norm
from .parallel import ordered_map

LEMMA_TOL = 1e-9
SELECTION_RULE = "smallest-beta"


def srm_rule(states: Sequence[np.ndarray], r: float = 0.5) -> list[np.ndarray]:
    """Square-root decision operators for ``states`` with exponent ``r`` in (0, 1]."""
    if len(states) < 2:
        raise ValidationError("a decision rule needs at least two states")
    if not 0 < r <= 1:
        raise ValidationError(f"r must lie in (0, 1], got {r}")
    dims = {s.shape[0] for s in states}
    if len(dims) != 1:
        raise ValidationError("states must share one dimension")
    powered = [matrix_power(s, r) for s in states]
    return _srm_from_powers(powered)


def _srm_from_powers(powered: Sequence[np.ndarray]) -> list[np.ndarray]:
    root = matrix_power(sum(powered), -0.5)
    out = []
    for p in powered:
        x = root @ p @ root
        out.append((x + x.conj().T) / 2)
    return out


def error_probabilities(states: Sequence[np.ndarray], rule: Sequence[np.ndarray]) -> np.ndarray:
    """``P_j = 1 - Tr S_j X_j``, clipped to [0, 1]."""
    if len(states) != len(rule):
        raise ValidationError("one decision operator per state is required")
    p = np.array([1.0 - float(np.real(np.vdot(x, s))) for s, x in zip(states, rule)])
    return np.clip(p, 0.0, 1.0)


def _lemma_from_powers(low: Sequence[np.ndarray], high: Sequence[np.ndarray]) -> np.ndarray:
    total = sum(high)
    return np.array(
        [float(np.real(np.vdot(lo, total - hi))) for lo, hi in zip(low, high)]
    )


def lemma_bounds(states: Sequence[np.ndarray], r: float = 0.5) -> np.ndarray:
    """``b_j = Tr S_j^(1-r) sum_{l != j} S_l^r``; the square-root rule has ``P_j <= b_j``.

    At ``r = 1`` the factor ``S_j^0`` is the support projector of ``S_j``,
    which is the ``r -> 1`` limit of the bound.
    """
    if not 0 < r <= 1:
        raise ValidationError(f"r must lie in (0, 1], got {r}")
    return _lemma_from_powers([matrix_power(s, 1 - r) for s in states], [matrix_power(s, r) for s in states])


def helstrom_error(s, t) -> float:
    """Minimal error for two equiprobable states, ``(1 - ||S - T||_1 / 2) / 2``."""
    s = np.asarray(s)
    t = np.asarray(t)
    if s.shape != t.shape:
        raise ValidationError("states must have the same dimension")
    return min(max(0.5 * (1.0 - 0.5 * trace_norm(s - t)), 0.0), 0.5)


class SandwichCheck(NamedTuple):
    lower: float  # 2 (1 - Tr sqrt(S) sqrt(T))
    distance: float  # Tr |S - T|
    upper: float  # 2 sqrt(1 - (Tr sqrt(S) sqrt(T))^2)
    upper_abs: float  # 2 sqrt(1 - (Tr |sqrt(S) sqrt(T)|)^2)
    holds: bool


def fidelity_sandwich_check(s, t, tol: float = 1e-9) -> SandwichCheck:
    """Evaluate the trace-distance bounds in terms of the two overlap quantities."""
    rs, rt = matrix_power(s, 0.5), matrix_power(t, 0.5)
    f1 = min(float(np.real(np.vdot(rs, rt))), 1.0)
    f2 = min(trace_norm(rs @ rt), 1.0)
    dist = trace_norm(np.asarray(s) - np.asarray(t))
    lower = 2.0 * (1.0 - f1)
    upper = 2.0 * np.sqrt(max(1.0 - f1 * f1, 0.0))
    upper_abs = 2.0 * np.sqrt(max(1.0 - f2 * f2, 0.0))
    holds = lower <= dist + tol and dist <= upper_abs + tol and upper_abs <= upper + tol
    return SandwichCheck(lower, dist, upper, upper_abs, bool(holds))


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

class _Letters:
    """Per-letter operator powers, reused to build product states cheaply."""

    def __init__(self, ch: CqChannel, n: int, cap: int):
        if ch.dim ** n > cap:
            raise DimensionCapError(f"block length n={n} with d={ch.dim} exceeds dimension cap {cap}")
        self.ch = ch
        self.cap = cap
        self._cache: dict[float, list] = {}

    def powers(self, p: float) -> list:
        if p not in self._cache:
            self._cache[p] = [matrix_power(s, p) for s in self.ch.states]
        return self._cache[p]

    def words(self, codebook: np.ndarray, p: float) -> list:
        ops = self.powers(p)
        return [product_operator(ops, w, self.cap) for w in codebook]


@dataclass
class TrialStats:
    seed: int
    index: int
    p: np.ndarray
    p_bar: float
    p_max: float
    lemma: np.ndarray
    rc_bound: float
    violations: int


@dataclass
class RandomCodingSummary:
    n: int
    M: int
    r: float
    trials: int
    seed: int
    pi: list
    mean_p_bar: float
    stderr_p_bar: float
    mean_p_max: float
    lemma_violation_fraction: float
    rc_bound: float
    bound_holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _one_rc_trial(ch, pi, n, M, r, seed, index, letters: _Letters, rc_bound) -> TrialStats:
    book = sample_codebook(ch, pi, M, n, trial_seed(seed, index))
    states = letters.words(book, 1.0)
    high = letters.words(book, r)
    low = letters.words(book, 1.0 - r)
    rule = _srm_from_powers(high)
    p = error_probabilities(states, rule)
    lemma = _lemma_from_powers(low, high)
    bad = int(np.sum(p > lemma + LEMMA_TOL))
    return TrialStats(seed, index, p, float(p.mean()), float(p.max()), lemma, rc_bound, bad)


def run_random_coding(
    ch: CqChannel,
    pi,
    n: int,
    M: int,
    r: float = 0.5,
    trials: int = 1000,
    seed: int = 0,
    cap: int = DIM_CAP,
    keep_trials: bool = False,
):
    """Random codebooks decoded with the square-root rule.

    The ensemble mean of the average error is compared with the ``s = 1``
    random-coding bound ``(M-1) [Tr (sum_i pi_i sqrt(S_i))^2]^n``; the bound
    is taken to hold when the mean is within three standard errors below it.
    That bound is derived for ``r = 1/2``. Returns the summary, and the
    per-trial records as well when ``keep_trials`` is set.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    if M < 2:
        raise ValidationError("need M >= 2")
    if not 0 < r <= 1:
        raise ValidationError(f"r must lie in (0, 1], got {r}")
    pi = distribution(pi, ch.alphabet_size)
    letters = _Letters(ch, n, cap)
    for p in (1.0, r, 1.0 - r):
        letters.powers(p)
    bound = finite_M_bounds(ch, pi, M, n, 1.0, "rc").value
    stats = ordered_map(lambda k: _one_rc_trial(ch, pi, n, M, r, seed, k, letters, bound), range(trials))
    p_bar = np.array([t.p_bar for t in stats])
    stderr = float(p_bar.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    mean = float(p_bar.mean())
    summary = RandomCodingSummary(
        n=n,
        M=M,
        r=float(r),
        trials=trials,
        seed=seed,
        pi=[float(x) for x in pi],
        mean_p_bar=mean,
        stderr_p_bar=stderr,
        mean_p_max=float(np.mean([t.p_max for t in stats])),
        lemma_violation_fraction=float(sum(t.violations for t in stats) / (trials * M)),
        rc_bound=bound,
        bound_holds=bool(mean <= bound + 3 * stderr),
    )
    return (summary, stats) if keep_trials else summary


@dataclass
class ExpurgationSummary:
    n: int
    M: int
    s: float
    trials: int
    seed: int
    pi: list
    min_kept_bound: float
    best_trial: int
    best_p_max: float
    ex_bound: float
    holds: bool
    p_max_holds: bool
    selection_rule: str = SELECTION_RULE

    def to_dict(self) -> dict:
        return asdict(self)


def pairwise_overlaps(roots: Sequence[np.ndarray]) -> np.ndarray:
    """``Tr sqrt(S_j) sqrt(S_l)`` for every pair of codeword states."""
    m = len(roots)
    out = np.ones((m, m))
    for j in range(m):
        for l in range(j + 1, m):
            out[j, l] = out[l, j] = max(float(np.real(np.vdot(roots[j], roots[l]))), 0.0)
    return out


def expurgated_subcode(overlaps: np.ndarray, M: int, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Keep the ``M`` words with the smallest ``beta_j = sum_{l != j} overlap_jl^(1/s)``.

    Ties go to the lower index. Returns ``(kept indices, beta)``, where beta is
    computed over the full sampled code.
    """
    powered = overlaps ** (1.0 / s)
    np.fill_diagonal(powered, 0.0)
    beta = powered.sum(axis=1)
    kept = np.sort(np.argsort(beta, kind="stable")[:M])
    return kept, beta


def expurgate_trial(
    ch: CqChannel,
    pi,
    n: int,
    M: int,
    s: float,
    trials: int = 1000,
    seed: int = 0,
    cap: int = DIM_CAP,
) -> ExpurgationSummary:
    """Sample ``2M - 1`` words, keep the best ``M`` and certify their maximal error.

    Each kept word satisfies ``P_j <= beta_j^s`` under the square-root rule
    with ``r = 1/2``; the trial's certified value is the largest such bound.
    The summary reports the smallest certified value over trials, whether it
    is below the expurgation bound, and the true maximal error of the
    square-root rule on the best trial's kept code.
    """
    if s < 1:
        raise ValidationError(f"expurgation needs s >= 1, got {s}")
    if M < 2:
        raise ValidationError("need M >= 2")
    pi = distribution(pi, ch.alphabet_size)
    letters = _Letters(ch, n, cap)
    letters.powers(0.5)
    big = 2 * M - 1

    def one(k):
        book = sample_codebook(ch, pi, big, n, trial_seed(seed, k))
        kept, beta = expurgated_subcode(pairwise_overlaps(letters.words(book, 0.5)), M, s)
        return float(np.max(beta[kept]) ** s), book[kept]

    results = ordered_map(one, range(trials))
    values = np.array([v for v, _ in results])
    best = int(np.argmin(values))
    code = results[best][1]
    p = error_probabilities(letters.words(code, 1.0), srm_rule(letters.words(code, 1.0), 0.5))
    bound = finite_M_bounds(ch, pi, M, n, s, "ex").value
    return ExpurgationSummary(
        n=n,
        M=M,
        s=float(s),
        trials=trials,
        seed=seed,
        pi=[float(x) for x in pi],
        min_kept_bound=float(values[best]),
        best_trial=best,
        best_p_max=float(p.max()),
        ex_bound=bound,
        holds=bool(values[best] <= bound),
        p_max_holds=bool(p.max() <= bound),
    )
