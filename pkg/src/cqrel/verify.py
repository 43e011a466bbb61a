"""Invariant suites for every module.

Each check returns ``(name, passed, detail)``. ``fast`` uses small sample
counts and runs in a few seconds; ``all`` uses the full counts.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from . import classical
from .channel import (
    bsc,
    codeword_state,
    from_classical,
    parallel_compose,
    pure2,
    random_channel,
    uniform,
)
from .decoder import (
    error_probabilities,
    fidelity_sandwich_check,
    helstrom_error,
    lemma_bounds,
    run_random_coding,
    srm_rule,
)
from .exponents import (
    capacity,
    cutoff_rate,
    expurgation_exponent_fixed_pi,
    holevo_quantity,
    minimize_G,
    mu_ex,
    mu_ex_derivatives,
    mu_rc,
    mu_rc_s_derivative,
    zero_rate_bounds,
)
from .operators import (
    matrix_power,
    random_density,
    relative_entropy,
    renyi_overlap,
    support_projector,
    tensor,
    trace_norm,
    von_neumann_entropy,
)
from .simplex import cri_residual, minimize_quadratic_form
from .simplex import _GEvaluator

Check = tuple[str, bool, str]


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _random_pi(a: int, rng) -> np.ndarray:
    return rng.dirichlet(np.ones(a))


# --- operator-core ---------------------------------------------------------

def check_power_composition(count: int) -> Check:
    rng = _rng(1)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 5))
        s = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        p, q = rng.uniform(0.1, 2.0, 2)
        err = np.max(np.abs(matrix_power(matrix_power(s, p), q) - matrix_power(s, p * q)))
        worst = max(worst, err)
    return "operators.power_composition", worst <= 1e-9, f"max error {worst:.2e}"


def check_triangle(count: int) -> Check:
    rng = _rng(2)
    worst = -np.inf
    for _ in range(count):
        d = int(rng.integers(1, 5))
        x, y = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2))
        worst = max(worst, trace_norm(x + y) - trace_norm(x) - trace_norm(y))
    return "operators.trace_norm_triangle", worst <= 1e-10, f"max excess {worst:.2e}"


def check_entropy_additivity(count: int) -> Check:
    rng = _rng(3)
    worst = 0.0
    for _ in range(count):
        s = random_density(int(rng.integers(1, 4)), rng)
        t = random_density(int(rng.integers(1, 4)), rng)
        err = abs(von_neumann_entropy(tensor(s, t)) - von_neumann_entropy(s) - von_neumann_entropy(t))
        worst = max(worst, err)
    return "operators.entropy_additivity", worst <= 1e-9, f"max error {worst:.2e}"


def check_relative_entropy(count: int) -> Check:
    rng = _rng(4)
    ok = True
    for _ in range(count):
        d = int(rng.integers(1, 4))
        s, t = random_density(d, rng), random_density(d, rng)
        val = relative_entropy(s, t)
        if val < -1e-12 or (val <= 1e-12 and np.max(np.abs(s - t)) > 1e-8):
            ok = False
        if abs(relative_entropy(s, s)) > 1e-9:
            ok = False
    return "operators.relative_entropy_nonnegative", ok, f"{count} pairs"


def check_renyi_zero(count: int) -> Check:
    rng = _rng(5)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 5))
        s = random_density(d, rng)
        t = random_density(d, rng, rank=int(rng.integers(1, d)))
        err = abs(renyi_overlap(s, t, 0.0) + np.log2(float(np.real(np.vdot(support_projector(t), s)))))
        worst = max(worst, err)
        r = float(rng.uniform(0.05, 1.0))
        t = random_density(d, rng)
        worst = max(worst, renyi_overlap(s, t, r) - r * relative_entropy(s, t))
    return "operators.renyi_overlap", worst <= 1e-9, f"max error {worst:.2e}"


# --- channel-model -----------------------------------------------------------

def check_codeword_tensor(count: int) -> Check:
    rng = _rng(6)
    worst = 0.0
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 4)), 2, rng)
        w1 = rng.integers(0, ch.alphabet_size, int(rng.integers(1, 3)))
        w2 = rng.integers(0, ch.alphabet_size, int(rng.integers(1, 3)))
        joined = codeword_state(ch, np.concatenate([w1, w2]))
        err = np.max(np.abs(joined - tensor(codeword_state(ch, w1), codeword_state(ch, w2))))
        worst = max(worst, err)
    return "channel.codeword_tensor", worst <= 1e-12, f"max error {worst:.2e}"


def check_classical_scalars(count: int) -> Check:
    rng = _rng(7)
    worst = 0.0
    for _ in range(count):
        a, b = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        P = rng.dirichlet(np.ones(b), size=a)
        ch = from_classical(P)
        pi = _random_pi(a, rng)
        s_rc, s_ex = rng.uniform(0.05, 1.0), rng.uniform(1.0, 20.0)
        errs = [
            mu_rc(ch, pi, s_rc) - classical.e0(P, pi, s_rc),
            mu_ex(ch, pi, s_ex) - classical.ex_function(P, pi, s_ex),
        ]
        worst = max(worst, max(abs(e) for e in errs))
    return "channel.classical_reduction_scalars", worst <= 1e-9, f"max error {worst:.2e}"


def check_classical_curves() -> Check:
    P = np.array([[0.9, 0.1], [0.1, 0.9]])
    ch = from_classical(P)
    from .exponents import expurgation_exponent, random_coding_exponent

    rates = np.array([0.05, 0.15, 0.3])
    er = random_coding_exponent(ch, rates).values
    ee = expurgation_exponent(ch, rates).values
    err = max(
        np.max(np.abs(er - classical.random_coding_curve(P, rates))),
        np.max(np.abs(ee - classical.expurgated_curve(P, rates))),
        abs(cutoff_rate(ch) - classical.cutoff_rate(P)),
    )
    return "channel.classical_reduction_curves", err <= 1e-6, f"max error {err:.2e}"


# --- exponents -------------------------------------------------------------

def check_chi_dominates(count: int) -> Check:
    rng = _rng(8)
    worst = -np.inf
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(2, 5)), rng)
        pi = _random_pi(ch.alphabet_size, rng)
        s = float(rng.choice([0.1, 0.5, 1.0, rng.uniform(1e-3, 1.0)]))
        worst = max(worst, mu_rc(ch, pi, s) / s - holevo_quantity(ch, pi))
    return "exponents.chi_dominates_mu_over_s", worst <= 1e-8, f"max excess {worst:.2e}"


def check_mu_one(count: int) -> Check:
    rng = _rng(9)
    worst = 0.0
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(2, 5)), rng)
        pi = _random_pi(ch.alphabet_size, rng)
        worst = max(worst, abs(mu_ex(ch, pi, 1.0) - mu_rc(ch, pi, 1.0)))
    return "exponents.mu_ex_equals_mu_at_one", worst <= 1e-10, f"max error {worst:.2e}"


def check_mu_ex_shape(count: int) -> Check:
    rng = _rng(10)
    worst_d1, worst_d2, worst_fd = np.inf, -np.inf, -np.inf
    grid = np.geomspace(1.0, 100.0, 25)
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(2, 4)), rng)
        pi = _random_pi(ch.alphabet_size, rng)
        for s in grid[::6]:
            d1, d2 = mu_ex_derivatives(ch, pi, s)
            worst_d1, worst_d2 = min(worst_d1, d1), max(worst_d2, d2)
        vals = np.array([mu_ex(ch, pi, s) for s in np.linspace(1.0, 20.0, 40)])
        worst_fd = max(worst_fd, float(np.max(vals[:-2] - 2 * vals[1:-1] + vals[2:])))
    ok = worst_d1 >= -1e-8 and worst_d2 <= 1e-8 and worst_fd <= 1e-6
    return "exponents.mu_ex_monotone_concave", ok, f"min d1 {worst_d1:.2e}, max d2 {worst_d2:.2e}, max diff2 {worst_fd:.2e}"


def check_mu_rc_monotone(count: int) -> Check:
    rng = _rng(11)
    worst = np.inf
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(2, 4)), rng)
        pi = _random_pi(ch.alphabet_size, rng)
        for s in (0.01, 0.3, 0.7, 1.0):
            worst = min(worst, mu_rc_s_derivative(ch, pi, s))
    return "exponents.mu_rc_nondecreasing", worst >= -1e-8, f"min derivative {worst:.2e}"


def check_ex_linear_segment(count: int) -> Check:
    rng = _rng(12)
    worst = 0.0
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 4)), int(rng.integers(2, 4)), rng)
        pi = _random_pi(ch.alphabet_size, rng)
        lo, m1 = mu_ex_derivatives(ch, pi, 1.0)[0], mu_ex(ch, pi, 1.0)
        if m1 - lo <= 1e-9:
            continue
        for R in np.linspace(max(lo, 1e-6), m1, 4):
            worst = max(worst, abs(expurgation_exponent_fixed_pi(ch, pi, R, clamp=False) - (m1 - R)))
    return "exponents.ex_linear_segment", worst <= 1e-8, f"max error {worst:.2e}"


def check_overlap_order(count: int) -> Check:
    rng = _rng(13)
    worst = -np.inf
    ordered = True
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 4)), int(rng.integers(2, 4)), rng)
        worst = max(worst, float(np.max(ch.overlaps - ch.abs_overlaps)))
        z = zero_rate_bounds(ch, starts=4)
        ordered &= z.lower <= z.upper + 1e-8
    return "exponents.overlap_ordering", worst <= 1e-10 and ordered, f"max excess {worst:.2e}"


def _max_mu(ch, s):
    return -np.log2(minimize_G(ch, s).optimum)


def check_additivity() -> Check:
    rng = _rng(14)
    c1, c2 = random_channel(2, 2, rng), random_channel(2, 2, rng)
    joint = parallel_compose(c1, c2)
    worst = max(abs(_max_mu(joint, s) - _max_mu(c1, s) - _max_mu(c2, s)) for s in (0.5, 1.0))
    return "exponents.parallel_additivity", worst <= 1e-6, f"max error {worst:.2e}"


# --- simplex-opt -------------------------------------------------------------

def check_cri(count: int) -> Check:
    rng = _rng(15)
    worst_res, worst_id = 0.0, 0.0
    for _ in range(count):
        ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(2, 4)), rng)
        s = float(rng.uniform(0.05, 1.0))
        rep = minimize_G(ch, s)
        G, t = _GEvaluator(ch, s)(rep.pi)
        worst_res = max(worst_res, cri_residual(G, t, rep.pi))
        pi = _random_pi(ch.alphabet_size, rng)
        G, t = _GEvaluator(ch, s)(pi)
        worst_id = max(worst_id, abs(pi @ t - G))
    ok = worst_res <= 1e-7 and worst_id <= 1e-10
    return "simplex.kkt_certificate", ok, f"max residual {worst_res:.2e}, identity error {worst_id:.2e}"


def check_quadratic_determinism() -> Check:
    rng = _rng(16)
    X = rng.normal(size=(4, 4))
    F = X + X.T
    r1 = minimize_quadratic_form(F, starts=8, seed=3)
    r2 = minimize_quadratic_form(F, starts=8, seed=3)
    same = r1.optimum == r2.optimum and np.array_equal(r1.pi, r2.pi)
    Q = X @ X.T
    conv = minimize_quadratic_form(Q, convex_hint=False, starts=8, seed=0)
    vals = [v for v, *_ in conv.starts]
    spread = max(vals) - min(vals)
    return "simplex.multistart", same and spread <= 1e-7, f"convex start spread {spread:.2e}"


# --- decoder-sim -------------------------------------------------------------

def check_lemma(count: int) -> Check:
    rng = _rng(17)
    worst = -np.inf
    for k in range(count):
        d, M = int(rng.integers(1, 4)), int(rng.integers(2, 7))
        states = [random_density(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(M)]
        r = (0.25, 0.5, 0.75, 1.0)[k % 4]
        p = error_probabilities(states, srm_rule(states, r))
        worst = max(worst, float(np.max(p - lemma_bounds(states, r))))
    return "decoder.lemma_bound", worst <= 1e-9, f"max excess {worst:.2e}"


def check_completeness(count: int) -> Check:
    rng = _rng(18)
    worst = 0.0
    for _ in range(count):
        d, M = int(rng.integers(1, 4)), int(rng.integers(2, 5))
        r = float(rng.uniform(0.1, 1.0))
        states = [random_density(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(M)]
        rule = srm_rule(states, r)
        proj = support_projector(sum(matrix_power(s, r) for s in states))
        worst = max(worst, float(np.max(np.abs(sum(rule) - proj))))
        worst = max(worst, -min(float(np.linalg.eigvalsh(x)[0]) for x in rule))
    return "decoder.rule_completeness", worst <= 1e-9, f"max error {worst:.2e}"


def check_helstrom_floor(count: int) -> Check:
    rng = _rng(19)
    worst = -np.inf
    for _ in range(count):
        d = int(rng.integers(1, 4))
        s, t = random_density(d, rng), random_density(d, rng)
        p = error_probabilities([s, t], srm_rule([s, t], 0.5)).mean()
        h = helstrom_error(s, t)
        f = trace_norm(matrix_power(s, 0.5) @ matrix_power(t, 0.5))
        worst = max(worst, h - p, 0.25 * f * f - h)
    return "decoder.helstrom_floor", worst <= 1e-9, f"max excess {worst:.2e}"


def check_sandwich(count: int) -> Check:
    rng = _rng(20)
    bad = 0
    for _ in range(count):
        rank = int(rng.integers(1, 3))
        bad += not fidelity_sandwich_check(random_density(2, rng, rank), random_density(2, rng, rank)).holds
    return "decoder.fidelity_sandwich", bad == 0, f"{bad} violations in {count}"


def check_determinism() -> Check:
    a = run_random_coding(bsc(0.1), uniform(2), 2, 2, trials=20, seed=5)
    b = run_random_coding(bsc(0.1), uniform(2), 2, 2, trials=20, seed=5)
    return "decoder.determinism", a.to_dict() == b.to_dict(), "two identical runs"


def check_fixtures() -> Check:
    ch = pure2(0.5)
    errs = [
        abs(holevo_quantity(ch, uniform(2)) - 0.8112781244591328),
        abs(cutoff_rate(ch) - 0.6780719051126377),
        abs(capacity(pure2(0.0)) - 1.0),
        abs(helstrom_error(*ch.states) - 0.0669872981077807),
    ]
    return "fixtures.pure2", max(errs) <= 1e-6, f"max error {max(errs):.2e}"


def _suite(scale: int) -> list[Callable[[], Check]]:
    n = scale
    return [
        lambda: check_power_composition(20 * n),
        lambda: check_triangle(50 * n),
        lambda: check_entropy_additivity(20 * n),
        lambda: check_relative_entropy(20 * n),
        lambda: check_renyi_zero(20 * n),
        lambda: check_codeword_tensor(10 * n),
        lambda: check_classical_scalars(20 * n),
        check_classical_curves,
        lambda: check_chi_dominates(50 * n),
        lambda: check_mu_one(20 * n),
        lambda: check_mu_ex_shape(4 * n),
        lambda: check_mu_rc_monotone(10 * n),
        lambda: check_ex_linear_segment(5 * n),
        lambda: check_overlap_order(5 * n),
        check_additivity,
        lambda: check_cri(10 * n),
        check_quadratic_determinism,
        lambda: check_lemma(50 * n),
        lambda: check_completeness(20 * n),
        lambda: check_helstrom_floor(50 * n),
        lambda: check_sandwich(200 * n),
        check_determinism,
        check_fixtures,
    ]


SUITES = {"fast": 1, "all": 20}


def run_suite(name: str = "fast") -> list[Check]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = []
    for check in _suite(SUITES[name]):
        try:
            name, passed, detail = check()
            out.append((name, bool(passed), detail))
        except Exception as exc:  # a crash is a failure, not an abort
            out.append((getattr(check, "__name__", "check"), False, f"{type(exc).__name__}: {exc}"))
    return out
