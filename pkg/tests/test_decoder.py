import numpy as np
import pytest

from cqrel.channel import CqChannel, bsc, from_classical, pure2, random_channel, uniform
from cqrel.decoder import (
    SELECTION_RULE,
    error_probabilities,
    expurgate_trial,
    expurgated_subcode,
    fidelity_sandwich_check,
    helstrom_error,
    lemma_bounds,
    run_random_coding,
    srm_rule,
)
from cqrel.errors import DimensionCapError, ValidationError
from cqrel.operators import matrix_power, random_density, random_pure, support_projector, trace_norm


def test_srm_orthogonal_pure_states():
    states = [np.diag(np.eye(3)[k]) for k in range(3)]
    rule = srm_rule(states, 0.5)
    for s, x in zip(states, rule):
        assert np.allclose(x, s)
    assert np.allclose(error_probabilities(states, rule), 0)


def test_srm_identical_states(rng):
    s = random_density(3, rng, rank=2)
    rule = srm_rule([s, s], 0.5)
    half = support_projector(s) / 2
    assert np.allclose(rule[0], half, atol=1e-10) and np.allclose(rule[1], half, atol=1e-10)
    assert np.allclose(error_probabilities([s, s], rule), 0.5)


def test_srm_completeness(rng):
    for _ in range(30):
        d, M = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        r = float(rng.uniform(0.1, 1.0))
        states = [random_density(d, rng, rank=int(rng.integers(1, d + 1))) for _ in range(M)]
        rule = srm_rule(states, r)
        proj = support_projector(sum(matrix_power(s, r) for s in states))
        assert np.max(np.abs(sum(rule) - proj)) <= 1e-9
        for x in rule:
            assert np.linalg.eigvalsh(x)[0] >= -1e-9
        assert np.linalg.eigvalsh(sum(rule))[-1] <= 1 + 1e-8


def test_srm_errors(rng):
    s = random_density(2, rng)
    with pytest.raises(ValidationError):
        srm_rule([s], 0.5)
    with pytest.raises(ValidationError):
        srm_rule([s, s], 0.0)
    with pytest.raises(ValidationError):
        srm_rule([s, random_density(3, rng)], 0.5)
    with pytest.raises(ValidationError):
        error_probabilities([s, s], [s])


def test_error_probabilities_projector_rule(rng):
    states = [np.diag([0.5, 0.5]), np.diag([0.2, 0.8]), np.diag([0.9, 0.1])]
    rule = [np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))]
    assert np.allclose(error_probabilities(states, rule), [0, 1, 1])


def test_lemma_examples():
    e0, e1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert np.allclose(lemma_bounds([e0, e1], 0.5), [0, 0])
    psi = np.outer([0.6, 0.8], [0.6, 0.8])
    assert np.allclose(lemma_bounds([psi, psi], 0.5), [1, 1])
    with pytest.raises(ValidationError):
        lemma_bounds([psi, psi], 1.5)


def test_lemma_holds_random_qubits(rng):
    for _ in range(100):
        states = [random_density(2, rng, rank=int(rng.integers(1, 3))) for _ in range(3)]
        for r in (0.25, 0.5, 0.75, 1.0):
            p = error_probabilities(states, srm_rule(states, r))
            assert np.all(p <= lemma_bounds(states, r) + 1e-9)


def test_lemma_r_one_uses_support_projector(rng):
    states = [random_density(3, rng, rank=1) for _ in range(2)]
    b = lemma_bounds(states, 1.0)
    want = np.real(np.trace(support_projector(states[0]) @ states[1]))
    assert b[0] == pytest.approx(want, abs=1e-12)


def test_helstrom_examples(rng):
    s = random_density(2, rng)
    assert helstrom_error(s, s) == pytest.approx(0.5)
    assert helstrom_error(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(0.0)
    ch = pure2(0.5)
    assert helstrom_error(*ch.states) == pytest.approx(0.066987298108, abs=1e-9)
    with pytest.raises(ValidationError):
        helstrom_error(np.eye(2) / 2, np.eye(3) / 3)


def test_helstrom_is_floor_for_srm(rng):
    for _ in range(50):
        s, t = random_density(2, rng), random_density(2, rng)
        p = error_probabilities([s, t], srm_rule([s, t], 0.5)).mean()
        h = helstrom_error(s, t)
        assert p >= h - 1e-9
        f = trace_norm(matrix_power(s, 0.5) @ matrix_power(t, 0.5))
        assert h >= 0.25 * f * f - 1e-9


def test_sandwich_examples(rng):
    s = random_density(2, rng)
    c = fidelity_sandwich_check(s, s)
    assert c.lower == pytest.approx(0, abs=1e-7) and c.distance == pytest.approx(0, abs=1e-12)
    assert c.holds
    c = fidelity_sandwich_check(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert (c.lower, c.distance, c.upper, c.upper_abs) == pytest.approx((2, 2, 2, 2))
    assert c.holds


def test_sandwich_random_pairs(rng):
    for _ in range(500):
        s = random_pure(2, rng) if rng.random() < 0.3 else random_density(2, rng)
        t = random_density(2, rng)
        assert fidelity_sandwich_check(s, t).holds


def test_random_coding_orthogonal():
    ch = from_classical(np.eye(2))
    summary = run_random_coding(ch, uniform(2), 1, 2, trials=50, seed=1)
    # a collision (both words equal) is the only source of error
    assert summary.mean_p_bar <= 0.5 and summary.lemma_violation_fraction == 0.0


def test_random_coding_bsc():
    summary = run_random_coding(bsc(0.1), uniform(2), 2, 2, trials=1000, seed=0)
    assert summary.rc_bound == pytest.approx(0.64)
    assert summary.mean_p_bar <= 0.64
    assert summary.lemma_violation_fraction == 0.0
    assert summary.bound_holds


def test_random_coding_point_mass_pure_orthogonal():
    ch = from_classical(np.eye(3))
    s, stats = run_random_coding(ch, [0.5, 0.5, 0.0], 1, 2, trials=5, seed=2, keep_trials=True)
    assert len(stats) == 5 and all(0 <= t.p_bar <= 1 for t in stats)
    for t in stats:
        assert t.p_bar == pytest.approx(t.p.mean())


def test_random_coding_deterministic(monkeypatch):
    a = run_random_coding(pure2(0.5), uniform(2), 2, 4, trials=30, seed=9)
    monkeypatch.setenv("CQREL_THREADS", "3")
    b = run_random_coding(pure2(0.5), uniform(2), 2, 4, trials=30, seed=9)
    assert a.to_dict() == b.to_dict()
    c = run_random_coding(pure2(0.5), uniform(2), 2, 4, trials=30, seed=10)
    assert c.to_dict() != a.to_dict()


def test_random_coding_errors():
    with pytest.raises(DimensionCapError):
        run_random_coding(bsc(0.1), uniform(2), 20, 2, trials=1)
    with pytest.raises(ValidationError):
        run_random_coding(bsc(0.1), uniform(2), 1, 1, trials=1)
    with pytest.raises(ValidationError):
        run_random_coding(bsc(0.1), uniform(2), 1, 2, trials=0)


def test_expurgated_subcode_ties_and_order():
    ov = np.array([[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]])
    kept, beta = expurgated_subcode(ov, 2, 1.0)
    assert list(kept) == [0, 1] and np.allclose(beta, 1.0)


def test_expurgate_examples():
    ch = from_classical(np.eye(4))
    # orthogonal alphabet with 4 letters and n = 1: some trials draw distinct words
    summary = expurgate_trial(ch, uniform(4), 1, 2, 1.0, trials=50, seed=0)
    assert summary.min_kept_bound == pytest.approx(0.0)
    s = np.diag([0.3, 0.7])
    same = CqChannel((s, s))
    summary = expurgate_trial(same, uniform(2), 1, 2, 1.0, trials=3, seed=0)
    assert summary.min_kept_bound == pytest.approx(2.0)
    assert summary.ex_bound == pytest.approx(4.0)
    assert summary.holds and summary.selection_rule == SELECTION_RULE


def test_expurgate_bsc():
    summary = expurgate_trial(bsc(0.1), uniform(2), 3, 4, 2.0, trials=1000, seed=0)
    assert summary.min_kept_bound <= summary.ex_bound
    assert summary.holds and summary.p_max_holds
    with pytest.raises(ValidationError):
        expurgate_trial(bsc(0.1), uniform(2), 3, 4, 0.5, trials=1)


def test_pairwise_floor(rng):
    ch = random_channel(2, 2, rng)
    words = [np.array([0, 1]), np.array([1, 1]), np.array([1, 0])]
    from cqrel.channel import codeword_state

    states = [codeword_state(ch, w) for w in words]
    p_max = error_probabilities(states, srm_rule(states, 0.5)).max()
    floor = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            f = trace_norm(matrix_power(states[i], 0.5) @ matrix_power(states[j], 0.5))
            floor = max(floor, 0.25 * f * f)
    assert p_max >= floor - 1e-9
