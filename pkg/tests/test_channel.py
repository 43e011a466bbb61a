import json

import numpy as np
import pytest

from cqrel.channel import (
    CqChannel,
    bsc,
    channel_from_dict,
    channel_to_dict,
    codeword_state,
    distribution,
    family,
    from_classical,
    load_channel,
    parallel_compose,
    parse_family,
    pure2,
    random_channel,
    sample_codebook,
    save_channel,
    trial_seed,
    uniform,
)
from cqrel.errors import DimensionCapError, ValidationError
from cqrel.exponents import capacity, mu_rc
from cqrel.operators import random_pure, tensor, von_neumann_entropy


def test_channel_validation():
    with pytest.raises(ValidationError):
        CqChannel(())
    with pytest.raises(ValidationError):
        CqChannel((np.eye(2) / 2, np.eye(3) / 3))
    with pytest.raises(ValidationError):
        CqChannel((np.diag([2.0, -1.0]),))
    ch = CqChannel((np.eye(2) / 2,))
    assert ch.alphabet_size == 1 and ch.dim == 2


def test_distribution_renormalizes_and_rejects():
    p = distribution([0.5, 0.5 + 1e-11])
    assert abs(p.sum() - 1) <= 1e-12
    for bad in ([0.5, 0.6], [1.5, -0.5], [], [np.nan, 1.0]):
        with pytest.raises(ValidationError):
            distribution(bad)
    with pytest.raises(ValidationError):
        distribution([0.5, 0.5], a=3)
    assert np.allclose(uniform(4), 0.25)


def test_from_classical_examples():
    ch = from_classical(np.eye(3))
    assert np.allclose(ch.overlaps, np.eye(3))
    b = bsc(0.1)
    assert np.allclose(b.states[0], np.diag([0.9, 0.1]))
    assert np.allclose(b.states[1], np.diag([0.1, 0.9]))
    same = from_classical([[0.3, 0.7], [0.3, 0.7]])
    assert capacity(same) == pytest.approx(0.0, abs=1e-10)
    assert b.is_classical() and not pure2(0.5).is_classical()
    with pytest.raises(ValidationError):
        from_classical([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValidationError):
        from_classical([[1.2, -0.2], [0.5, 0.5]])


def test_pure2_overlaps():
    ch = pure2(0.5)
    assert ch.overlaps[0, 1] == pytest.approx(0.25)
    assert ch.abs_overlaps[0, 1] == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        pure2(1.5)
    with pytest.raises(ValidationError):
        bsc(-0.1)


def test_codeword_state_examples(rng):
    ch = random_channel(3, 2, rng)
    assert np.allclose(codeword_state(ch, [2]), ch.states[2])
    b = from_classical([[0.9, 0.1], [0.2, 0.8]])
    got = codeword_state(b, [0, 1])
    assert np.allclose(np.diag(got), [0.9 * 0.2, 0.9 * 0.8, 0.1 * 0.2, 0.1 * 0.8])
    w = [0, 2, 1]
    assert abs(np.trace(codeword_state(ch, w)) - 1) < 1e-12
    total = sum(von_neumann_entropy(ch.states[i]) for i in w)
    assert von_neumann_entropy(codeword_state(ch, w)) == pytest.approx(total, abs=1e-9)


def test_codeword_concatenation(rng):
    ch = random_channel(3, 2, rng)
    for _ in range(10):
        w1 = rng.integers(0, 3, 2)
        w2 = rng.integers(0, 3, 1)
        joined = codeword_state(ch, np.concatenate([w1, w2]))
        assert np.max(np.abs(joined - tensor(codeword_state(ch, w1), codeword_state(ch, w2)))) <= 1e-12


def test_codeword_state_errors():
    ch = bsc(0.1)
    with pytest.raises(DimensionCapError, match="n=14"):
        codeword_state(ch, [0] * 14)
    with pytest.raises(ValidationError):
        codeword_state(ch, [2])
    with pytest.raises(ValidationError):
        codeword_state(ch, [])


def test_sample_codebook():
    ch = random_channel(3, 2, np.random.default_rng(0))
    book = sample_codebook(ch, [1, 0, 0], 5, 4, seed=3)
    assert book.dtype == np.uint8 and book.shape == (5, 4)
    assert np.all(book == 0)
    a = sample_codebook(ch, uniform(3), 6, 3, seed=11)
    b = sample_codebook(ch, uniform(3), 6, 3, seed=11)
    assert np.array_equal(a, b)
    with pytest.raises(ValidationError):
        sample_codebook(ch, uniform(3), 0, 3, seed=1)


def test_sample_codebook_frequencies():
    ch = random_channel(3, 1, np.random.default_rng(0))
    pi = np.array([0.2, 0.5, 0.3])
    book = sample_codebook(ch, pi, 1000, 100, seed=7)
    freq = np.bincount(book.ravel(), minlength=3) / book.size
    sigma = np.sqrt(pi * (1 - pi) / book.size)
    assert np.all(np.abs(freq - pi) <= 3 * sigma)


def test_trial_seeds_independent_of_order():
    first = [np.random.default_rng(trial_seed(5, k)).random() for k in range(4)]
    reverse = [np.random.default_rng(trial_seed(5, k)).random() for k in reversed(range(4))]
    assert first == reverse[::-1]
    assert len(set(first)) == 4


def test_parallel_compose_shapes_and_order(rng):
    c1 = random_channel(2, 2, rng)
    c2 = random_channel(3, 2, rng)
    joint = parallel_compose(c1, c2)
    assert joint.alphabet_size == 6 and joint.dim == 4
    assert np.allclose(joint.states[1 * 3 + 2], tensor(c1.states[1], c2.states[2]))
    with pytest.raises(DimensionCapError):
        parallel_compose(c1, c2, cap=3)


def test_compose_with_trivial_channel(rng):
    ch = random_channel(2, 2, rng)
    trivial = CqChannel((random_pure(2, rng),))
    joint = parallel_compose(ch, trivial)
    pi = np.array([0.3, 0.7])
    for s in (0.3, 1.0):
        assert mu_rc(joint, pi, s) == pytest.approx(mu_rc(ch, pi, s), abs=1e-10)


def test_json_roundtrip(tmp_path, rng):
    ch = random_channel(3, 2, rng)
    path = tmp_path / "ch.json"
    save_channel(ch, path)
    back = load_channel(path)
    for s, t in zip(ch.states, back.states):
        assert np.max(np.abs(s - t)) <= 1e-15
    doc = channel_to_dict(bsc(0.1))
    assert doc["dim"] == 2 and doc["name"] == "bsc(0.1)"
    assert doc["states"][0][0][0] == [0.9, 0.0]


def test_load_fixtures(fixtures_dir):
    explicit = load_channel(fixtures_dir / "bsc01.json")
    fam = load_channel(fixtures_dir / "bsc01_family.json")
    assert np.allclose(explicit.states[0], fam.states[0])
    assert load_channel(fixtures_dir / "pure2_05.json").overlaps[0, 1] == pytest.approx(0.25)
    for name in ("not_psd.json", "broken.json", "missing.json"):
        with pytest.raises(ValidationError):
            load_channel(fixtures_dir / name)


def test_dict_errors():
    with pytest.raises(ValidationError):
        channel_from_dict({"dim": 2})
    with pytest.raises(ValidationError):
        channel_from_dict({"dim": 3, "states": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]})
    with pytest.raises(ValidationError):
        channel_from_dict({"dim": 1, "states": [[[1]]]})
    with pytest.raises(ValidationError):
        channel_from_dict({"family": "nope"})


def test_family_parsing():
    assert np.allclose(parse_family("bsc(0.1)").states[0], np.diag([0.9, 0.1]))
    assert parse_family("pure2(eps=0.5)").overlaps[0, 1] == pytest.approx(0.25)
    assert family("classical", P=[[1, 0], [0, 1]]).alphabet_size == 2
    for bad in ("bsc", "bsc(x)", "foo(1)", "classical(1)", "bsc()"):
        with pytest.raises(ValidationError):
            parse_family(bad)


def test_random_channel_json_is_portable(tmp_path, rng):
    ch = random_channel(2, 3, rng, rank=1)
    text = json.dumps(channel_to_dict(ch))
    assert channel_from_dict(json.loads(text)).dim == 3
