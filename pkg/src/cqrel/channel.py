"""Classical-quantum channels, input distributions and codebooks.

Symbols are 0-based internally (the letter written ``i`` in 1-based notation
is stored as ``i - 1``). Codebooks are ``uint8`` arrays of shape ``(M, n)``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property, reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionCapError, ValidationError
from .operators import DIM_CAP, density, matrix_power, random_density, tensor, trace_norm

MAX_ALPHABET = 256


@dataclass(frozen=True, eq=False)
class CqChannel:
    """A finite list of signal states on a common Hilbert space."""

    states: tuple
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(density(s) for s in self.states))
        if len(self.states) < 1:
            raise ValidationError("a channel needs at least one input letter")
        if len(self.states) > MAX_ALPHABET:
            raise ValidationError(f"alphabet size {len(self.states)} exceeds {MAX_ALPHABET}")
        dims = {s.shape[0] for s in self.states}
        if len(dims) != 1:
            raise ValidationError(f"states have different dimensions {sorted(dims)}")

    @property
    def alphabet_size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    @cached_property
    def sqrt_states(self) -> tuple:
        return tuple(matrix_power(s, 0.5) for s in self.states)

    @cached_property
    def overlaps(self) -> np.ndarray:
        """Matrix of ``Tr sqrt(S_i) sqrt(S_k)``."""
        r = self.sqrt_states
        a = self.alphabet_size
        out = np.empty((a, a))
        for i in range(a):
            for k in range(i, a):
                out[i, k] = out[k, i] = np.real(np.vdot(r[i], r[k]))
        np.clip(out, 0.0, 1.0, out=out)
        return out

    @cached_property
    def abs_overlaps(self) -> np.ndarray:
        """Matrix of ``Tr |sqrt(S_i) sqrt(S_k)|``."""
        r = self.sqrt_states
        a = self.alphabet_size
        out = np.empty((a, a))
        for i in range(a):
            for k in range(i, a):
                out[i, k] = out[k, i] = trace_norm(r[i] @ r[k])
        return out

    def is_classical(self) -> bool:
        return all(not np.any(s - np.diag(np.diag(s))) for s in self.states)


def distribution(p, a: int | None = None) -> np.ndarray:
    """Validate a probability vector and renormalize it to sum to one."""
    v = np.asarray(p, dtype=float).ravel()
    if a is not None and v.size != a:
        raise ValidationError(f"distribution has {v.size} entries, alphabet has {a}")
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValidationError("distribution must be a finite non-empty vector")
    if np.any(v < -1e-12):
        raise ValidationError("distribution has negative entries")
    v = np.clip(v, 0.0, None)
    total = v.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"distribution sums to {total:.12g}")
    out = v / total
    out.setflags(write=False)
    return out


def uniform(a: int) -> np.ndarray:
    return distribution(np.full(a, 1.0 / a))


def from_classical(P, name: str | None = None) -> CqChannel:
    """Channel whose states are ``diag(P[i, :])`` for a row-stochastic ``P``."""
    m = np.asarray(P, dtype=float)
    if m.ndim != 2:
        raise ValidationError("transition matrix must be two-dimensional")
    if np.any(m < -1e-12) or np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-9):
        raise ValidationError("transition matrix rows must be probability vectors")
    m = np.clip(m, 0.0, None)
    m = m / m.sum(axis=1, keepdims=True)
    return CqChannel(tuple(np.diag(row).astype(np.complex128) for row in m), name=name)


def bsc(p: float) -> CqChannel:
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"crossover probability must lie in [0, 1], got {p}")
    return from_classical([[1 - p, p], [p, 1 - p]], name=f"bsc({p:g})")


def pure2(eps: float) -> CqChannel:
    """Two pure qubit states (1, 0) and (eps, sqrt(1 - eps^2))."""
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"overlap must lie in [0, 1], got {eps}")
    psi1 = np.array([1.0, 0.0])
    psi2 = np.array([eps, np.sqrt(1.0 - eps * eps)])
    return CqChannel((np.outer(psi1, psi1), np.outer(psi2, psi2)), name=f"pure2({eps:g})")


FAMILIES = {
    "bsc": (bsc, ("p",)),
    "pure2": (pure2, ("eps",)),
    "classical": (from_classical, ("P",)),
}


def family(name: str, **params) -> CqChannel:
    if name not in FAMILIES:
        raise ValidationError(f"unknown channel family {name!r}; known: {sorted(FAMILIES)}")
    fn, keys = FAMILIES[name]
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValidationError(f"family {name!r} needs parameters {missing}")
    return fn(*(params[k] for k in keys))


_FAMILY_RE = re.compile(r"^\s*(\w+)\s*\(\s*([^()]*)\)\s*$")


def parse_family(spec: str) -> CqChannel:
    """Parse ``"bsc(0.1)"`` or ``"pure2(eps=0.5)"``."""
    m = _FAMILY_RE.match(spec)
    if not m:
        raise ValidationError(f"cannot parse channel family {spec!r}")
    name, body = m.group(1), m.group(2)
    if name not in FAMILIES or name == "classical":
        raise ValidationError(f"family {name!r} cannot be given inline")
    keys = FAMILIES[name][1]
    params = {}
    for pos, item in enumerate(x for x in body.split(",") if x.strip()):
        key, _, val = item.rpartition("=")
        key = key.strip() or keys[pos]
        try:
            params[key] = float(val)
        except ValueError as exc:
            raise ValidationError(f"bad parameter {item!r} in {spec!r}") from exc
    return family(name, **params)


def _decode_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValidationError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_from_dict(doc: dict) -> CqChannel:
    if "family" in doc:
        return family(doc["family"], **doc.get("params", {}))
    try:
        d = int(doc["dim"])
        states = [_decode_matrix(s) for s in doc["states"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed channel document: {exc}") from exc
    for s in states:
        if s.shape != (d, d):
            raise ValidationError(f"state of shape {s.shape} does not match dim {d}")
    return CqChannel(tuple(states), name=doc.get("name"))


def channel_to_dict(ch: CqChannel) -> dict:
    doc = {
        "dim": ch.dim,
        "states": [[[[float(z.real), float(z.imag)] for z in row] for row in s] for s in ch.states],
    }
    if ch.name is not None:
        doc["name"] = ch.name
    return doc


def load_channel(path) -> CqChannel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read channel file {path}: {exc}") from exc
    return channel_from_dict(doc)


def save_channel(ch: CqChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=1))


def product_operator(ops: Sequence[np.ndarray], word, cap: int = DIM_CAP) -> np.ndarray:
    """``ops[w_1] (x) ... (x) ops[w_n]``."""
    word = np.asarray(word).ravel()
    d = ops[0].shape[0]
    if d ** len(word) > cap:
        raise DimensionCapError(f"block length n={len(word)} with d={d} exceeds dimension cap {cap}")
    return reduce(lambda x, y: tensor(x, y, cap), (ops[i] for i in word))


def codeword_state(ch: CqChannel, word, cap: int = DIM_CAP) -> np.ndarray:
    word = np.asarray(word).ravel()
    if word.size == 0:
        raise ValidationError("codeword must have at least one symbol")
    if np.any(word >= ch.alphabet_size) or np.any(word < 0):
        raise ValidationError("codeword symbol outside the alphabet")
    return product_operator(ch.states, word, cap)


def sample_codebook(ch: CqChannel, pi, M: int, n: int, seed) -> np.ndarray:
    """Draw ``M`` words of length ``n`` with i.i.d. symbols distributed as ``pi``."""
    if M < 1 or n < 1:
        raise ValidationError("need M >= 1 and n >= 1")
    pi = distribution(pi, ch.alphabet_size)
    rng = np.random.default_rng(seed)
    return rng.choice(ch.alphabet_size, size=(M, n), p=pi).astype(np.uint8)


def trial_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed for trial ``index``, independent of the order trials are run in."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def parallel_compose(ch1: CqChannel, ch2: CqChannel, cap: int = DIM_CAP) -> CqChannel:
    """Two channels used side by side; letter ``(i, j)`` has index ``i * a2 + j``."""
    if ch1.dim * ch2.dim > cap:
        raise DimensionCapError(f"composed dimension {ch1.dim * ch2.dim} exceeds cap {cap}")
    states = tuple(tensor(s, t, cap) for s in ch1.states for t in ch2.states)
    name = f"{ch1.name}x{ch2.name}" if ch1.name and ch2.name else None
    return CqChannel(states, name=name)


def random_channel(a: int, d: int, rng: np.random.Generator, rank: int | None = None) -> CqChannel:
    return CqChannel(tuple(random_density(d, rng, rank) for _ in range(a)))
