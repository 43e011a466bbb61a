"""Dense Hermitian linear algebra on small complex matrices.

Everything here works on plain ``numpy`` arrays. Validated operators are
returned read-only so they can be shared freely between threads.

Entropies and relative entropies are reported in bits.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DimensionCapError, SpectralError, ValidationError

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
SUPPORT_REL = 1e-12
DIM_CAP = 8192

LN2 = np.log(2.0)


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_square(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return its symmetrized copy."""
    m = _as_square(a)
    dev = np.max(np.abs(m - m.conj().T), initial=0.0)
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return _frozen((m + m.conj().T) / 2)


def density(a, psd_tol: float = PSD_TOL, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate ``a`` as a density operator.

    Small negative eigenvalues (above ``-psd_tol``) are clipped to zero and the
    trace is renormalized to one. Anything further off is an error.
    """
    h = hermitian(a)
    w, v = _eigh(h)
    if w[0] < -psd_tol:
        raise ValidationError(f"state has negative eigenvalue {w[0]:.3g}")
    tr = float(np.sum(w))
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"state has trace {tr:.12g}, expected 1")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        h = (v * w) @ v.conj().T
        h = (h + h.conj().T) / 2
        tr = float(np.sum(w))
    return _frozen(np.array(h / tr))


def is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a[~np.eye(a.shape[0], dtype=bool)])


def _eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigen-solver failed on a {h.shape[0]}x{h.shape[0]} matrix") from exc


def spectral_decompose(h) -> SpectralDecomposition:
    """Eigenpairs in descending order.

    Each eigenvector is rotated so that its first nonzero component is real
    and positive, which makes the output deterministic.
    """
    m = hermitian(h)
    w, v = _eigh(m)
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, k] = col / ph
    return SpectralDecomposition(_frozen(w), _frozen(v))


def support_threshold(eigenvalues: np.ndarray, rel: float = SUPPORT_REL) -> float:
    """Eigenvalues at or below this value are treated as outside the support."""
    top = float(np.max(eigenvalues, initial=0.0))
    return len(eigenvalues) * rel * max(top, 0.0)


def _check_psd(w: np.ndarray) -> np.ndarray:
    top = max(float(np.max(w, initial=0.0)), 1.0)
    if w.size and np.min(w) < -PSD_TOL * top:
        raise ValidationError(f"operator is not positive semidefinite (eigenvalue {np.min(w):.3g})")
    return np.clip(w, 0.0, None)


def matrix_function(s, f: Callable[[np.ndarray], np.ndarray], rel: float = SUPPORT_REL) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of the PSD operator ``s`` on its support.

    Eigenvalues outside the support map to zero whatever ``f`` is.
    """
    m = np.asarray(s, dtype=np.complex128)
    if is_diagonal(m):
        w = _check_psd(np.real(np.diag(m)))
        out = np.zeros_like(w)
        on = w > support_threshold(w, rel)
        out[on] = f(w[on])
        return np.diag(out).astype(np.complex128)
    w, v = _eigh(m)
    w = _check_psd(w)
    out = np.zeros_like(w)
    on = w > support_threshold(w, rel)
    out[on] = f(w[on])
    r = (v * out) @ v.conj().T
    return (r + r.conj().T) / 2


def matrix_power(s, p: float, rel: float = SUPPORT_REL) -> np.ndarray:
    """``s**p`` for PSD ``s``, taken on the support.

    Negative ``p`` gives the pseudo-inverse power and ``p = 0`` gives the
    support projector.
    """
    return matrix_function(s, lambda w: w ** p, rel)


def support_projector(s, rel: float = SUPPORT_REL) -> np.ndarray:
    return matrix_function(s, np.ones_like, rel)


def trace_norm(a) -> float:
    """Sum of singular values."""
    m = _as_square(a)
    try:
        sv = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"SVD failed on a {m.shape[0]}x{m.shape[0]} matrix") from exc
    return float(np.sum(sv))


def tensor(a, b, cap: int = DIM_CAP) -> np.ndarray:
    """Kronecker product; the pair (i, j) sits at index ``i * dim(b) + j``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    dim = a.shape[0] * b.shape[0]
    if dim > cap:
        raise DimensionCapError(f"tensor product dimension {dim} exceeds cap {cap}")
    return np.kron(a, b)


def _plogp(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(np.sum(w * np.log2(w)))


def von_neumann_entropy(s) -> float:
    m = np.asarray(s, dtype=np.complex128)
    w = np.real(np.diag(m)) if is_diagonal(m) else np.linalg.eigvalsh(m)
    return max(-_plogp(np.clip(w, 0.0, None)), 0.0)


def relative_entropy(s, t, rel: float = SUPPORT_REL) -> float:
    """``Tr S (log S - log T)`` in bits, or ``inf`` unless supp S is inside supp T."""
    s = np.asarray(s, dtype=np.complex128)
    t = np.asarray(t, dtype=np.complex128)
    ws, vs = _eigh(s)
    ws = np.clip(ws, 0.0, None)
    wt, vt = _eigh(t)
    wt = np.clip(wt, 0.0, None)
    on = wt > support_threshold(wt, rel)
    # weight of each eigenvector of S on each eigenvector of T
    overlap = np.abs(vt.conj().T @ vs) ** 2
    leak = float(np.sum(overlap[~on] @ ws))
    if leak > max(support_threshold(ws, rel), 1e-14):
        return float("inf")
    log_t = np.zeros_like(wt)
    log_t[on] = np.log2(wt[on])
    cross = float(np.sum((log_t @ overlap) * ws))
    return max(_plogp(ws) - cross, 0.0)


def renyi_overlap(s, t, r: float, rel: float = SUPPORT_REL) -> float:
    """``-log2 Tr S^(1-r) T^r`` in bits.

    ``S^0`` and ``T^0`` are the support projectors, so at ``r = 0`` the trace
    is ``Tr S P_T``. Returns ``inf`` when the trace vanishes.
    """
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"r must lie in [0, 1], got {r}")
    tr = float(np.real(np.trace(matrix_power(s, 1.0 - r, rel) @ matrix_power(t, r, rel))))
    if tr <= 1e-300:
        return float("inf")
    return -np.log2(tr)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state drawn from the induced (Ginibre) measure."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return density(m / np.real(np.trace(m)))


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=1)
