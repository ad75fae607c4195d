"""Dense operators on the dot (x) dot (x) Fock space.

Everything here returns plain ``numpy`` arrays of dtype ``complex128``.
Composite spaces are always ordered dot A, dot B, field; the field is the
last (fastest-varying) tensor factor.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

# ordered basis of a single dot; |d> is never coupled and is left out
G, F, E = 0, 1, 2
DOT_DIM = 3

# qubit sectors in basis order |u_A v_B>
SECTORS = ("ff", "fg", "gf", "gg")
_LEVEL = {"g": G, "f": F, "e": E}


class TruncationError(ValueError):
    """Fock cutoff too small for the requested displacement."""


def _check_cutoff(n: int) -> int:
    n = int(n)
    if n < 2:
        raise ValueError(f"Fock cutoff must be >= 2, got {n}")
    return n


def required_cutoff(alpha: complex) -> int:
    """Smallest cutoff satisfying ``N >= |a|^2 + 6|a| + 10``."""
    r = abs(alpha)
    return int(np.ceil(r * r + 6.0 * r + 10.0))


def check_truncation(alpha: complex, n: int) -> None:
    need = abs(alpha) ** 2 + 6.0 * abs(alpha) + 10.0
    if n < need:
        raise TruncationError(
            f"cutoff N={n} too small for |alpha|={abs(alpha):.4g}; need N >= {need:.2f}"
        )


def fock_annihilation(n: int) -> np.ndarray:
    """Annihilation operator ``a`` on Fock levels ``0..n-1``."""
    n = _check_cutoff(n)
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def fock_number(n: int) -> np.ndarray:
    return np.diag(np.arange(_check_cutoff(n), dtype=float)).astype(complex)


def basis(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def dag(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m, -1, -2).conj()


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product in the order given (dot A, dot B, field)."""
    if len(ops) == 1 and not isinstance(ops[0], np.ndarray):
        ops = tuple(ops[0])
    if not ops:
        raise ValueError("tensor() needs at least one factor")
    for op in ops:
        op = np.asarray(op)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"tensor factors must be square, got shape {op.shape}")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def is_hermitian(m: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = np.max(np.abs(m)) if m.size else 0.0
    return bool(np.max(np.abs(m - dag(m)), initial=0.0) <= rtol * max(scale, 1e-300))


def displacement_matrix(alpha: complex, n: int) -> np.ndarray:
    """Truncated displacement operator ``expm(alpha a^dag - conj(alpha) a)``.

    Raises
    ------
    TruncationError
        If ``n < |alpha|^2 + 6|alpha| + 10``.
    """
    n = _check_cutoff(n)
    check_truncation(alpha, n)
    a = fock_annihilation(n)
    return expm(alpha * dag(a) - np.conj(alpha) * a)


def coherent_state(alpha: complex, n: int) -> np.ndarray:
    """Coherent state from its Poisson amplitudes, renormalized on the cutoff."""
    n = _check_cutoff(n)
    check_truncation(alpha, n)
    k = np.arange(n)
    if alpha == 0:
        return basis(n, 0)
    # log-space keeps n! harmless for large cutoffs
    logmag = -0.5 * abs(alpha) ** 2 + k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    psi = np.exp(logmag) * np.exp(1j * k * np.angle(alpha))
    return psi / np.linalg.norm(psi)


def fock_tail(state: np.ndarray, levels: int = 2) -> float:
    """Population in the top ``levels`` Fock states of a single-mode ket."""
    state = np.asarray(state)
    return float(np.sum(np.abs(state[-levels:]) ** 2))


def dot_projector(level: str) -> np.ndarray:
    p = np.zeros((DOT_DIM, DOT_DIM), dtype=complex)
    p[_LEVEL[level], _LEVEL[level]] = 1.0
    return p


def sigma_plus() -> np.ndarray:
    """``|e><g|`` on one dot."""
    s = np.zeros((DOT_DIM, DOT_DIM), dtype=complex)
    s[E, G] = 1.0
    return s


def sector_index(sector: str, n: int, photons: int = 0) -> int:
    """Flat index of ``|u_A v_B, photons>`` in the composite space."""
    u, v = sector
    return (_LEVEL[u] * DOT_DIM + _LEVEL[v]) * n + photons


def product_state(sector: str, field: np.ndarray) -> np.ndarray:
    """``|u_A>|v_B>|field>`` for a sector label such as ``"gf"``."""
    u, v = sector
    return np.kron(np.kron(basis(DOT_DIM, _LEVEL[u]), basis(DOT_DIM, _LEVEL[v])), field)


def qubit_state(amplitudes, n: int, field: np.ndarray | None = None) -> np.ndarray:
    """Embed 4 sector amplitudes (ordered as ``SECTORS``) times a field ket."""
    if field is None:
        field = basis(n, 0)
    psi = np.zeros(DOT_DIM * DOT_DIM * n, dtype=complex)
    for amp, s in zip(amplitudes, SECTORS):
        psi += amp * product_state(s, field)
    return psi


def sector_block(op: np.ndarray, s: str, t: str, n: int) -> np.ndarray:
    """Field-space block ``<s| op |t>`` of a composite operator."""
    i = sector_index(s, n)
    j = sector_index(t, n)
    return op[..., i:i + n, j:j + n]
