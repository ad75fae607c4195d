"""Interaction-picture Hamiltonians on dot A (x) dot B (x) field.

Both models are sums of static blocks with scalar phase factors,

    H(t) = sum_k c_k exp(i w_k t) B_k + h.c.,

so the blocks are built once and ``evaluate(t)`` is a single contraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .model import DerivedParams, DotParams, SystemParams, derive_lambda


@dataclass(frozen=True)
class EffectiveCouplings:
    """Per-dot effective couplings ``lambda_j`` and loop detunings ``delta_j``.

    The nominal gate uses ``lambda_A = lambda_B = epsilon`` and a common
    ``delta``; perturbed runs may split them.
    """

    lambdas: tuple[complex, complex]
    deltas: tuple[float, float]

    @classmethod
    def uniform(cls, epsilon: complex, delta: float) -> "EffectiveCouplings":
        return cls((complex(epsilon), complex(epsilon)), (float(delta), float(delta)))

    @classmethod
    def from_derived(cls, derived: DerivedParams) -> "EffectiveCouplings":
        return cls.uniform(derived.epsilon, derived.delta)

    @classmethod
    def from_dots(cls, sys: SystemParams) -> "EffectiveCouplings":
        return cls((derive_lambda(sys.dot_a), derive_lambda(sys.dot_b)),
                   (sys.dot_a.delta, sys.dot_b.delta))

    @property
    def common_delta(self) -> bool:
        return self.deltas[0] == self.deltas[1]

    def sector_terms(self, sector: str) -> list[tuple[complex, float]]:
        """``(amplitude, frequency)`` pairs of the field Hamiltonian in one sector.

        The field block is ``sum amp * exp(i freq t) a + h.c.``; dot j contributes
        ``-lambda_j`` at ``delta_j`` when it sits in ``|g>``.
        """
        return [(-lam, d) for level, lam, d in zip(sector, self.lambdas, self.deltas)
                if level == "g"]


class HamiltonianGenerator:
    """Time-dependent Hamiltonian ``sum_k amp_k e^{i w_k t} B_k + h.c.``."""

    def __init__(self, blocks, amplitudes, frequencies, dims, mode="custom", couplings=None):
        self.blocks = np.asarray(blocks, dtype=complex)
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.dims = tuple(int(d) for d in dims)
        self.mode = mode
        self.couplings = couplings
        dim = int(np.prod(self.dims))
        if self.blocks.size == 0:
            self.blocks = np.zeros((0, dim, dim), dtype=complex)
        if self.blocks.shape[1:] != (dim, dim):
            raise ValueError(f"blocks have shape {self.blocks.shape[1:]}, expected {(dim, dim)}")
        if not (len(self.blocks) == len(self.amplitudes) == len(self.frequencies)):
            raise ValueError("blocks, amplitudes and frequencies must have equal length")

    @property
    def dim(self) -> int:
        return self.blocks.shape[-1]

    @property
    def cutoff(self) -> int:
        return self.dims[-1]

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.frequencies), initial=0.0))

    @property
    def period(self) -> float | None:
        """Common period if every nonzero frequency has the same magnitude."""
        w = np.unique(np.abs(self.frequencies[self.frequencies != 0]))
        if len(w) == 1:
            return 2.0 * math.pi / w[0]
        return None

    def evaluate(self, t: float) -> np.ndarray:
        if len(self.blocks) == 0:
            return np.zeros((self.dim, self.dim), dtype=complex)
        c = self.amplitudes * np.exp(1j * self.frequencies * t)
        m = np.tensordot(c, self.blocks, axes=1)
        return m + m.conj().T

    __call__ = evaluate

    # -- constructors --

    @classmethod
    def zero(cls, dims) -> "HamiltonianGenerator":
        return cls([], [], [], dims, mode="zero")

    @classmethod
    def full(cls, sys: SystemParams) -> "HamiltonianGenerator":
        n = sys.cutoff
        a = qcore.fock_annihilation(n)
        i3 = np.eye(qcore.DOT_DIM, dtype=complex)
        ifield = np.eye(n, dtype=complex)
        sp = qcore.sigma_plus()
        blocks, amps, freqs = [], [], []
        for j, dot in enumerate(sys.dots):
            dot_op = (sp, i3) if j == 0 else (i3, sp)
            cav = qcore.tensor(*dot_op, a)
            drive = qcore.tensor(*dot_op, ifield)
            blocks += [cav, drive, drive]
            amps += [dot.g, dot.omega / 2.0, dot.omega_prime / 2.0]
            freqs += [dot.delta_cavity, dot.delta_laser, -dot.delta_laser_prime]
        return cls(blocks, amps, freqs, (qcore.DOT_DIM, qcore.DOT_DIM, n), mode="full")

    @classmethod
    def effective(cls, couplings, cutoff: int) -> "HamiltonianGenerator":
        """Effective displacement Hamiltonian; ``couplings`` may be a
        ``DerivedParams`` or an ``EffectiveCouplings``."""
        if isinstance(couplings, DerivedParams):
            couplings = EffectiveCouplings.from_derived(couplings)
        n = cutoff
        a = qcore.fock_annihilation(n)
        i3 = np.eye(qcore.DOT_DIM, dtype=complex)
        pg = qcore.dot_projector("g")
        blocks, amps, freqs = [], [], []
        for j in range(2):
            dot_op = (pg, i3) if j == 0 else (i3, pg)
            blocks.append(qcore.tensor(*dot_op, a))
            amps.append(-couplings.lambdas[j])
            freqs.append(couplings.deltas[j])
        return cls(blocks, amps, freqs, (qcore.DOT_DIM, qcore.DOT_DIM, n), mode="effective",
                   couplings=couplings)


def full_hamiltonian(sys: SystemParams, t: float) -> np.ndarray:
    return HamiltonianGenerator.full(sys).evaluate(t)


def effective_hamiltonian(derived: DerivedParams, t: float, cutoff: int) -> np.ndarray:
    return HamiltonianGenerator.effective(derived, cutoff).evaluate(t)


def field_hamiltonian(terms, t: float, cutoff: int) -> np.ndarray:
    """Field-only block ``sum amp e^{i w t} a + h.c.`` for one qubit sector."""
    a = qcore.fock_annihilation(cutoff)
    c = sum((amp * np.exp(1j * w * t) for amp, w in terms), 0j)
    m = c * a
    return m + qcore.dag(m)


def scaled_dots(sys: SystemParams, scale: float) -> SystemParams:
    """Detunings times ``scale`` and Rabi frequencies times ``sqrt(scale)``;
    the loop detuning ``delta`` and the cavity coupling are left unchanged."""
    root = math.sqrt(scale)

    def one(d: DotParams) -> DotParams:
        return DotParams(g=d.g, omega=d.omega * root, omega_prime=d.omega_prime * root,
                         delta_laser=d.delta_laser * scale,
                         delta_laser_prime=d.delta_laser_prime * scale,
                         delta_cavity=d.delta_laser * scale + d.delta)

    return SystemParams(dot_a=one(sys.dot_a), dot_b=one(sys.dot_b), gamma=sys.gamma,
                        cutoff=sys.cutoff, hbar_mev_ps=sys.hbar_mev_ps)
