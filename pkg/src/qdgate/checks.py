"""Cross-module invariant suite behind ``qdgate check``.

Each check returns a measured error; it passes when the error is at most
its tolerance.  ``run_checks`` can override every tolerance and can inject
a sign fault into the gg cross phase to prove the suite bites.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import geometry, lindblad, qcore
from .hamiltonians import EffectiveCouplings, HamiltonianGenerator
from .model import derive, gamma0, gate_schedule, reference_system

EPS, DELTA = 0.0025, 0.025


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def bch_identity(seed: int = 7, pairs: int = 100, n: int = 40) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        a, b = (r * np.exp(2j * np.pi * p) for r, p in rng.random((2, 2)))
        lhs = qcore.displacement_matrix(a, n) @ qcore.displacement_matrix(b, n)
        rhs = np.exp(1j * (a * np.conj(b)).imag) * qcore.displacement_matrix(a + b, n)
        worst = max(worst, np.max(np.abs(lhs - rhs)[:10, :10]))
    return float(worst)


def displacement_unitarity(n: int = 30) -> float:
    worst = 0.0
    for alpha in (0.3, 0.5 + 0.5j, -1.2j, 1.5):
        d = qcore.displacement_matrix(alpha, n)
        k = math.ceil(n / 2)
        worst = max(worst, np.max(np.abs((qcore.dag(d) @ d - np.eye(n))[:k, :k])))
    return float(worst)


def ladder_commutator(n: int = 20) -> float:
    a = qcore.fock_annihilation(n)
    c = a @ qcore.dag(a) - qcore.dag(a) @ a
    return float(np.max(np.abs(c - np.eye(n))[: n - 1, : n - 1]))


def loop_closure() -> float:
    worst = 0.0
    for loops in range(1, 11):
        t = 2 * math.pi * loops / DELTA
        worst = max(worst, max(abs(x) for x in geometry.alpha_closed_form(EPS, DELTA, t)))
    return worst / abs(EPS / DELTA)


def phase_ratio(inject_fault: bool = False) -> float:
    t = np.linspace(1.0, 4 * math.pi / DELTA, 257)
    phi_fg, phi_gf, theta, _ = geometry.phases_closed_form(EPS, DELTA, t)
    if inject_fault:
        theta = -theta
    phi_gg = phi_fg + phi_gf + theta
    return float(np.max(np.abs(phi_gg - 4 * phi_fg) / np.abs(4 * phi_fg)))


def polyline_vs_closed_form(n: int = 100_000) -> float:
    t_end = 2 * math.pi / DELTA
    exact = geometry.phases_closed_form(EPS, DELTA, t_end)[0]
    return float(abs(geometry.loop_phase_quadrature(EPS, DELTA, t_end, n) - exact) / abs(exact))


def quadrature_order(n: int = 64) -> float:
    """Relative deviation of the error-halving ratio from 4 (second order)."""
    t_end = 2 * math.pi / DELTA
    exact = float(geometry.phases_closed_form(EPS, DELTA, t_end)[0])
    errs = [abs(geometry.loop_phase_quadrature(EPS, DELTA, t_end, k) - exact) for k in (n, 2 * n, 4 * n)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    return float(max(abs(r - 4.0) / 4.0 for r in ratios))


def hamiltonian_hermiticity(times: int = 200, seed: int = 3) -> float:
    sys = reference_system(cutoff=6)
    d = derive(sys)
    gens = [HamiltonianGenerator.full(sys), HamiltonianGenerator.effective(d, 6)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in rng.uniform(0, 1e4, times):
        for g in gens:
            h = g.evaluate(t)
            worst = max(worst, np.max(np.abs(h - qcore.dag(h))) / np.max(np.abs(h)))
    return float(worst)


def effective_periodicity() -> float:
    gen = HamiltonianGenerator.effective(EffectiveCouplings.uniform(EPS, DELTA), 8)
    worst = 0.0
    for t in (0.0, 13.7, 101.0, 977.3):
        h0, h1 = gen.evaluate(t), gen.evaluate(t + 2 * math.pi / DELTA)
        worst = max(worst, np.max(np.abs(h0 - h1)))
    return float(worst)


def damped_cavity(alpha0: float = 0.3, n: int = 15, gamma: float = 0.05, t_end: float = 20.0) -> float:
    psi = qcore.coherent_state(alpha0, n)
    rho = np.outer(psi, psi.conj())
    gen = HamiltonianGenerator.zero((n,))
    cfg = lindblad.IntegratorConfig(horizon=t_end, dt=0.05, checkpoints=10)
    _, diag = lindblad.evolve(rho, gen, gamma, cfg)
    a = qcore.fock_annihilation(n)
    return float(max(abs(np.trace(a @ r) - alpha0 * np.exp(-gamma * t / 2))
                     for t, r in zip(diag.checkpoint_times, diag.checkpoint_states)))


def trace_preservation(n: int = 10) -> float:
    gen = HamiltonianGenerator.effective(EffectiveCouplings.uniform(EPS, DELTA), n)
    psi = qcore.qubit_state([0.5, 0.5, 0.5, 0.5], n)
    cfg = lindblad.IntegratorConfig(horizon=2 * math.pi / DELTA)
    _, diag = lindblad.evolve(np.outer(psi, psi.conj()), gen, 5 * gamma0(), cfg)
    return diag.max_trace_drift


def branch_closure() -> float:
    alpha, _ = lindblad.branch_oracle(1, EPS, DELTA, 0.0, 2 * math.pi / DELTA)
    return float(abs(alpha))


def schedule_integrality() -> float:
    s = gate_schedule(EPS, DELTA, math.pi / 2)
    return abs(s.gate_time * DELTA / (2 * math.pi) - s.loops) + abs(s.phi - 2 * math.pi * s.loops * EPS**2 / DELTA**2)


def dark_sector() -> float:
    ch = lindblad.sector_channel(EffectiveCouplings.uniform(EPS, DELTA), 2 * gamma0(), 10, 2)
    return float(abs(ch.vacuum[0, 0] - 1.0))


CHECKS = {
    "bch_identity": (bch_identity, 1e-7),
    "displacement_unitarity": (displacement_unitarity, 1e-7),
    "ladder_commutator": (ladder_commutator, 1e-12),
    "loop_closure": (loop_closure, 1e-12),
    "phase_ratio": (phase_ratio, 1e-12),
    "polyline_vs_closed_form": (polyline_vs_closed_form, 1e-6),
    "quadrature_order": (quadrature_order, 0.1),
    "hamiltonian_hermiticity": (hamiltonian_hermiticity, 1e-12),
    "effective_periodicity": (effective_periodicity, 1e-12),
    "damped_cavity": (damped_cavity, 1e-7),
    "trace_preservation": (trace_preservation, 1e-9),
    "branch_closure": (branch_closure, 1e-10),
    "schedule_integrality": (schedule_integrality, 1e-9),
    "dark_sector": (dark_sector, 1e-9),
}


def run_checks(tolerance: float | None = None, inject_fault: bool = False,
               names=None) -> list[CheckResult]:
    out = []
    for name, (fn, tol) in CHECKS.items():
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        err = fn(inject_fault) if name == "phase_ratio" else fn()
        out.append(CheckResult(name, float(err), tol if tolerance is None else tolerance,
                               time.perf_counter() - t0))
    return out
