"""Fixed-step RK4 integration of the cavity-decay master equation

    drho/dt = -i[H(t), rho] + gamma/2 (2 a rho a^+ - a^+ a rho - rho a^+ a)

plus exact per-sector references used to check it.

Jump operator ``a`` always acts on the last tensor factor (the field).
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import qcore
from .hamiltonians import EffectiveCouplings, HamiltonianGenerator

TOP_POPULATION_LIMIT = 1e-6


class IntractableError(RuntimeError):
    """Requested integration exceeds the step budget."""

    def __init__(self, steps: int, budget: int):
        super().__init__(f"integration needs about {steps:,} RK4 steps; budget is {budget:,}")
        self.steps = steps
        self.budget = budget


@dataclass(frozen=True)
class IntegratorConfig:
    horizon: float
    dt: float | None = None
    substeps_per_period: int = 200
    renormalize_trace: bool = False
    strict: bool = False
    checkpoints: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.substeps_per_period < 1:
            raise ValueError("substeps_per_period must be >= 1")


@dataclass
class Diagnostics:
    steps: int
    dt: float
    max_trace_drift: float = 0.0
    max_top_population: float = 0.0
    hermiticity_error: float | None = None
    min_eigenvalue: float | None = None
    max_excited_population: tuple[float, float] | None = None
    checkpoint_times: list = field(default_factory=list)
    checkpoint_states: list = field(default_factory=list)

    @property
    def truncation_safe(self) -> bool:
        return self.max_top_population < TOP_POPULATION_LIMIT


def step_count(gen: HamiltonianGenerator, cfg: IntegratorConfig) -> int:
    """Number of RK4 steps implied by the config and the fastest phase of ``gen``."""
    if cfg.horizon == 0:
        return 0
    if cfg.dt is not None:
        x = cfg.horizon / cfg.dt
    else:
        w = gen.max_frequency
        if w == 0:
            raise ValueError("static generator: give an explicit dt")
        x = cfg.horizon * w / (2.0 * math.pi) * cfg.substeps_per_period
    # horizons that are whole periods must not round up by one step
    return max(1, math.ceil(x - 1e-6))


def _check_budget(steps: int, cfg: IntegratorConfig) -> None:
    if cfg.max_steps is not None and steps > cfg.max_steps:
        raise IntractableError(steps, cfg.max_steps)


def dissipator(rho: np.ndarray, n: int) -> np.ndarray:
    """``a rho a^+ - (a^+ a rho + rho a^+ a)/2`` with ``a`` on the last factor."""
    d = rho.shape[-1]
    m = d // n
    r = rho.reshape(rho.shape[:-2] + (m, n, m, n))
    out = np.empty_like(r)
    k = np.arange(n, dtype=float)
    out[...] = -0.5 * (k[:, None, None] + k) * r
    sq = np.sqrt(k[1:])
    out[..., :, :-1, :, :-1] += (sq[:, None, None] * sq) * r[..., :, 1:, :, 1:]
    return out.reshape(rho.shape)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, gamma: float, n: int) -> np.ndarray:
    hr = h @ rho
    out = -1j * (hr - rho @ h)
    if gamma:
        out += gamma * dissipator(rho, n)
    return out


def _top_population(rho: np.ndarray, n: int, levels: int = 2) -> float:
    diag = np.diagonal(rho, axis1=-2, axis2=-1)
    diag = diag.reshape(diag.shape[:-1] + (-1, n))
    return float(np.max(np.abs(diag[..., n - levels:].sum(axis=-2)), initial=0.0))


def evolve(rho0: np.ndarray, gen: HamiltonianGenerator, gamma: float,
           cfg: IntegratorConfig) -> tuple[np.ndarray, Diagnostics]:
    """Integrate the master equation from 0 to ``cfg.horizon`` with classical RK4.

    ``rho0`` may carry leading batch axes; each matrix is propagated
    independently (the equation is linear, so non-Hermitian inputs such as
    ``|s><s'|`` are allowed).
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape[-2:] != (gen.dim, gen.dim):
        raise ValueError(f"rho has shape {rho.shape[-2:]}, generator dimension is {gen.dim}")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    n = gen.cutoff
    steps = step_count(gen, cfg)
    _check_budget(steps, cfg)
    dt = cfg.horizon / steps if steps else 0.0
    diag = Diagnostics(steps=steps, dt=dt)
    tr0 = np.trace(rho, axis1=-2, axis2=-1)
    diag.max_top_population = _top_population(rho, n)
    every = max(1, steps // cfg.checkpoints) if cfg.checkpoints else 0
    if every:
        diag.checkpoint_times.append(0.0)
        diag.checkpoint_states.append(rho.copy())

    for k in range(steps):
        t = k * dt
        h0 = gen.evaluate(t)
        hm = gen.evaluate(t + 0.5 * dt)
        h1 = gen.evaluate(t + dt)
        k1 = lindblad_rhs(rho, h0, gamma, n)
        k2 = lindblad_rhs(rho + 0.5 * dt * k1, hm, gamma, n)
        k3 = lindblad_rhs(rho + 0.5 * dt * k2, hm, gamma, n)
        k4 = lindblad_rhs(rho + dt * k3, h1, gamma, n)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tr = np.trace(rho, axis1=-2, axis2=-1)
        diag.max_trace_drift = max(diag.max_trace_drift, float(np.max(np.abs(tr - tr0))))
        if cfg.renormalize_trace:
            rho = rho / (tr / tr0)[..., None, None]
        diag.max_top_population = max(diag.max_top_population, _top_population(rho, n))
        if every and ((k + 1) % every == 0 or k + 1 == steps):
            diag.checkpoint_times.append((k + 1) * dt)
            diag.checkpoint_states.append(rho.copy())

    diag.hermiticity_error = float(np.max(np.abs(rho - qcore.dag(rho)), initial=0.0))
    if rho.ndim == 2 and diag.hermiticity_error < 1e-8:
        diag.min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if cfg.strict and not diag.truncation_safe:
        raise qcore.TruncationError(
            f"top Fock population reached {diag.max_top_population:.3g} (limit {TOP_POPULATION_LIMIT:g})"
        )
    return rho, diag


def _excited_population(psi: np.ndarray, n: int) -> tuple[float, float]:
    p = np.abs(psi.reshape((qcore.DOT_DIM, qcore.DOT_DIM, n) + psi.shape[1:])) ** 2
    pa = p[qcore.E].sum(axis=(0, 1))
    pb = p[:, qcore.E].sum(axis=(0, 1))
    return float(np.max(pa)), float(np.max(pb))


def evolve_state(psi0: np.ndarray, gen: HamiltonianGenerator,
                 cfg: IntegratorConfig) -> tuple[np.ndarray, Diagnostics]:
    """Lossless RK4 propagation of kets (columns of ``psi0``); tracks |e> populations."""
    psi = np.array(psi0, dtype=complex)
    if psi.shape[0] != gen.dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, generator dimension is {gen.dim}")
    steps = step_count(gen, cfg)
    _check_budget(steps, cfg)
    dt = cfg.horizon / steps if steps else 0.0
    diag = Diagnostics(steps=steps, dt=dt)
    n = gen.cutoff
    norm0 = np.sum(np.abs(psi) ** 2, axis=0)
    track = gen.dims == (qcore.DOT_DIM, qcore.DOT_DIM, n)
    exc = _excited_population(psi, n) if track else (0.0, 0.0)
    for k in range(steps):
        t = k * dt
        h0 = gen.evaluate(t)
        hm = gen.evaluate(t + 0.5 * dt)
        h1 = gen.evaluate(t + dt)
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if track:
            ea, eb = _excited_population(psi, n)
            exc = (max(exc[0], ea), max(exc[1], eb))
    norm = np.sum(np.abs(psi) ** 2, axis=0)
    diag.max_trace_drift = float(np.max(np.abs(norm - norm0)))
    diag.max_excited_population = exc
    field_pop = np.abs(psi.reshape((-1, n) + psi.shape[1:])) ** 2
    diag.max_top_population = float(np.max(field_pop[:, n - 2:].sum(axis=(0, 1))))
    return psi, diag


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """``Re <psi| rho |psi>``; the imaginary residue must be below 1e-10."""
    target = np.asarray(target)
    if rho.shape != (target.size, target.size):
        raise ValueError(f"rho shape {rho.shape} does not match target dimension {target.size}")
    val = np.vdot(target, rho @ target)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3g}; rho is not Hermitian")
    return float(val.real)


# --- single-sector references ---------------------------------------------

def branch_oracle(c: int, epsilon: complex, delta: float, gamma: float, t,
                  rtol: float = 1e-12, atol: float = 1e-15):
    """Coherent amplitude of the field in a sector of drive weight ``c``.

    Solves ``d alpha/dt = i c conj(eps) e^{-i delta t} - gamma/2 alpha`` from
    ``alpha(0) = 0`` with an adaptive 8th-order Runge-Kutta method.
    Returns ``(alpha, info)``; ``alpha`` has the shape of ``t``.
    """
    if c not in (0, 1, 2):
        raise ValueError("sector weight must be 0, 1 or 2")
    t = np.asarray(t, dtype=float)
    t_eval = np.atleast_1d(t)
    if c == 0 or epsilon == 0 or t_eval.max(initial=0.0) == 0:
        return np.zeros(t.shape, dtype=complex), {"nfev": 0, "success": True}
    drive = 1j * c * np.conj(epsilon)

    def rhs(s, y):
        return drive * np.exp(-1j * delta * s) - 0.5 * gamma * y

    max_step = 2.0 * math.pi / abs(delta) / 16.0 if delta else np.inf
    sol = solve_ivp(rhs, (0.0, float(t_eval.max())), np.array([0j]), method="DOP853",
                    t_eval=np.sort(np.unique(t_eval)), rtol=rtol, atol=atol, max_step=max_step)
    if not sol.success:
        raise RuntimeError(f"branch integration failed: {sol.message}")
    values = np.interp(t_eval, sol.t, sol.y[0].real) + 1j * np.interp(t_eval, sol.t, sol.y[0].imag)
    return values.reshape(t.shape), {"nfev": sol.nfev, "success": True}


class _ExpSum:
    """``sum_k coef_k exp(rate_k t)`` with exact products and integrals."""

    def __init__(self, coefs, rates):
        self.coefs = np.asarray(coefs, dtype=complex).ravel()
        self.rates = np.asarray(rates, dtype=complex).ravel()

    def __mul__(self, other):
        return _ExpSum(np.outer(self.coefs, other.coefs), np.add.outer(self.rates, other.rates))

    def __call__(self, t):
        return np.sum(self.coefs * np.exp(self.rates * t))

    def conj(self):
        return _ExpSum(self.coefs.conj(), self.rates.conj())

    def integral(self, T: float) -> complex:
        z = self.rates
        zt = z * T
        small = np.abs(zt) < 1e-6
        zs = np.where(small, 1.0, z)
        exact = np.expm1(zt) / zs
        series = T * (1.0 + zt / 2.0 + zt * zt / 6.0)
        return complex(np.sum(self.coefs * np.where(small, series, exact)))


def _sector_alpha(terms, gamma: float) -> _ExpSum:
    coefs, rates = [], []
    for amp, w in terms:
        # d alpha/dt = -i conj(amp) e^{-i w t} - gamma/2 alpha, alpha(0) = 0
        den = 0.5 * gamma - 1j * w
        if den == 0:
            raise ValueError("undamped resonant drive: amplitude grows without bound")
        a = -1j * np.conj(amp) / den
        coefs += [a, -a]
        rates += [-1j * w, -0.5 * gamma]
    return _ExpSum(coefs, rates)


@dataclass(frozen=True)
class Channel:
    """Vacuum matrix elements ``<0| R_{ss'}(T) |0>`` of the evolved sector blocks.

    For input ``sum_s c_s |s>|0>`` the final state satisfies
    ``<s,0| rho |s',0> = c_s conj(c_s') vacuum[s, s']``.
    """

    vacuum: np.ndarray            # (4, 4) complex, sectors ordered as qcore.SECTORS
    method: str
    steps: int = 0
    max_trace_drift: float = 0.0
    max_top_population: float = 0.0
    blocks: np.ndarray | None = None


def coherent_branch_channel(couplings: EffectiveCouplings, gamma: float,
                            horizon: float) -> Channel:
    """Closed-form solution of the effective model with cavity decay.

    Each block stays ``K_{ss'} |alpha_s)(alpha_s'|`` in unnormalized coherent
    states, with ``ln K`` an integral of a finite exponential sum.
    """
    alphas, drives = {}, {}
    for s in qcore.SECTORS:
        terms = couplings.sector_terms(s)
        alphas[s] = _sector_alpha(terms, gamma) if terms else _ExpSum([], [])
        # coefficient of ``a`` in the sector Hamiltonian
        drives[s] = _ExpSum([amp for amp, _ in terms], [1j * w for _, w in terms])
    vac = np.empty((4, 4), dtype=complex)
    for i, s in enumerate(qcore.SECTORS):
        for j, r in enumerate(qcore.SECTORS):
            ar_c = alphas[r].conj()
            integrand_terms = (drives[s] * alphas[s], drives[r].conj() * ar_c,
                               alphas[s] * ar_c)
            log_k = (-1j * integrand_terms[0].integral(horizon)
                     + 1j * integrand_terms[1].integral(horizon)
                     + gamma * integrand_terms[2].integral(horizon))
            vac[i, j] = np.exp(log_k)
    return Channel(vacuum=vac, method="branch")


def _pair_superoperators(lam_s: complex, lam_r: complex, gamma: float, n: int):
    """Row-major superoperators of ``X -> -i(h_s X - X h_r) + gamma D[X]`` split by
    phase factor: ``L0 + e^{i w t} Lp + e^{-i w t} Lm``."""
    a = qcore.fock_annihilation(n)
    ad = qcore.dag(a)
    eye = np.eye(n, dtype=complex)
    num = ad @ a
    lp = -1j * (lam_s * np.kron(a, eye) - lam_r * np.kron(eye, a.T))
    lm = -1j * (np.conj(lam_s) * np.kron(ad, eye) - np.conj(lam_r) * np.kron(eye, ad.T))
    l0 = gamma * (np.kron(a, a.conj()) - 0.5 * np.kron(num, eye) - 0.5 * np.kron(eye, num.T))
    return l0, lp, lm


@functools.lru_cache(maxsize=32)
def sector_channel(couplings: EffectiveCouplings, gamma: float, cutoff: int, loops: int,
                   substeps_per_period: int = 200) -> Channel:
    """RK4 density-matrix evolution of the effective model, one sector block at a time.

    The effective generator never mixes qubit sectors and the decay acts on
    the field only, so the density matrix splits into ``N x N`` field blocks
    ``R_{ss'}``.  With a common loop detuning the generator is periodic: the
    RK4 map over one loop is built once as a superoperator and raised to the
    loop count.  Identical to stepping RK4 through all loops, up to rounding.
    Results are memoized; treat the returned arrays as read-only.
    """
    if not couplings.common_delta:
        raise ValueError("sector_channel needs a common loop detuning; use coherent_branch_channel")
    delta = couplings.deltas[0]
    n = cutoff
    lam = {s: sum((amp for amp, _ in couplings.sector_terms(s)), 0j) for s in qcore.SECTORS}

    keys = []
    for s in qcore.SECTORS:
        for r in qcore.SECTORS:
            key = (lam[s], lam[r])
            if key not in keys and (lam[r], lam[s]) not in keys:
                keys.append(key)
    ops = [_pair_superoperators(ls, lr, gamma, n) for ls, lr in keys]
    l0 = np.array([o[0] for o in ops])
    lp = np.array([o[1] for o in ops])
    lm = np.array([o[2] for o in ops])

    steps = substeps_per_period
    period = 2.0 * math.pi / abs(delta)
    dt = period / steps
    vac0 = np.zeros(n * n, dtype=complex)
    vac0[0] = 1.0
    prop = np.broadcast_to(np.eye(n * n, dtype=complex), l0.shape).copy()
    top = 0.0

    def gen(t):
        ph = np.exp(1j * delta * t)
        return l0 + ph * lp + np.conj(ph) * lm

    for k in range(steps):
        t = k * dt
        g0, gm, g1 = gen(t), gen(t + 0.5 * dt), gen(t + dt)
        k1 = g0 @ prop
        k2 = gm @ (prop + 0.5 * dt * k1)
        k3 = gm @ (prop + 0.5 * dt * k2)
        k4 = g1 @ (prop + dt * k3)
        prop = prop + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        cols = prop[..., 0].reshape(-1, n, n)
        diag = np.abs(np.diagonal(cols, axis1=-2, axis2=-1))
        top = max(top, float(diag[:, n - 2:].sum(axis=-1).max()))

    full = np.linalg.matrix_power(prop, loops) if loops != 1 else prop
    finals = (full @ vac0).reshape(-1, n, n)

    blocks = np.empty((4, 4, n, n), dtype=complex)
    for i, s in enumerate(qcore.SECTORS):
        for j, r in enumerate(qcore.SECTORS):
            key = (lam[s], lam[r])
            if key in keys:
                blocks[i, j] = finals[keys.index(key)]
            else:
                blocks[i, j] = qcore.dag(finals[keys.index((lam[r], lam[s]))])
    drift = max(abs(np.trace(blocks[i, i]) - 1.0) for i in range(4))
    return Channel(vacuum=blocks[:, :, 0, 0].copy(), method="density", steps=steps * loops,
                   max_trace_drift=float(drift), max_top_population=top, blocks=blocks)


# --- observables and trajectory output -------------------------------------

def sector_observables(rho: np.ndarray, cutoff: int) -> dict:
    """Per-sector population and field mean ``<a>`` (normalized to the sector)."""
    a = qcore.fock_annihilation(cutoff)
    out = {}
    for s in qcore.SECTORS:
        blk = qcore.sector_block(rho, s, s, cutoff)
        pop = float(np.trace(blk).real)
        mean = complex(np.trace(a @ blk) / pop) if pop > 1e-14 else 0j
        out[s] = (pop, mean)
    return out


TRAJECTORY_HEADER = (("t_inv_mev", "trace")
                     + tuple(f"pop_{s}" for s in qcore.SECTORS)
                     + tuple(f"a_{s}_{p}" for s in qcore.SECTORS for p in ("re", "im"))
                     + ("top_fock_population",))


def write_trajectory_csv(fh, times, states, cutoff: int, meta: dict | None = None) -> None:
    w = csv.writer(fh, lineterminator="\n")
    for k, v in (meta or {}).items():
        fh.write(f"# {k} = {v}\n")
    w.writerow(TRAJECTORY_HEADER)
    for t, rho in zip(times, states):
        obs = sector_observables(rho, cutoff)
        row = [t, np.trace(rho).real]
        row += [obs[s][0] for s in qcore.SECTORS]
        for s in qcore.SECTORS:
            row += [obs[s][1].real, obs[s][1].imag]
        row.append(_top_population(rho, cutoff))
        w.writerow([f"{float(x):.17g}" for x in row])
