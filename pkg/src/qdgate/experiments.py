"""Gate-level experiments: random-state fidelity averaging, decay and
parameter-fluctuation sweeps, and full-vs-effective model comparison.

Fidelities for a whole state set come from one propagation.  The master
equation is linear, so propagating the sixteen operators ``|s,0><s',0|``
(or, in the effective model, the sector blocks) and contracting with each
initial/target pair gives the same ``<Psi| rho(T) |Psi>`` as evolving every
state separately.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__, qcore
from .geometry import ideal_gate
from .hamiltonians import EffectiveCouplings, HamiltonianGenerator, scaled_dots
from .lindblad import (Channel, IntegratorConfig, IntractableError, coherent_branch_channel,
                       evolve, evolve_state, sector_channel, step_count)
from .model import DerivedParams, DotParams, SystemParams, derive, derive_lambda, gamma0

# (x, y, z, w) multiply |ff>, |gf>, |fg>, |gg>; SECTORS order is ff, fg, gf, gg
_TUPLE_TO_SECTOR = np.array([0, 2, 1, 3])

PARAMETER_CLASSES = ("g", "omega", "delta_laser", "delta_cavity", "epsilon")


@dataclass(frozen=True)
class InitialStateSet:
    seed: int
    count: int
    coefficients: np.ndarray   # (count, 4) rows (x, y, z, w), unit norm

    @property
    def sector_amplitudes(self) -> np.ndarray:
        return self.coefficients[:, _TUPLE_TO_SECTOR]


def generate_initial_states(seed: int, count: int = 500, complex_coefficients: bool = False
                            ) -> InitialStateSet:
    """Random normalized tuples (x, y, z, w), uniform on the unit sphere.

    Draws come from ``numpy.random.Generator(PCG64(seed))``: four standard
    normals per tuple (eight with ``complex_coefficients``), then normalized.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    if complex_coefficients:
        raw = rng.standard_normal((count, 4)) + 1j * rng.standard_normal((count, 4))
    else:
        raw = rng.standard_normal((count, 4))
    coeffs = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    return InitialStateSet(seed=seed, count=count, coefficients=coeffs)


def target_amplitudes(coeffs, phi: float) -> np.ndarray:
    """Sector amplitudes of the ideal (uncorrected) gate output."""
    amps = np.asarray(coeffs)[..., _TUPLE_TO_SECTOR]
    return amps * np.diag(ideal_gate(phi).unitary)


def target_state(coeffs, phi: float, cutoff: int) -> np.ndarray:
    """Ideal gate applied to ``(x, y, z, w)``, tensored with the field vacuum."""
    return qcore.qubit_state(target_amplitudes(coeffs, phi), cutoff)


def input_state(coeffs, cutoff: int) -> np.ndarray:
    return qcore.qubit_state(np.asarray(coeffs)[_TUPLE_TO_SECTOR], cutoff)


# --- fluctuations ----------------------------------------------------------

@dataclass(frozen=True)
class FluctuationSpec:
    zeta: float
    parameter: str

    def __post_init__(self):
        if self.parameter not in PARAMETER_CLASSES:
            raise ValueError(f"unknown parameter class {self.parameter!r}; choose from {PARAMETER_CLASSES}")
        if not 0.0 <= self.zeta < 1.0:
            raise ValueError(f"fluctuation zeta must lie in [0, 1), got {self.zeta}")


def perturb_dot(dot: DotParams, spec: FluctuationSpec) -> DotParams:
    s = 1.0 + spec.zeta
    if spec.parameter == "g":
        return replace(dot, g=dot.g * s)
    if spec.parameter == "omega":
        return replace(dot, omega=dot.omega * s, omega_prime=dot.omega_prime * s)
    if spec.parameter == "delta_laser":
        return replace(dot, delta_laser=dot.delta_laser * s,
                       delta_laser_prime=dot.delta_laser_prime * s)
    if spec.parameter == "delta_cavity":
        return replace(dot, delta_cavity=dot.delta_cavity * s)
    return dot


def perturb_system(sys: SystemParams, spec: FluctuationSpec) -> SystemParams:
    return replace(sys, dot_a=perturb_dot(sys.dot_a, spec), dot_b=perturb_dot(sys.dot_b, spec))


def perturbed_couplings(sys: SystemParams, derived: DerivedParams,
                        spec: FluctuationSpec) -> EffectiveCouplings:
    """Effective couplings after the fluctuation, relative to the calibrated ``epsilon``.

    Each dot keeps the calibrated ``epsilon`` times the physical change of its
    own ``lambda_j``; loop detunings move by the change of ``Delta_C - Delta``.
    """
    if spec.parameter == "epsilon":
        return EffectiveCouplings.uniform(derived.epsilon * (1.0 + spec.zeta), derived.delta)
    pert = perturb_system(sys, spec)
    lams, deltas = [], []
    for old, new in zip(sys.dots, pert.dots):
        lams.append(derived.epsilon * (derive_lambda(new) / derive_lambda(old)))
        deltas.append(derived.delta + (new.delta - old.delta))
    return EffectiveCouplings((lams[0], lams[1]), (deltas[0], deltas[1]))


# --- gate simulation -------------------------------------------------------

def _is_whole_loops(horizon: float, delta: float) -> int | None:
    x = horizon * abs(delta) / (2.0 * math.pi)
    k = round(x)
    return k if k >= 1 and abs(x - k) < 1e-9 * max(1.0, x) else None


def effective_channel(couplings: EffectiveCouplings, gamma: float, horizon: float, cutoff: int,
                      method: str = "auto", substeps_per_period: int = 200) -> Channel:
    """Sector channel of the effective model.

    ``method="density"`` integrates the density-matrix blocks with RK4 and
    needs a common loop detuning with ``horizon`` a whole number of loops;
    ``"branch"`` uses the exact coherent-state solution; ``"auto"`` picks
    ``density`` whenever it applies.
    """
    loops = _is_whole_loops(horizon, couplings.deltas[0]) if couplings.common_delta else None
    if method == "auto":
        method = "density" if loops else "branch"
    if method == "density":
        if not loops:
            raise ValueError("density method needs a common delta and a whole number of loops")
        return sector_channel(couplings, gamma, cutoff, loops, substeps_per_period)
    if method == "branch":
        return coherent_branch_channel(couplings, gamma, horizon)
    raise ValueError(f"unknown method {method!r}")


def full_transfer(sys: SystemParams, gamma: float, horizon: float,
                  substeps_per_period: int = 200, max_steps: int | None = 2_000_000):
    """``W[r, r', s, s'] = <r,0| E(|s,0><s',0|) |r',0>`` under the full Hamiltonian."""
    n = sys.cutoff
    gen = HamiltonianGenerator.full(sys)
    cfg = IntegratorConfig(horizon=horizon, substeps_per_period=substeps_per_period,
                           max_steps=max_steps)
    kets = [qcore.product_state(s, qcore.basis(n, 0)) for s in qcore.SECTORS]
    ops = np.array([[np.outer(ks, kr.conj()) for kr in kets] for ks in kets])
    out, diag = evolve(ops.reshape((16, gen.dim, gen.dim)), gen, gamma, cfg)
    out = out.reshape((4, 4, gen.dim, gen.dim))
    idx = [qcore.sector_index(s, n) for s in qcore.SECTORS]
    w = out[:, :, idx][:, :, :, idx]           # (s, s', r, r')
    return np.transpose(w, (2, 3, 0, 1)), diag


def _transfer_from_channel(ch: Channel) -> np.ndarray:
    w = np.zeros((4, 4, 4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            w[i, j, i, j] = ch.vacuum[i, j]
    return w


def fidelities(transfer: np.ndarray, amps_in: np.ndarray, amps_target: np.ndarray) -> np.ndarray:
    """``<Psi_k| rho_k(T) |Psi_k>`` for every row ``k`` of the amplitude arrays."""
    f = np.einsum("kr,kq,rqst,ks,kt->k", amps_target.conj(), amps_target, transfer,
                  amps_in, amps_in.conj())
    return f.real


@dataclass
class GateResult:
    mean_fidelity: float
    fidelities: np.ndarray
    mode: str
    method: str
    gamma: float
    phi: float
    steps: int
    max_trace_drift: float
    max_top_population: float
    leakage: tuple[float, float] | None = None

    @property
    def std_error(self) -> float:
        n = len(self.fidelities)
        return float(np.std(self.fidelities, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def run_gate_fidelity(sys: SystemParams, derived: DerivedParams, gamma: float,
                      states: InitialStateSet, mode: str = "effective",
                      couplings: EffectiveCouplings | None = None, method: str = "auto",
                      substeps_per_period: int = 200, strict: bool = False,
                      max_steps: int | None = 2_000_000) -> GateResult:
    """Average fidelity of the scheduled gate over a set of initial states.

    Every state starts as ``(x|ff> + y|gf> + z|fg> + w|gg>) |0>`` and is
    compared with the ideal output at the scheduled phase ``derived.phi``.
    ``couplings`` overrides the effective couplings (used for fluctuations);
    in full mode ``sys`` itself carries any perturbation.
    """
    horizon = derived.gate_time
    amps_in = states.sector_amplitudes
    amps_t = target_amplitudes(states.coefficients, derived.phi)
    if mode == "effective":
        cp = couplings or EffectiveCouplings.from_derived(derived)
        ch = effective_channel(cp, gamma, horizon, sys.cutoff, method, substeps_per_period)
        transfer = _transfer_from_channel(ch)
        steps, drift, top, used = ch.steps, ch.max_trace_drift, ch.max_top_population, ch.method
    elif mode == "full":
        transfer, diag = full_transfer(sys, gamma, horizon, substeps_per_period, max_steps)
        steps, drift, top, used = diag.steps, diag.max_trace_drift, diag.max_top_population, "density"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if strict and top >= 1e-6:
        raise qcore.TruncationError(f"top Fock population reached {top:.3g}")
    f = fidelities(transfer, amps_in, amps_t)
    return GateResult(mean_fidelity=float(np.mean(f)), fidelities=f, mode=mode, method=used,
                      gamma=gamma, phi=derived.phi, steps=steps, max_trace_drift=drift,
                      max_top_population=top)


# --- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    swept_value: float
    mean_fidelity: float
    std_error: float
    min_fidelity: float
    n_states: int


SWEEP_HEADER = tuple(f.name for f in fields(SweepRow))


@dataclass
class SweepTable:
    swept: str
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    @property
    def means(self) -> np.ndarray:
        return np.array([r.mean_fidelity for r in self.rows])

    def write_csv(self, fh) -> None:
        for k, v in self.metadata.items():
            fh.write(f"# {k} = {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in self.rows:
            w.writerow([f"{r.swept_value:.17g}", f"{r.mean_fidelity:.17g}", f"{r.std_error:.17g}",
                        f"{r.min_fidelity:.17g}", str(r.n_states)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _row(value: float, res: GateResult) -> SweepRow:
    return SweepRow(float(value), res.mean_fidelity, res.std_error,
                    float(np.min(res.fidelities)), len(res.fidelities))


def _snapshot(sys: SystemParams, derived: DerivedParams) -> dict:
    meta = {}
    for name, dot in (("dot_a", sys.dot_a), ("dot_b", sys.dot_b)):
        for f in fields(dot):
            meta[f"{name}.{f.name}"] = repr(getattr(dot, f.name))
    meta["sim.fock_cutoff"] = sys.cutoff
    meta["epsilon_mev"] = repr(derived.epsilon)
    meta["delta_mev"] = repr(derived.delta)
    meta["loops"] = derived.loops
    meta["gate_time_inv_mev"] = repr(derived.gate_time)
    meta["phi"] = repr(derived.phi)
    return meta


def _pmap(fn, args, workers: int):
    if workers and workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, *zip(*args)))
    return [fn(*a) for a in args]


def _decay_point(sys, derived, gamma, states, mode, method, substeps):
    return run_gate_fidelity(sys, derived, gamma, states, mode=mode, method=method,
                             substeps_per_period=substeps)


def sweep_decay(sys: SystemParams, derived: DerivedParams, gamma_ratios, states: InitialStateSet,
                mode: str = "effective", method: str = "auto", substeps_per_period: int = 200,
                lifetime_ns: float = 5.0, workers: int = 1) -> SweepTable:
    """Mean fidelity versus cavity decay ``gamma = ratio * gamma0``; rows sorted by ratio."""
    ratios = sorted(float(r) for r in gamma_ratios)
    if not ratios:
        raise ValueError("empty decay grid")
    g0 = gamma0(lifetime_ns, sys.hbar_mev_ps)
    args = [(sys, derived, r * g0, states, mode, method, substeps_per_period) for r in ratios]
    results = _pmap(_decay_point, args, workers)
    meta = {"tool": f"qdgate {__version__}", "sweep": "decay", "swept": "gamma_over_gamma0",
            "mode": mode, "seed": states.seed, "n_states": states.count,
            "gamma0_mev": repr(g0), **_snapshot(sys, derived)}
    return SweepTable("gamma_over_gamma0", [_row(r, res) for r, res in zip(ratios, results)], meta)


def _fluct_point(sys, derived, gamma, states, spec, mode, method, substeps):
    if mode == "effective":
        cp = perturbed_couplings(sys, derived, spec)
        return run_gate_fidelity(sys, derived, gamma, states, mode=mode, couplings=cp,
                                 method=method, substeps_per_period=substeps)
    if spec.parameter == "epsilon":
        raise ValueError("epsilon fluctuations are defined for the effective model only")
    return run_gate_fidelity(perturb_system(sys, spec), derived, gamma, states, mode=mode,
                             substeps_per_period=substeps)


def sweep_fluctuation(sys: SystemParams, derived: DerivedParams, specs, states: InitialStateSet,
                      gamma: float | None = None, mode: str = "effective", method: str = "auto",
                      substeps_per_period: int = 200, workers: int = 1) -> SweepTable:
    """Mean fidelity versus a common relative error ``zeta`` in one parameter class.

    The schedule (gate time, loop count, target phase) stays at the nominal
    plan: the operator does not know about the error.
    """
    specs = sorted(specs, key=lambda s: s.zeta)
    if not specs:
        raise ValueError("empty fluctuation grid")
    params = {s.parameter for s in specs}
    if len(params) != 1:
        raise ValueError(f"one parameter class per table, got {sorted(params)}")
    gamma = gamma0() if gamma is None else gamma
    args = [(sys, derived, gamma, states, s, mode, method, substeps_per_period) for s in specs]
    results = _pmap(_fluct_point, args, workers)
    meta = {"tool": f"qdgate {__version__}", "sweep": "fluctuation", "swept": "zeta",
            "parameter": specs[0].parameter, "mode": mode, "seed": states.seed,
            "n_states": states.count, "gamma_mev": repr(gamma), **_snapshot(sys, derived)}
    return SweepTable("zeta", [_row(s.zeta, r) for s, r in zip(specs, results)], meta)


# --- full vs effective -----------------------------------------------------

@dataclass
class EffectiveComparison:
    scale: float
    detuning_ratio: float          # Delta_A / |Omega_A|
    overlaps: np.ndarray           # (4, 4) <eff_r | full_s>
    gate_fidelity: float
    leakage: tuple[float, float]   # max |e> population per dot
    leakage_bound: tuple[float, float]
    steps: int

    @property
    def infidelity(self) -> float:
        return 1.0 - self.gate_fidelity

    @property
    def sector_overlaps(self) -> dict:
        return {s: abs(self.overlaps[i, i]) ** 2 for i, s in enumerate(qcore.SECTORS)}

    @property
    def leakage_ok(self) -> bool:
        return all(x <= b for x, b in zip(self.leakage, self.leakage_bound))


def average_gate_fidelity(m: np.ndarray) -> float:
    """Average fidelity of a (possibly leaky) map with overlap matrix ``m``."""
    d = m.shape[0]
    return float((np.sum(np.abs(m) ** 2) + abs(np.trace(m)) ** 2).real / (d * (d + 1)))


def compare_generators(gen_a: HamiltonianGenerator, gen_b: HamiltonianGenerator, horizon: float,
                       substeps_per_period: int = 50, max_steps: int | None = 2_000_000):
    """Propagate the four sector states (field in vacuum) under two generators."""
    n = gen_a.cutoff
    kets = np.array([qcore.product_state(s, qcore.basis(n, 0)) for s in qcore.SECTORS]).T
    w = max(gen_a.max_frequency, gen_b.max_frequency)
    steps = max(1, math.ceil(horizon * w / (2.0 * math.pi) * substeps_per_period - 1e-6))
    if max_steps is not None and steps > max_steps:
        raise IntractableError(steps, max_steps)
    cfg = IntegratorConfig(horizon=horizon, dt=horizon / steps)
    psi_a, diag_a = evolve_state(kets, gen_a, cfg)
    psi_b, diag_b = evolve_state(kets, gen_b, cfg)
    # RK4 is not exactly norm preserving; divide the drift out so the overlaps
    # measure direction only (excited-level leakage stays inside the kets)
    psi_a = psi_a / np.linalg.norm(psi_a, axis=0)
    psi_b = psi_b / np.linalg.norm(psi_b, axis=0)
    return psi_a.conj().T @ psi_b, diag_a, diag_b


def verify_effective(sys: SystemParams, loops: int = 1, scales=(1.0, 2.0, 4.0),
                     substeps_per_period: int = 50, max_steps: int | None = 2_000_000,
                     margin: float = 10.0) -> list[EffectiveComparison]:
    """Full vs effective propagation of the four sector states at ``gamma = 0``.

    For each scale, detunings are multiplied by ``scale`` and Rabi frequencies
    by ``sqrt(scale)``; the effective model uses each dot's own ``lambda_j``.
    """
    out = []
    for s in scales:
        ss = scaled_dots(sys, s)
        cp = EffectiveCouplings.from_dots(ss)
        horizon = 2.0 * math.pi * loops / abs(ss.dot_a.delta)
        est = step_count(HamiltonianGenerator.full(ss),
                         IntegratorConfig(horizon=horizon, substeps_per_period=substeps_per_period))
        if max_steps is not None and est > max_steps:
            raise IntractableError(est, max_steps)
        m, d_eff, d_full = compare_generators(HamiltonianGenerator.effective(cp, ss.cutoff),
                                              HamiltonianGenerator.full(ss), horizon,
                                              substeps_per_period, max_steps)
        bound = tuple(margin * (abs(d.omega) / (2.0 * abs(d.delta_laser))) ** 2 for d in ss.dots)
        out.append(EffectiveComparison(
            scale=s, detuning_ratio=abs(ss.dot_a.delta_laser) / abs(ss.dot_a.omega), overlaps=m,
            gate_fidelity=average_gate_fidelity(m), leakage=d_full.max_excited_population,
            leakage_bound=bound, steps=d_full.steps))
    return out


def nominal(delta: float = 0.025, cutoff: int = 12):
    """Decay-study system and its derived schedule."""
    from .model import reference_system
    sys = reference_system(delta=delta, cutoff=cutoff)
    return sys, derive(sys)
