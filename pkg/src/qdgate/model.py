"""Physical parameters, unit conversion and the effective-model quantities.

Internal units: hbar = 1, energies in meV, times in 1/meV.  Picoseconds and
nanoseconds only appear at the input/output boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

HBAR_MEV_PS = 0.65821195  # meV ps


@dataclass(frozen=True)
class DotParams:
    """One quantum dot; all entries in meV.

    ``delta_cavity`` is the cavity detuning; the difference
    ``delta_cavity - delta_laser`` is the loop frequency of the gate.
    """

    g: float
    omega: complex
    omega_prime: complex
    delta_laser: float
    delta_laser_prime: float
    delta_cavity: float

    def __post_init__(self):
        vals = (self.g, self.omega, self.omega_prime, self.delta_laser,
                self.delta_laser_prime, self.delta_cavity)
        if not all(math.isfinite(abs(v)) for v in vals):
            raise ValueError("dot parameters must be finite")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")

    @property
    def delta(self) -> float:
        return self.delta_cavity - self.delta_laser


@dataclass(frozen=True)
class SystemParams:
    dot_a: DotParams
    dot_b: DotParams
    gamma: float = 0.0
    cutoff: int = 12
    hbar_mev_ps: float = HBAR_MEV_PS

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("cavity decay rate must be >= 0")
        if self.cutoff < 2:
            raise ValueError("Fock cutoff must be >= 2")

    @property
    def dots(self) -> tuple[DotParams, DotParams]:
        return (self.dot_a, self.dot_b)

    def with_gamma(self, gamma: float) -> "SystemParams":
        return replace(self, gamma=gamma)


@dataclass(frozen=True)
class Schedule:
    loops: int
    gate_time: float      # 1/meV
    gate_time_ps: float
    phi: float            # achieved conditional phase
    phase_error: float    # |phi - target| / target


@dataclass(frozen=True)
class DerivedParams:
    lambda_a: complex
    lambda_b: complex
    epsilon: complex
    delta: float
    schedule: Schedule
    target_phi: float = math.pi / 2

    @property
    def loops(self) -> int:
        return self.schedule.loops

    @property
    def gate_time(self) -> float:
        return self.schedule.gate_time

    @property
    def phi(self) -> float:
        return self.schedule.phi


class ScheduleError(ValueError):
    pass


class MatchingError(ValueError):
    """Per-dot effective couplings differ by more than the matching tolerance."""


# --- unit conversion -------------------------------------------------------

_CONVERSIONS = {
    # energy (meV) <-> angular frequency (rad/ps)
    "mev_to_angular_per_ps": lambda x, h: x / h,
    "angular_per_ps_to_mev": lambda x, h: x * h,
    # time in 1/meV <-> ps
    "inv_mev_to_ps": lambda x, h: x * h,
    "ps_to_inv_mev": lambda x, h: x / h,
    # rate in 1/ns <-> energy hbar*rate in meV
    "per_ns_to_mev": lambda x, h: x * h * 1e-3,
    "mev_to_per_ns": lambda x, h: x / (h * 1e-3),
}


def convert_units(value, kind: str, hbar: float = HBAR_MEV_PS):
    """Convert between internal and laboratory units.

    ``kind`` is one of ``mev_to_angular_per_ps``, ``angular_per_ps_to_mev``,
    ``inv_mev_to_ps``, ``ps_to_inv_mev``, ``per_ns_to_mev``, ``mev_to_per_ns``.
    """
    try:
        fn = _CONVERSIONS[kind]
    except KeyError:
        raise ValueError(f"unknown conversion {kind!r}; choose from {sorted(_CONVERSIONS)}") from None
    return fn(value, hbar)


def gamma0(lifetime_ns: float = 5.0, hbar: float = HBAR_MEV_PS) -> float:
    """Cavity decay rate ``1/lifetime`` expressed in meV."""
    return convert_units(1.0 / lifetime_ns, "per_ns_to_mev", hbar)


# --- derived quantities ----------------------------------------------------

def derive_lambda(dot: DotParams) -> complex:
    """Effective cavity-drive coupling ``conj(Omega) g / 4 * (1/Delta + 1/Delta_C)``."""
    if dot.delta_laser == 0 or dot.delta_cavity == 0:
        raise ZeroDivisionError("laser and cavity detunings must be non-zero")
    return complex(
        complex(dot.omega).conjugate() * dot.g / 4.0
        * (1.0 / dot.delta_laser + 1.0 / dot.delta_cavity)
    )


def gate_schedule(epsilon: complex, delta: float, target_phi: float = math.pi / 2,
                  hbar: float = HBAR_MEV_PS) -> Schedule:
    """Loop count and gate time hitting ``target_phi`` as closely as possible.

    One loop of duration ``2 pi / delta`` accumulates ``2 pi |eps|^2 / delta^2``;
    the loop count is rounded and the residual phase error is reported.
    """
    if delta == 0:
        raise ScheduleError("zero detuning delta")
    if epsilon == 0:
        raise ScheduleError("zero effective coupling epsilon")
    if not target_phi > 0:
        raise ScheduleError("target phase must be positive")
    per_loop = 2.0 * math.pi * abs(epsilon) ** 2 / delta ** 2
    loops = round(target_phi / per_loop)
    if loops < 1:
        raise ScheduleError(
            f"schedule infeasible: one loop already gives {per_loop:.4g} rad > target {target_phi:.4g}"
        )
    t = 2.0 * math.pi * loops / abs(delta)
    phi = loops * per_loop
    return Schedule(loops=loops, gate_time=t, gate_time_ps=t * hbar, phi=phi,
                    phase_error=abs(phi - target_phi) / target_phi)


def derive(sys: SystemParams, target_phi: float = math.pi / 2, epsilon: complex | None = None,
           match_tol: float = 1e-6, delta_tol: float = 1e-9) -> DerivedParams:
    """Effective-model parameters for a two-dot system.

    ``epsilon`` defaults to the mean of the two per-dot couplings, which must
    agree within ``match_tol`` meV.
    """
    la, lb = derive_lambda(sys.dot_a), derive_lambda(sys.dot_b)
    da, db = sys.dot_a.delta, sys.dot_b.delta
    if abs(da - db) > delta_tol:
        raise ValueError(f"dots have different loop detunings: {da!r} vs {db!r}")
    if epsilon is None:
        if abs(la - lb) > match_tol:
            raise MatchingError(
                f"|lambda_A - lambda_B| = {abs(la - lb):.3g} meV exceeds tolerance {match_tol:g}"
            )
        epsilon = 0.5 * (la + lb)
    delta = 0.5 * (da + db)
    sched = gate_schedule(epsilon, delta, target_phi, sys.hbar_mev_ps)
    return DerivedParams(lambda_a=la, lambda_b=lb, epsilon=complex(epsilon), delta=delta,
                         schedule=sched, target_phi=target_phi)


# --- regime validation -----------------------------------------------------

@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    value: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple[Condition, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, k: int) -> Condition:
        # 1-based, matching the numbering of the regime conditions
        return self.conditions[k - 1]

    def lines(self) -> list[str]:
        return [f"({i}) {'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}"
                for i, c in enumerate(self.conditions, 1)]


def validate_regime(sys: SystemParams, ratio: float = 10.0, rel_tol: float = 1e-9,
                    delta_tol: float = 1e-9) -> ValidationReport:
    """Check the five large-detuning conditions.  Advisory only; never raises."""
    dots = sys.dots
    conds = []

    worst = max(abs(abs(d.omega) - abs(d.omega_prime)) / max(abs(d.omega), 1e-300) for d in dots)
    conds.append(Condition("|Omega| = |Omega'|", worst <= rel_tol, worst,
                           f"max relative mismatch {worst:.3g}"))

    worst = max(abs(d.delta_laser - d.delta_laser_prime) / max(abs(d.delta_laser), 1e-300)
                for d in dots)
    conds.append(Condition("Delta = Delta'", worst <= rel_tol, worst,
                           f"max relative mismatch {worst:.3g}"))

    r = min(min(abs(d.delta_laser), abs(d.delta_laser_prime))
            / max(abs(d.g), abs(d.omega), abs(d.omega_prime)) for d in dots)
    conds.append(Condition("large detuning", r >= ratio, r,
                           f"min |Delta|/max(|g|,|Omega|) = {r:.4g} (threshold {ratio:g})"))

    gap = abs(dots[0].delta - dots[1].delta)
    conds.append(Condition("common delta", gap <= delta_tol, gap,
                           f"|delta_A - delta_B| = {gap:.3g} meV"))

    r = min(abs(d.omega) / abs(d.g) if d.g else math.inf for d in dots)
    conds.append(Condition("|Omega| >> |g|", r >= ratio, r,
                           f"min |Omega|/|g| = {r:.4g} (threshold {ratio:g})"))
    return ValidationReport(tuple(conds))


# --- presets ---------------------------------------------------------------

def reference_dots(delta: float = 0.025) -> tuple[DotParams, DotParams]:
    """Two-dot parameter set of the decay study; cavity detunings set by ``delta``."""
    a = DotParams(g=0.10, omega=10.0, omega_prime=10.0, delta_laser=200.0,
                  delta_laser_prime=200.0, delta_cavity=200.0 + delta)
    b = DotParams(g=0.08, omega=13.75, omega_prime=13.75, delta_laser=220.0,
                  delta_laser_prime=220.0, delta_cavity=220.0 + delta)
    return a, b


def reference_system(delta: float = 0.025, gamma: float = 0.0, cutoff: int = 12) -> SystemParams:
    a, b = reference_dots(delta)
    return SystemParams(dot_a=a, dot_b=b, gamma=gamma, cutoff=cutoff)


def reduced_system(delta: float = 0.025, cutoff: int = 10) -> SystemParams:
    """Same coupling ratios as ``reference_system`` with detunings scaled down to
    ``Delta_A / Omega_A = 20`` so the full Hamiltonian can be integrated."""
    a = DotParams(g=0.10, omega=1.0, omega_prime=1.0, delta_laser=20.0,
                  delta_laser_prime=20.0, delta_cavity=20.0 + delta)
    b = DotParams(g=0.08, omega=1.375, omega_prime=1.375, delta_laser=22.0,
                  delta_laser_prime=22.0, delta_cavity=22.0 + delta)
    return SystemParams(dot_a=a, dot_b=b, gamma=0.0, cutoff=cutoff)
