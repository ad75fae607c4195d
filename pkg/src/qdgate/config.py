"""Run configuration: ``section.key = value`` files and dotted overrides.

Grammar::

    # comment                      (also allowed after a value)
    dot_a.g = 0.10                 numbers in the declared units, no suffixes
    sweep.zetas = 0, 0.02, 0.04    comma-separated lists

Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DotParams, SystemParams


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


# key -> (default, parser, help)
SCHEMA = {
    "dot_a.g": (0.10, float, "cavity coupling of dot A (meV)"),
    "dot_a.omega": (10.0, float, "Rabi frequency Omega_A (meV)"),
    "dot_a.omega_prime": (10.0, float, "Rabi frequency Omega'_A (meV)"),
    "dot_a.delta_laser": (200.0, float, "laser detuning Delta_A (meV)"),
    "dot_a.delta_laser_prime": (200.0, float, "laser detuning Delta'_A (meV)"),
    "dot_b.g": (0.08, float, "cavity coupling of dot B (meV)"),
    "dot_b.omega": (13.75, float, "Rabi frequency Omega_B (meV)"),
    "dot_b.omega_prime": (13.75, float, "Rabi frequency Omega'_B (meV)"),
    "dot_b.delta_laser": (220.0, float, "laser detuning Delta_B (meV)"),
    "dot_b.delta_laser_prime": (220.0, float, "laser detuning Delta'_B (meV)"),
    "gate.delta": (0.025, float, "loop detuning delta = Delta_C - Delta, common to both dots (meV)"),
    "gate.target_phi": (math.pi / 2, float, "target conditional phase Phi (rad)"),
    "gate.epsilon": (None, _optional_float, "effective coupling (meV); 'auto' = mean of lambda_A, lambda_B"),
    "gate.lambda_tolerance": (1e-6, float, "allowed |lambda_A - lambda_B| (meV)"),
    "cavity.gamma_ratio": (0.0, float, "cavity decay in units of gamma0"),
    "cavity.lifetime_ns": (5.0, float, "photon lifetime defining gamma0 (ns)"),
    "sim.fock_cutoff": (12, int, "Fock levels kept"),
    "sim.mode": ("effective", str, "effective | full"),
    "sim.method": ("auto", str, "auto | density | branch (effective mode)"),
    "sim.substeps": (200, int, "RK4 substeps per period of the fastest phase"),
    "sim.strict": (False, _bool, "treat truncation warnings as errors"),
    "sim.max_steps": (2_000_000, int, "RK4 step budget for a single propagation"),
    "run.seed": (20100601, int, "seed of the initial-state generator"),
    "run.n_states": (500, int, "number of random initial states"),
    "run.workers": (1, int, "worker processes for sweeps"),
    "sweep.gamma_ratios": ((0.0, 0.5, 1.0, 1.5, 2.0), _floats, "decay grid in units of gamma0"),
    "sweep.zetas": ((0.0, 0.01, 0.02, 0.03, 0.04), _floats, "relative fluctuation grid"),
    "sweep.parameter": ("g", str, "g | omega | delta_laser | delta_cavity | epsilon"),
    "phases.loops": (1, int, "number of loops to sample"),
    "phases.samples": (1000, int, "samples over the whole span"),
    "verify.preset": ("reduced", str, "reduced | config: system used by verify-effective"),
    "verify.scales": ((1.0, 2.0, 4.0), _floats, "detuning scale points"),
    "verify.loops": (1, int, "loops to propagate"),
    "verify.substeps": (50, int, "RK4 substeps per fastest period"),
}


def defaults() -> dict:
    return {k: v[0] for k, v in SCHEMA.items()}


def parse_value(key: str, text: str):
    if key not in SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return SCHEMA[key][1](text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None


def parse_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{source}:{lineno}: key {key!r} must be 'section.key'")
        try:
            out[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), str(path))


def dump(values: dict) -> str:
    lines = []
    for key, (default, _, help_) in SCHEMA.items():
        v = values.get(key, default)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        elif v is None:
            v = "auto"
        lines.append(f"{key} = {v}  # {help_}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def build(cls, file_values: dict | None = None, overrides: dict | None = None) -> "RunConfig":
        v = defaults()
        v.update(file_values or {})
        v.update(overrides or {})
        if v["sim.mode"] not in ("effective", "full"):
            raise ConfigError(f"sim.mode must be 'effective' or 'full', got {v['sim.mode']!r}")
        if v["sim.method"] not in ("auto", "density", "branch"):
            raise ConfigError(f"sim.method must be auto, density or branch, got {v['sim.method']!r}")
        if v["gate.delta"] == 0:
            raise ConfigError("zero detuning: gate.delta must be non-zero")
        if v["sim.fock_cutoff"] < 2:
            raise ConfigError("sim.fock_cutoff must be >= 2")
        if v["run.n_states"] < 1:
            raise ConfigError("run.n_states must be >= 1")
        return cls(v)

    def dot(self, name: str) -> DotParams:
        v = self.values
        return DotParams(g=v[f"{name}.g"], omega=v[f"{name}.omega"],
                         omega_prime=v[f"{name}.omega_prime"],
                         delta_laser=v[f"{name}.delta_laser"],
                         delta_laser_prime=v[f"{name}.delta_laser_prime"],
                         delta_cavity=v[f"{name}.delta_laser"] + v["gate.delta"])

    def system(self, gamma: float = 0.0) -> SystemParams:
        return SystemParams(dot_a=self.dot("dot_a"), dot_b=self.dot("dot_b"), gamma=gamma,
                            cutoff=self.values["sim.fock_cutoff"])
