"""Phase-space paths of the conditional cavity displacements and the
resulting unconventional geometric phases.

With the field starting in vacuum, sector ``uv`` evolves as
``exp(i phi_uv) D(alpha_uv)`` where ``alpha_uv`` runs around a circle of
radius ``|eps|/delta`` once every ``2 pi / delta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .model import HBAR_MEV_PS

SECTOR_WEIGHTS = {"ff": 0, "fg": 1, "gf": 1, "gg": 2}


def _t_minus_sinc(delta, t):
    """``t - sin(delta t)/delta`` without cancellation for small ``delta t``."""
    t = np.asarray(t, dtype=float)
    x = delta * t
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    series = xs ** 3 / 6.0 - xs ** 5 / 120.0 + xs ** 7 / 5040.0 - xs ** 9 / 362880.0
    direct = x - np.sin(x)
    return np.where(small, series, direct) / delta


def alpha_closed_form(epsilon: complex, delta: float, t):
    """Displacements ``(alpha_fg, alpha_gf, alpha_gg)`` at time(s) ``t``."""
    if delta == 0:
        raise ValueError("zero detuning delta")
    t = np.asarray(t, dtype=float)
    # expm1 keeps the near-closure values accurate
    a_fg = -(np.conj(epsilon) / delta) * np.expm1(-1j * delta * t)
    return a_fg, a_fg.copy(), 2.0 * a_fg


def phases_closed_form(epsilon: complex, delta: float, t):
    """Accumulated phases ``(phi_fg, phi_gf, theta_gg, phi_gg)`` (unwrapped)."""
    if delta == 0:
        raise ValueError("zero detuning delta")
    s = _t_minus_sinc(delta, t)
    e2 = abs(epsilon) ** 2
    phi_fg = -(e2 / delta) * s
    phi_gf = phi_fg.copy()
    theta_gg = -(2.0 * e2 / delta) * s
    return phi_fg, phi_gf, theta_gg, phi_fg + phi_gf + theta_gg


def total_phase_polyline(path) -> tuple[float, complex]:
    """Phase and net displacement of ``D(da_M) ... D(da_1)`` along a polyline.

    Uses the running sum of previous steps, so the cost is linear in the
    number of points.  For a closed path the result is ``Im(loop integral
    of conj(alpha) d alpha)``, twice the signed enclosed area.
    """
    p = np.asarray(path, dtype=complex)
    if p.ndim != 1 or len(p) < 2:
        raise ValueError("path needs at least 2 points")
    steps = np.diff(p)
    before = p[:-1] - p[0]          # sum of all earlier steps
    theta = float(np.sum((steps * np.conj(before)).imag))
    return theta, complex(p[-1] - p[0])


def loop_phase_quadrature(epsilon: complex, delta: float, t_end: float, n: int,
                          weight: int = 1) -> float:
    """Polyline phase of the sector-``weight`` path sampled at ``n`` segments."""
    t = np.linspace(0.0, t_end, n + 1)
    alpha = weight * alpha_closed_form(epsilon, delta, t)[0]
    return total_phase_polyline(alpha)[0]


@dataclass(frozen=True)
class PathRecord:
    times: np.ndarray
    alpha_fg: np.ndarray
    alpha_gf: np.ndarray
    alpha_gg: np.ndarray
    phi_fg: np.ndarray
    phi_gf: np.ndarray
    theta_gg: np.ndarray
    phi_gg: np.ndarray

    CSV_HEADER = ("t_inv_mev", "t_ps",
                  "alpha_fg_re", "alpha_fg_im", "alpha_gf_re", "alpha_gf_im",
                  "alpha_gg_re", "alpha_gg_im",
                  "phi_fg", "phi_gf", "theta_gg", "phi_gg")

    def rows(self, hbar: float = HBAR_MEV_PS):
        for k, t in enumerate(self.times):
            yield (t, t * hbar,
                   self.alpha_fg[k].real, self.alpha_fg[k].imag,
                   self.alpha_gf[k].real, self.alpha_gf[k].imag,
                   self.alpha_gg[k].real, self.alpha_gg[k].imag,
                   self.phi_fg[k], self.phi_gf[k], self.theta_gg[k], self.phi_gg[k])

    def write_csv(self, fh, hbar: float = HBAR_MEV_PS) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for row in self.rows(hbar):
            w.writerow([f"{float(v):.17g}" for v in row])


def path_record(epsilon: complex, delta: float, times) -> PathRecord:
    times = np.asarray(times, dtype=float)
    return PathRecord(times, *alpha_closed_form(epsilon, delta, times),
                      *phases_closed_form(epsilon, delta, times))


def loop_times(delta: float, loops: int, samples: int) -> np.ndarray:
    """``samples`` evenly spaced times spanning ``loops`` full loops (empty if 0 loops)."""
    if loops <= 0 or samples <= 0:
        return np.zeros(0)
    return np.linspace(0.0, 2.0 * math.pi * loops / abs(delta), samples)


@dataclass(frozen=True)
class IdealGate:
    phi: float
    unitary: np.ndarray
    corrected: bool


def ideal_gate(phi: float, corrected: bool = False) -> IdealGate:
    """Diagonal gate on (ff, fg, gf, gg).

    Uncorrected: ``(1, e^{-i phi}, e^{-i phi}, e^{-4 i phi})``.  The corrected
    gate applies ``|g> -> e^{i phi}|g>`` on each dot, leaving ``e^{-2 i phi}``
    on ``gg`` only.
    """
    weights = np.array([0, 1, 1, 4]) if not corrected else np.array([0, 0, 0, 2])
    diag = np.exp(-1j * phi * weights)
    return IdealGate(phi=phi, unitary=np.diag(diag), corrected=corrected)
