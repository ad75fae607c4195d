"""Closed field loops and the conditional phase they leave behind."""

# %%
import math

import numpy as np

from qdgate import geometry
from qdgate.model import derive, reference_system

sys = reference_system()
d = derive(sys)
print(f"epsilon = {d.epsilon.real:.6e} meV, delta = {d.delta:.6f} meV, loops = {d.loops}")

# %% [markdown]
# Each branch with a dot in |g> drives the field around a circle of radius
# |eps/delta|; the |gg> branch moves twice as far. After 2 pi / delta the
# circle closes and only a phase is left.

# %%
t = geometry.loop_times(d.delta, 1, 8)
rec = geometry.path_record(d.epsilon, d.delta, t)
for ti, a, p in zip(t, rec.alpha_gg, rec.phi_gg):
    print(f"t = {ti:9.2f} 1/meV   alpha_gg = {a.real:+.4f}{a.imag:+.4f}j   phi_gg = {p:+.6f}")

# %%
phi_fg, _, _, phi_gg = geometry.phases_closed_form(d.epsilon, d.delta, d.gate_time)
print(f"after {d.loops} loops: phi_fg = {phi_fg:.10f}, phi_gg = {phi_gg:.10f}, ratio = {phi_gg / phi_fg:.12f}")

# %% [markdown]
# The enclosed area gives the same phase: a polyline through the sampled
# path, summed with the displacement composition rule.

# %%
fine = geometry.loop_times(d.delta, 1, 20_000)
poly = geometry.total_phase_polyline(geometry.alpha_closed_form(d.epsilon, d.delta, fine)[0])[0]
per_loop = geometry.phases_closed_form(d.epsilon, d.delta, 2 * math.pi / d.delta)[0]
print(f"one loop: polyline {poly:.9f}, closed form {per_loop:.9f}")

# %%
u = geometry.ideal_gate(d.phi).unitary
print("ideal gate diagonal:", np.round(np.diag(u), 6))
print("with single-qubit corrections:", np.round(np.diag(geometry.ideal_gate(d.phi, True).unitary), 6))
