"""Fidelity when one parameter class is off by a common relative error."""

# %%
from qdgate import experiments as ex
from qdgate.model import gamma0

states = ex.generate_initial_states(20100601, 200)
sys, d = ex.nominal(0.2)
zetas = (0.0, 0.01, 0.02, 0.03, 0.04)

# %% [markdown]
# The operator keeps the nominal schedule. Errors in g, Omega or epsilon
# only rescale the loop radius, so the phase overshoots quadratically.

# %%
for p in ("g", "omega", "epsilon"):
    t = ex.sweep_fluctuation(sys, d, [ex.FluctuationSpec(z, p) for z in zetas], states, gamma=gamma0())
    print(p.ljust(8), " ".join(f"{m:.5f}" for m in t.means))

# %% [markdown]
# A relative error on a detuning of about 200 meV shifts delta by meV,
# ten times its nominal value or more. The loops shrink, almost no phase
# builds up, and the gate acts like the identity: averaged over input
# states, the identity overlaps diag(1, -i, -i, 1) with fidelity 2/3.

# %%
for p in ("delta_laser", "delta_cavity"):
    cp = ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.01, p))
    print(f"{p}: loop detunings at zeta = 0.01 -> {cp.deltas[0]:.4f}, {cp.deltas[1]:.4f} meV")
    t = ex.sweep_fluctuation(sys, d, [ex.FluctuationSpec(z, p) for z in zetas], states, gamma=gamma0())
    print(p.ljust(12), " ".join(f"{m:.5f}" for m in t.means))
