"""Checking the effective model against the full three-level dynamics."""

# %%
from qdgate import experiments as ex
from qdgate.model import reduced_system

# %% [markdown]
# With Delta = 200 meV the full model needs about 4 x 10^7 RK4 steps per gate,
# so the comparison runs on a reduced system with Delta / Omega = 20 over a
# single loop, then scales the detuning ratio up.
#
# This takes a few minutes.

# %%
sys = reduced_system()
print(f"Delta_A = {sys.dot_a.delta_laser} meV, Omega_A = {sys.dot_a.omega} meV, delta = {sys.dot_a.delta:.3f} meV")
for r in ex.verify_effective(sys):
    print(f"scale {r.scale:g}: Delta/Omega = {r.detuning_ratio:.1f}, infidelity = {r.infidelity:.2e}, "
          f"max |e> population = {max(r.leakage):.2e} (bound {max(r.leakage_bound):.2e}), steps = {r.steps}")
