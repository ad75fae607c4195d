"""Gate fidelity against cavity loss for the two loop detunings."""

# %%
from qdgate import experiments as ex
from qdgate.model import validate_regime

states = ex.generate_initial_states(20100601, 200)
ratios = (0.0, 0.5, 1.0, 1.5, 2.0)

# %% [markdown]
# delta = 0.025 meV is a quarter of g_A, delta = 0.2 meV is twice g_A.
# The larger detuning needs many more loops but keeps the field smaller.

# %%
for delta in (0.025, 0.2):
    sys, d = ex.nominal(delta)
    print(f"delta = {delta} meV: {d.loops} loops, T = {d.schedule.gate_time_ps / 1e3:.2f} ns, "
          f"max |alpha_gg| = {4 * abs(d.epsilon / d.delta):.3f}")
    table = ex.sweep_decay(sys, d, ratios, states)
    for row in table.rows:
        print(f"  gamma = {row.swept_value:.1f} gamma0   F = {row.mean_fidelity:.5f} +- {row.std_error:.5f}")

# %%
for line in validate_regime(ex.nominal(0.025)[0]).lines():
    print(line)

# %% [markdown]
# The same numbers as a CSV, ready for plotting elsewhere:
#
#     qdgate sweep-decay --gate.delta 0.2 --run.n_states 200 -o decay.csv
