import math
from dataclasses import replace

import numpy as np
import pytest

from qdgate import experiments as ex
from qdgate import lindblad, qcore
from qdgate.hamiltonians import EffectiveCouplings, HamiltonianGenerator
from qdgate.lindblad import IntegratorConfig, evolve
from qdgate.model import derive, derive_lambda, gamma0, reference_system, reduced_system


@pytest.fixture(scope="module")
def small():
    """Reference dots, small cutoff and a two-loop schedule: cheap but non-trivial."""
    sys = reference_system(cutoff=8)
    d0 = derive(sys)
    per_loop = 2 * math.pi * abs(d0.epsilon) ** 2 / d0.delta ** 2
    return sys, derive(sys, target_phi=2 * per_loop)


def test_initial_states_normalized_and_deterministic():
    a = ex.generate_initial_states(7, 50)
    b = ex.generate_initial_states(7, 50)
    np.testing.assert_allclose(np.linalg.norm(a.coefficients, axis=1), 1, atol=1e-12)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert not np.array_equal(a.coefficients, ex.generate_initial_states(8, 50).coefficients)
    assert ex.generate_initial_states(3, 1).coefficients.shape == (1, 4)
    with pytest.raises(ValueError):
        ex.generate_initial_states(3, 0)


def test_initial_states_uniform_on_sphere():
    c = ex.generate_initial_states(123, 100_000).coefficients
    assert np.mean(c[:, 0] ** 2) == pytest.approx(0.25, abs=0.005)
    assert np.isrealobj(c)
    z = ex.generate_initial_states(123, 10, complex_coefficients=True).coefficients
    assert np.iscomplexobj(z)
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1, atol=1e-12)


def test_sector_amplitude_mapping():
    s = ex.InitialStateSet(0, 1, np.array([[0.1, 0.2, 0.3, 0.4]]))
    # (x, y, z, w) multiply ff, gf, fg, gg; sector order is ff, fg, gf, gg
    assert s.sector_amplitudes.tolist() == [[0.1, 0.3, 0.2, 0.4]]


def test_target_state_examples():
    n, phi = 6, math.pi / 2
    np.testing.assert_allclose(ex.target_state([1, 0, 0, 0], phi, n), qcore.product_state("ff", qcore.basis(n, 0)))
    np.testing.assert_allclose(ex.target_state([0, 1, 0, 0], phi, n),
                               -1j * qcore.product_state("gf", qcore.basis(n, 0)), atol=1e-15)
    np.testing.assert_allclose(ex.target_state([0, 0, 0, 1], phi, n),
                               qcore.product_state("gg", qcore.basis(n, 0)), atol=1e-15)


def test_linear_contraction_matches_per_state_evolution(small):
    sys, d = small
    states = ex.generate_initial_states(99, 4)
    g = 3 * gamma0()
    res = ex.run_gate_fidelity(sys, d, g, states)
    gen = HamiltonianGenerator.effective(d, sys.cutoff)
    for k, c in enumerate(states.coefficients):
        psi = ex.input_state(c, sys.cutoff)
        rho, _ = evolve(np.outer(psi, psi.conj()), gen, g, IntegratorConfig(horizon=d.gate_time))
        f = lindblad.fidelity(rho, ex.target_state(c, d.phi, sys.cutoff))
        assert res.fidelities[k] == pytest.approx(f, abs=1e-12)


def test_branch_and_density_methods_agree(small):
    sys, d = small
    states = ex.generate_initial_states(5, 30)
    a = ex.run_gate_fidelity(sys, d, gamma0(), states, method="density")
    b = ex.run_gate_fidelity(sys, d, gamma0(), states, method="branch")
    assert a.method == "density" and b.method == "branch"
    np.testing.assert_allclose(a.fidelities, b.fidelities, atol=1e-8)


def test_dark_sector_exact(small):
    sys, d = small
    states = ex.InitialStateSet(0, 1, np.array([[1.0, 0, 0, 0]]))
    for g in (0.0, gamma0(), 10 * gamma0()):
        assert ex.run_gate_fidelity(sys, d, g, states).mean_fidelity == pytest.approx(1, abs=1e-9)


def test_fidelities_bounded(small):
    sys, d = small
    res = ex.run_gate_fidelity(sys, d, 2 * gamma0(), ex.generate_initial_states(1, 200))
    assert np.all(res.fidelities >= 0) and np.all(res.fidelities <= 1 + 1e-9)
    assert res.std_error > 0


def test_effective_channel_method_selection():
    cp = EffectiveCouplings.uniform(0.0025, 0.025)
    loop = 2 * math.pi / 0.025
    with pytest.raises(ValueError, match="whole number"):
        ex.effective_channel(cp, 0.0, 1.5 * loop, 6, method="density")
    assert ex.effective_channel(cp, 0.0, 1.5 * loop, 6).method == "branch"
    split = EffectiveCouplings((0.0025, 0.0025), (0.025, 0.026))
    assert ex.effective_channel(split, 0.0, loop, 6).method == "branch"
    with pytest.raises(ValueError):
        ex.effective_channel(cp, 0.0, loop, 6, method="magic")


def test_fluctuation_spec_validation():
    with pytest.raises(ValueError):
        ex.FluctuationSpec(1.0, "g")
    with pytest.raises(ValueError):
        ex.FluctuationSpec(-0.1, "g")
    with pytest.raises(ValueError):
        ex.FluctuationSpec(0.1, "hbar")


def test_perturbed_couplings():
    sys = reference_system()
    d = derive(sys)
    nominal = EffectiveCouplings.from_derived(d)
    for p in ex.PARAMETER_CLASSES:
        assert ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.0, p)) == nominal
    eps_cp = ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.02, "epsilon"))
    assert eps_cp.lambdas[0] == pytest.approx(1.02 * d.epsilon) and eps_cp.common_delta
    g_cp = ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.02, "g"))
    assert g_cp.lambdas[1] == pytest.approx(1.02 * d.epsilon, rel=1e-14)
    dc = ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.01, "delta_cavity"))
    assert dc.deltas[0] == pytest.approx(d.delta + 0.01 * sys.dot_a.delta_cavity, rel=1e-12)
    assert dc.deltas[1] == pytest.approx(d.delta + 0.01 * sys.dot_b.delta_cavity, rel=1e-12)
    dl = ex.perturbed_couplings(sys, d, ex.FluctuationSpec(0.01, "delta_laser"))
    assert dl.deltas[0] == pytest.approx(d.delta - 0.01 * sys.dot_a.delta_laser, rel=1e-12)
    om = ex.perturb_system(sys, ex.FluctuationSpec(0.03, "omega"))
    assert om.dot_b.omega_prime == pytest.approx(1.03 * 13.75)
    assert derive_lambda(om.dot_a) == pytest.approx(1.03 * derive_lambda(sys.dot_a))


def test_sweep_decay_table(small):
    sys, d = small
    states = ex.generate_initial_states(4, 20)
    t = ex.sweep_decay(sys, d, [2.0, 0.0, 1.0], states)
    assert [r.swept_value for r in t.rows] == [0.0, 1.0, 2.0]
    assert np.all(np.diff(t.means) <= 0)
    csv = t.to_csv()
    body = [line for line in csv.splitlines() if not line.startswith("#")]
    assert body[0] == "swept_value,mean_fidelity,std_error,min_fidelity,n_states"
    assert "# mode = effective" in csv and "# seed = 4" in csv
    with pytest.raises(ValueError):
        ex.sweep_decay(sys, d, [], states)


def test_sweep_fluctuation_zero_row_matches_decay_point(small):
    sys, d = small
    states = ex.generate_initial_states(4, 20)
    decay = ex.sweep_decay(sys, d, [1.0], states)
    fl = ex.sweep_fluctuation(sys, d, [ex.FluctuationSpec(z, "omega") for z in (0.0, 0.02)], states)
    assert fl.rows[0].mean_fidelity == pytest.approx(decay.rows[0].mean_fidelity, abs=1e-12)
    assert fl.metadata["parameter"] == "omega"
    with pytest.raises(ValueError, match="one parameter class"):
        ex.sweep_fluctuation(sys, d, [ex.FluctuationSpec(0.0, "g"), ex.FluctuationSpec(0.0, "omega")], states)


def test_sweep_identical_across_worker_counts(small):
    sys, d = small
    states = ex.generate_initial_states(11, 25)
    ratios = [0.0, 0.7, 1.3]
    one = ex.sweep_decay(sys, d, ratios, states, workers=1).to_csv()
    two = ex.sweep_decay(sys, d, ratios, states, workers=2).to_csv()
    assert one == two


def test_average_gate_fidelity():
    assert ex.average_gate_fidelity(np.eye(4)) == pytest.approx(1)
    assert ex.average_gate_fidelity(np.diag([1, 1, 1, -1])) == pytest.approx((4 + 4) / 20)


def test_compare_generators_self_check():
    sys = reduced_system(cutoff=6)
    gen = HamiltonianGenerator.effective(EffectiveCouplings.from_dots(sys), 6)
    m, _, _ = ex.compare_generators(gen, gen, 2 * math.pi / 0.025, substeps_per_period=100)
    assert ex.average_gate_fidelity(m) == pytest.approx(1, abs=1e-10)
    np.testing.assert_allclose(np.abs(np.diag(m)), 1, atol=1e-10)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-15)


def test_verify_effective_refuses_intractable():
    with pytest.raises(lindblad.IntractableError) as exc:
        ex.verify_effective(reference_system(cutoff=6), max_steps=10_000)
    assert exc.value.steps > 10_000


def test_full_mode_refuses_intractable(small):
    sys, d = small
    with pytest.raises(lindblad.IntractableError):
        ex.run_gate_fidelity(sys, d, 0.0, ex.generate_initial_states(0, 2), mode="full", max_steps=1000)
    with pytest.raises(ValueError):
        ex.run_gate_fidelity(sys, d, 0.0, ex.generate_initial_states(0, 2), mode="other")


def test_strict_gate_run_flags_truncation():
    sys = replace(reference_system(cutoff=3))
    d = derive(sys)
    with pytest.raises(qcore.TruncationError):
        ex.run_gate_fidelity(sys, d, 0.0, ex.generate_initial_states(0, 2), strict=True)
