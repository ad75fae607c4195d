import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from qdgate import geometry

EPS, DELTA = 0.0025, 0.025


def test_alpha_half_loop_matches_quadrature():
    t = math.pi / DELTA
    fg, gf, gg = geometry.alpha_closed_form(EPS, DELTA, t)
    # alpha(t) = integral of i conj(eps) exp(-i delta s) ds
    re = quad(lambda s: (1j * EPS * np.exp(-1j * DELTA * s)).real, 0, t)[0]
    im = quad(lambda s: (1j * EPS * np.exp(-1j * DELTA * s)).imag, 0, t)[0]
    assert complex(fg) == pytest.approx(0.2, abs=1e-14)
    assert complex(fg) == pytest.approx(re + 1j * im, abs=1e-12)
    assert gf == fg and gg == pytest.approx(2 * fg)


def test_alpha_zero_drive_and_closure():
    assert all(np.all(x == 0) for x in geometry.alpha_closed_form(0.0, DELTA, np.linspace(0, 500, 7)))
    for loops in range(1, 11):
        t = 2 * math.pi * loops / DELTA
        assert max(abs(x) for x in geometry.alpha_closed_form(EPS, DELTA, t)) <= 1e-12 * EPS / DELTA


def test_zero_delta_rejected():
    with pytest.raises(ValueError):
        geometry.alpha_closed_form(EPS, 0.0, 1.0)
    with pytest.raises(ValueError):
        geometry.phases_closed_form(EPS, 0.0, 1.0)


def test_phases_one_loop():
    t = 2 * math.pi / DELTA
    phi_fg, phi_gf, theta, phi_gg = geometry.phases_closed_form(EPS, DELTA, t)
    assert phi_fg == pytest.approx(-0.06283185307179587, rel=1e-14)
    assert phi_gf == phi_fg
    assert phi_gg == pytest.approx(-0.25132741228718347, rel=1e-14)
    assert phi_gg == pytest.approx(phi_fg + phi_gf + theta, rel=1e-15)


def test_phases_small_time_cubic():
    t = np.array([1e-3, 2e-3])
    phi_fg = geometry.phases_closed_form(EPS, DELTA, t)[0]
    expect = -(EPS ** 2 / DELTA) * DELTA ** 2 * t ** 3 / 6
    np.testing.assert_allclose(phi_fg, expect, rtol=1e-9)
    assert phi_fg[1] / phi_fg[0] == pytest.approx(8, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 1e-2), st.floats(1e-3, 1.0), st.floats(1e-3, 1e5))
def test_phase_ratio_all_times(eps, delta, t):
    phi_fg, _, _, phi_gg = geometry.phases_closed_form(eps, delta, t)
    if phi_fg != 0:
        assert abs(phi_gg - 4 * phi_fg) <= 1e-12 * abs(4 * phi_fg)


def test_polyline_square_and_out_and_back():
    theta, net = geometry.total_phase_polyline([0, 1, 1 + 1j, 1j, 0])
    assert theta == pytest.approx(2.0, abs=1e-15) and net == 0
    theta, net = geometry.total_phase_polyline([0.3, 1.7 - 0.2j, 0.3])
    assert theta == pytest.approx(0.0, abs=1e-15) and net == 0


def test_polyline_matches_shoelace_random_polygon():
    rng = np.random.default_rng(11)
    ang = np.sort(rng.uniform(0, 2 * math.pi, 12))
    pts = rng.uniform(0.5, 1.5, 12) * np.exp(1j * ang)
    x, y = pts.real, pts.imag
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    theta, _ = geometry.total_phase_polyline(np.append(pts, pts[0]))
    assert theta == pytest.approx(2 * area, rel=1e-12)


def test_polyline_needs_two_points():
    with pytest.raises(ValueError):
        geometry.total_phase_polyline([1.0])


def test_polyline_equals_displacement_product():
    from qdgate import qcore
    pts = np.array([0, 0.2, 0.25 + 0.1j, 0.1 + 0.2j])
    prod = np.eye(30, dtype=complex)
    for da in np.diff(pts):
        prod = qcore.displacement_matrix(da, 30) @ prod
    theta, net = geometry.total_phase_polyline(pts)
    ref = np.exp(1j * theta) * qcore.displacement_matrix(net, 30)
    np.testing.assert_allclose(prod[:10, :10], ref[:10, :10], atol=1e-12)


def test_quadrature_matches_closed_form_and_is_second_order():
    t_end = 2 * math.pi / DELTA
    exact = geometry.phases_closed_form(EPS, DELTA, t_end)[0]
    assert geometry.loop_phase_quadrature(EPS, DELTA, t_end, 100_000) == pytest.approx(exact, rel=1e-6)
    errs = [abs(geometry.loop_phase_quadrature(EPS, DELTA, t_end, n) - exact) for n in (64, 128, 256)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_ideal_gates():
    u = geometry.ideal_gate(math.pi / 2).unitary
    np.testing.assert_allclose(np.diag(u), [1, -1j, -1j, 1], atol=1e-15)
    c = geometry.ideal_gate(math.pi / 2, corrected=True)
    np.testing.assert_allclose(np.diag(c.unitary), [1, 1, 1, -1], atol=1e-15)
    assert c.corrected
    for corr in (False, True):
        np.testing.assert_array_equal(geometry.ideal_gate(0.0, corr).unitary, np.eye(4))
        g = geometry.ideal_gate(0.77, corr).unitary
        np.testing.assert_allclose(np.abs(np.diag(g)), 1, atol=1e-15)
        assert abs(np.linalg.det(g)) == pytest.approx(1)


def test_path_record_invariants_and_csv():
    t = geometry.loop_times(DELTA, 2, 50)
    rec = geometry.path_record(EPS, DELTA, t)
    np.testing.assert_array_equal(rec.alpha_gf, rec.alpha_fg)
    np.testing.assert_allclose(rec.alpha_gg, rec.alpha_fg + rec.alpha_gf, atol=1e-18)
    np.testing.assert_allclose(rec.phi_gg, rec.phi_fg + rec.phi_gf + rec.theta_gg, atol=1e-15)
    buf = io.StringIO()
    rec.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ("t_inv_mev,t_ps,alpha_fg_re,alpha_fg_im,alpha_gf_re,alpha_gf_im,"
                        "alpha_gg_re,alpha_gg_im,phi_fg,phi_gf,theta_gg,phi_gg")
    assert len(lines) == 51
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == pytest.approx(4 * math.pi / DELTA)
    assert float(lines[-1].split(",")[8]) == rec.phi_fg[-1]   # 17 digits round-trip


def test_loop_times_empty_for_zero_loops():
    assert geometry.loop_times(DELTA, 0, 100).size == 0
