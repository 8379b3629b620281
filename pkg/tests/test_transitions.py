import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qhsb.perturbation import PerturbationContext, matrix_element
from qhsb.trajectories import EffectiveParams
from qhsb.transitions import (
    PhaseTable,
    Protocol,
    adaptive_panels,
    amplitude_integral,
    bd_coefficients,
    channel_element,
    dB_ddelta,
    dB_dt,
    delta_pulse_amplitude,
    delta_pulse_jump,
    delta_pulse_phases,
    gap,
    gap_formula,
    phase,
    sideband_amplitude,
    sine_sine_phase_integral,
    suppression_times,
)

PULSE = Protocol("delta_pulse", T=6.0, kappa0=0.05, delta_a=0.1, delta_b=0.3, t1=2.0, t2=3.3)


def _periodic(nu, eps=0.05, cycles=10, **kw):
    return Protocol("periodic", kappa0=0.05, omega_drive=1.0, delta0=0.2, epsilon=eps, nu=nu, n_cycles=cycles, **kw)


@pytest.mark.parametrize("n", [0, 3, 7])
def test_gap_formula_matches_sector_energies(n):
    pr = Protocol("quench", alpha=0.6, A_b=1.3)
    eff = pr.plateau_effective(0.25)
    assert gap_formula(n, 1.3, 0.6, 0.25) == pytest.approx(float(gap(n, eff)), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 2), st.floats(0.05, 1.5), st.floats(-0.3, 0.3), st.floats(-1, 1), st.integers(0, 12))
def test_plus_plus_element_from_b_and_d(A_b, g, k, kd, n):
    eff = EffectiveParams(A_f=0.0, A_b=A_b, g=g, kappa=k, kappa_dot=kd)
    B, D = bd_coefficients(n, eff)
    ref = matrix_element(n + 2, 1, n, 1, PerturbationContext(eff, k, kd))
    assert abs(0.5j * kd * B - D * k - ref) < 1e-12
    assert abs(channel_element(n, eff) - ref) < 1e-12


@pytest.mark.parametrize("n", [0, 2, 5])
def test_dB_ddelta_finite_difference(n):
    pr = Protocol("quench", alpha=0.5)
    h = 1e-6
    fd = (bd_coefficients(n, pr.plateau_effective(0.2 + h))[0] - bd_coefficients(n, pr.plateau_effective(0.2 - h))[0]) / (2 * h)
    assert float(dB_ddelta(n, pr.plateau_effective(0.2))) == pytest.approx(fd, rel=1e-7)


def test_dB_dt_finite_difference(fig1):
    h = 1e-6
    for x in (0.4, 2.2, 3.9):
        fd = (bd_coefficients(1, fig1.effective(x + h))[0] - bd_coefficients(1, fig1.effective(x - h))[0]) / (2 * h)
        assert float(dB_dt(1, fig1.effective(x))) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_degenerate_sector_rejected():
    with pytest.raises(ValueError):
        bd_coefficients(0, EffectiveParams(A_f=-1.0, A_b=1.0, g=0.0))


def test_phase_on_constant_background_is_linear():
    pr = Protocol("quench", T=5.0, delta_a=0.2)
    p = pr.parameters()
    assert phase(1, p, 3.0) == pytest.approx(3.0 * gap_formula(1, 1.0, 0.5, 0.2), rel=1e-12)
    assert phase(1, p, 0.0) == 0.0
    with pytest.raises(ValueError):
        phase(1, p, -1.0)


def test_phase_table_agrees_with_quad(fig1):
    rate = lambda s: gap(0, fig1.effective(s))
    table = PhaseTable.build(rate, np.linspace(0, 6, 25))
    for x in (0.7, 3.14, 5.9):
        assert table(x)[0] == pytest.approx(phase(0, fig1, x), abs=1e-9)


def test_adaptive_panels_refine_oscillations():
    edges, vals = adaptive_panels(lambda s: np.exp(40j * s), [0.0, 3.0], epsabs=1e-13)
    assert len(edges) > 2
    assert np.sum(vals) == pytest.approx((np.exp(120j) - 1) / 40j, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-5, 5), st.floats(1, 20))
def test_sine_sine_closed_form(a, b, w, T):
    f = lambda s: math.sin(a * s) * math.sin(b * s)
    re = quad(lambda s: f(s) * math.cos(w * s), 0, T, limit=400, epsabs=1e-13)[0]
    im = quad(lambda s: f(s) * math.sin(w * s), 0, T, limit=400, epsabs=1e-13)[0]
    assert abs(sine_sine_phase_integral(a, b, w, T) - complex(re, im)) < 1e-9


def test_sine_sine_exactly_resonant_is_finite():
    v = sine_sine_phase_integral(1.0, 2.0, 3.0, 10.0)
    f = lambda s: math.sin(s) * math.sin(2 * s)
    re = quad(lambda s: f(s) * math.cos(3 * s), 0, 10, limit=400, epsabs=1e-13)[0]
    im = quad(lambda s: f(s) * math.sin(3 * s), 0, 10, limit=400, epsabs=1e-13)[0]
    assert abs(v - complex(re, im)) < 1e-10


def test_quench_gives_no_transition():
    r = amplitude_integral(0, None, Protocol("quench", T=9.0, kappa0=0.08, delta_a=0.3))
    assert abs(r.I_value) < 1e-12
    assert r.by_parts_difference < 1e-12
    assert r.amplitude == -1j * r.I_value


def test_by_parts_form_agrees_with_direct_integral():
    r = amplitude_integral(1, None, _periodic(0.6))
    assert r.by_parts_difference < 1e-12
    assert abs(r.boundary_term) < 1e-12  # kappa vanishes at both ends


def test_pulse_closed_form_converges_with_ramp_width():
    errs = []
    for tr in (1e-2, 1e-3, 1e-4):
        pr = PULSE.with_(tau_ramp=tr, tau_delta=tr)
        errs.append(abs(amplitude_integral(0, None, pr).I_value - delta_pulse_amplitude(0, pr)))
    c = abs(delta_pulse_amplitude(0, PULSE))
    assert errs[-1] < 1e-6 * c
    assert errs[0] / errs[1] > 5 and errs[1] / errs[2] > 5


def test_pulse_maximum_and_zeros():
    half = PULSE.t1 + math.pi / gap_formula(0, 1.0, 0.5, PULSE.delta_b)
    pr = PULSE.with_(t2=half)
    assert abs(delta_pulse_amplitude(0, pr)) == pytest.approx(pr.kappa0 * abs(delta_pulse_jump(0, pr)), rel=1e-12)
    for k in (1, 2):
        zero = PULSE.with_(T=30.0, t2=suppression_times(0, PULSE.t1, k, PULSE.delta_b, PULSE))
        assert abs(delta_pulse_amplitude(0, zero)) < 1e-15
    p1, p2 = delta_pulse_phases(0, pr)
    assert p2 - p1 == pytest.approx(math.pi)


def test_suppression_time_validation():
    with pytest.raises(ValueError):
        suppression_times(0, 2.0, 0, 0.3, PULSE)
    with pytest.raises(ValueError):
        delta_pulse_amplitude(0, Protocol("quench"))


def test_periodic_closed_loop_null():
    r = amplitude_integral(2, None, _periodic(0.9, eps=0.0, cycles=4))
    assert abs(r.I_value) < 1e-12


def test_sideband_approximation_error_scales_with_epsilon_squared():
    nu = gap_formula(0, 1.0, 0.5, 0.2) - 1.0
    rel = []
    for eps in (0.05, 0.01):
        pr = _periodic(nu, eps=eps)
        approx, reports = sideband_amplitude(0, pr)
        rel.append(abs(amplitude_integral(0, None, pr).I_value - approx) / abs(approx))
        assert reports[0].matched and not reports[1].matched
    assert rel[0] < 0.02
    assert rel[0] / rel[1] > 15


def test_protocol_validation():
    with pytest.raises(ValueError):
        Protocol("square")
    with pytest.raises(ValueError):
        _periodic(1.0, eps=0.2)
    with pytest.raises(ValueError):
        Protocol("periodic", n_cycles=0)
    with pytest.raises(ValueError):
        PULSE.with_(t2=1.0)
    with pytest.raises(ValueError):
        Protocol("custom")
    assert _periodic(1.0, cycles=3).T == pytest.approx(6 * math.pi)
    assert PULSE.tau_delta == PULSE.tau_ramp == pytest.approx(6e-3)


def test_large_squeezing_warns():
    with pytest.warns(RuntimeWarning, match="first-order"):
        amplitude_integral(0, None, Protocol("quench", T=3.0, kappa0=0.5))


def test_custom_protocol_uses_given_parameters(fig1):
    pr = Protocol("custom", T=4.0, custom_params=fig1)
    assert pr.parameters() is fig1
    with pytest.warns(RuntimeWarning, match="unreliable"):
        r = amplitude_integral(0, None, pr, samples=11)
    assert r.time_grid.shape == (11,)
    assert r.by_parts_difference < 1e-10
