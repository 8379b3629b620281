import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qhsb.dyson import assemble_h_closed
from qhsb.evolution import (
    StateVector,
    dressed_amplitudes,
    dressed_population,
    initial_dressed_state,
    propagate,
    quasi_hermitian_consistency,
)
from qhsb.operators import HilbertSpec, expm, operator_table
from qhsb.spectra import block
from qhsb.trajectories import const, fig1_parameters, frozen
from qhsb.transitions import Protocol, delta_pulse_amplitude, gap_formula

SMALL = HilbertSpec(24, 6)


def _pulse(kappa0=0.05):
    t2 = 2.0 + math.pi / gap_formula(0, 1.0, 0.5, 0.3)
    return Protocol("delta_pulse", T=6.0, kappa0=kappa0, delta_a=0.1, delta_b=0.3, t1=2.0, t2=t2)


def test_static_dressed_state_only_acquires_phase(fig1):
    p = frozen(fig1, 1.3, keep_kappa=False)
    grid = np.linspace(0, 5, 6)
    r = propagate(p, initial_dressed_state(p, SMALL, 2, -1), grid, SMALL)
    e = block(2, p.effective(0.0)).energy(-1)
    amp = dressed_amplitudes(r, 2, -1)
    assert np.allclose(amp, np.exp(-1j * e * grid), atol=1e-12)
    assert np.allclose(dressed_population(r, 2, -1), 1.0)
    assert np.max(np.abs(r.leakage)) < 1e-12


def test_matches_independent_ode_solver(fig1):
    spec = HilbertSpec(16, 4)
    psi0 = initial_dressed_state(fig1, spec, 1, 1)
    T = 2.0
    r = propagate(fig1, psi0, np.array([0.0, T]), spec, method="magnus4")
    sol = solve_ivp(
        lambda s, y: -1j * assemble_h_closed(fig1, s, spec) @ y,
        (0.0, T),
        psi0,
        method="DOP853",
        rtol=1e-12,
        atol=1e-12,
    )
    assert np.max(np.abs(r.final_state - sol.y[:, -1])) < 1e-6


def test_midpoint_and_magnus_agree(fig1):
    psi0 = initial_dressed_state(fig1, SMALL, 0, 1)
    grid = np.array([0.0, 1.5])
    a = propagate(fig1, psi0, grid, SMALL, method="midpoint")
    b = propagate(fig1, psi0, grid, SMALL, method="magnus4")
    assert np.max(np.abs(a.final_state - b.final_state)) < 1e-3
    assert a.norm_drift < 1e-9 and b.norm_drift < 1e-9


def test_parity_and_norm_conserved(fig1, spec):
    r = propagate(fig1, initial_dressed_state(fig1, spec, 3, 1), np.linspace(0, 3, 4), spec)
    assert r.norm_drift < 1e-9
    assert np.allclose(r.parity_odd, r.parity_odd[0], atol=1e-12)
    assert np.max(r.leakage) < 1e-6
    totals = r.sector_totals
    assert totals.shape == (4, spec.n_valid - 1)


def test_squeezing_is_a_pure_frame_change(spec):
    """phi(t) = exp(kappa(t) K) chi(t), with chi evolved without squeezing."""
    p = _pulse().parameters()
    p0 = p.with_(kappa=const(0.0))
    psi0 = initial_dressed_state(p, spec, 0, 1)
    grid = np.array([0.0, 1.0, 3.0, 6.0])
    r = propagate(p, psi0, grid, spec)
    r0 = propagate(p0, psi0, grid, spec)
    K = operator_table(spec).squeeze_generator
    for k, tk in enumerate(grid):
        S = expm(p.kappa(tk).real * K)
        assert np.max(np.abs(r.states[k] - S @ r0.states[k])) < 1e-7


def test_closed_pulse_leaves_no_population_two_sectors_up(spec):
    """The n -> n+2 population returns to zero once kappa is switched off again."""
    pr = _pulse()
    p = pr.parameters()
    r = propagate(p, initial_dressed_state(p, spec, 0, 1), np.array([0.0, 3.0, pr.T]), spec)
    p2 = r.population(2, 1)
    assert p2[1] > 1e-3  # dressing while kappa is on
    assert p2[-1] < 1e-12
    assert abs(delta_pulse_amplitude(0, pr)) ** 2 > 1e-6


def test_initial_state_validation(fig1):
    psi0 = initial_dressed_state(fig1, SMALL, 0, 1)
    with pytest.raises(ValueError):
        propagate(fig1, 2 * psi0, [0.0, 1.0], SMALL)
    with pytest.raises(ValueError):
        propagate(fig1, psi0[:-1], [0.0, 1.0], SMALL)
    with pytest.raises(ValueError):
        propagate(fig1, psi0, [0.0, 1.0], SMALL, method="rk4")
    r = propagate(fig1, StateVector(psi0), [0.0, 0.5], SMALL)
    assert r.norm_drift < 1e-9


def test_non_hermitian_generator_refused(fig1):
    broken = fig1.with_(beta=fig1.alpha, solution_class="custom")
    with pytest.raises(ValueError, match="not Hermitian"):
        propagate(broken, initial_dressed_state(fig1, SMALL, 0, 1), [0.0, 1.0], SMALL)


def test_leakage_abort():
    spec = HilbertSpec(16, 4)
    p = fig1_parameters()
    with pytest.raises(RuntimeError, match="leakage"):
        propagate(p, initial_dressed_state(p, spec, 10, 1), np.linspace(0, 4, 3), spec)
    r = propagate(p, initial_dressed_state(p, spec, 10, 1), np.linspace(0, 4, 3), spec, check_leakage=False)
    assert np.max(r.leakage) > 1e-6


def test_vacuum_initial_state(fig1):
    r = propagate(fig1, initial_dressed_state(fig1, SMALL, -1, 0), [0.0, 1.0], SMALL)
    assert r.population(-1, 0)[0] == 1.0
    assert r.population(-1, 0)[-1] < 1.0


def test_quasi_hermitian_consistency_and_control(fig1):
    psi0 = initial_dressed_state(fig1, SMALL, 1, 1)
    grid = np.array([0.5, 1.0])
    rep = quasi_hermitian_consistency(fig1, psi0, grid, SMALL)
    assert rep.passed and rep.max_residual < 1e-8
    bad = quasi_hermitian_consistency(fig1, psi0, grid, SMALL, map_params=fig1.with_(delta=fig1.delta + 0.1))
    assert not bad.passed
