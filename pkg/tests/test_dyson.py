import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhsb.dyson import (
    ModelOperators,
    assemble_eta,
    assemble_h0,
    assemble_h_closed,
    assemble_H,
    assemble_Htilde,
    dyson_residual,
    eta_dot_crosscheck,
    eta_dot_eta_inv,
    eta_inv_eta_dot,
    finite_difference_eta_dot,
    squeezed_number,
    working_cutoff,
)
from qhsb.operators import HilbertSpec, expm, hermiticity_defect, max_abs, operator_table, restrict
from qhsb.trajectories import (
    UnboundedMapError,
    build_solution_I,
    build_solution_II,
    const,
    cos,
    fig1_parameters,
    sin,
    t,
)


def test_eta_times_inverse_is_identity(fig1, spec):
    eta, eta_inv = assemble_eta(fig1, 2.7, spec)
    assert max_abs(eta @ eta_inv - np.eye(spec.dim)) < 1e-12


def test_eta_factors_in_order(small_spec):
    p = fig1_parameters().with_(gamma=const(0.3j))
    x = 1.3
    ops = operator_table(small_spec)
    ref = (
        expm(p.kappa(x).real * ops.squeeze_generator)
        @ expm(p.gamma(x) * ops.num)
        @ expm(p.delta(x) * ops.s0)
    )
    assert max_abs(assemble_eta(p, x, small_spec)[0] - ref) < 1e-12


def test_unbounded_map_refused(small_spec):
    p = build_solution_II(omega_f=0.5, omega_b=-0.5j + 0 * t, alpha=0.4, gamma0=0.2)
    with pytest.raises(UnboundedMapError):
        assemble_eta(p, 0.0, small_spec)
    assemble_eta(p.with_(expert=True), 0.0, small_spec)


def test_squeezed_number_closed_form():
    k = 0.21
    big = HilbertSpec(96, 16)
    ops = operator_table(big)
    K = ops.squeeze_generator
    num = expm(k * K) @ ops.num @ expm(-k * K)
    # truncated exponentials are only faithful far below the cutoff
    low = np.r_[0:12, 96:108]
    assert max_abs((num - squeezed_number(k, big))[np.ix_(low, low)]) < 1e-10


@pytest.mark.parametrize("x", [0.3, 1.9, 4.4])
def test_eta_dot_matches_finite_difference(fig1, small_spec, x):
    eta, eta_inv = assemble_eta(fig1, x, small_spec)
    fd = finite_difference_eta_dot(fig1, x, small_spec)
    inner = HilbertSpec(24, 10)
    assert max_abs(restrict(fd @ eta_inv - eta_dot_eta_inv(fig1, x, small_spec), inner)) < 1e-7
    assert max_abs(restrict(eta_inv @ fd - eta_inv_eta_dot(fig1, x, small_spec), inner)) < 1e-7


def test_eta_dot_forms_are_conjugate(fig1, spec):
    assert eta_dot_crosscheck(fig1, 3.3, spec) < 1e-10


def test_energy_operator_example():
    """With gamma = 0 the energy operator adds (i kappa'/2)(b†² - b²) + i delta' S0 to H."""
    spec = HilbertSpec(16, 4)
    p = fig1_parameters()
    x = 0.8
    ops = operator_table(spec)
    v = p.values(x)
    diff = assemble_Htilde(p, x, spec) - assemble_H(p, x, spec)
    ref = 0.5j * v.kappa_dot * (ops.b_dag2 - ops.b2) + 1j * v.delta_dot * ops.s0
    assert max_abs(diff - ref) < 1e-14


def test_h_closed_reduces_to_h0_without_squeezing(fig1, spec):
    p = fig1.with_(kappa=const(0.0))
    x = 1.1
    assert max_abs(assemble_h_closed(p, x, spec) - assemble_h0(p.effective(x), spec)) < 1e-14


@pytest.mark.parametrize("x", [0.0, 2.5, 7.9])
def test_dyson_equation_fig1(fig1, spec, x):
    eq, herm = dyson_residual(fig1, x, spec)
    assert eq < 1e-8
    assert herm < 1e-10
    assert hermiticity_defect(assemble_h_closed(fig1, x, spec), spec) < 1e-10


@settings(max_examples=8, deadline=None)
@given(
    st.floats(0.2, 1.5),
    st.floats(-0.4, 0.4),
    st.floats(0.1, 1.0),
    st.floats(-0.3, 0.3),
    st.floats(0.0, 6.0),
)
def test_dyson_equation_random_solution_I(wb, wf, a, k, x):
    p = build_solution_I(omega_f=1j * wf * cos(t), omega_b=wb, alpha=a * (1 + 0.5 * sin(t)), gamma0=0.4j, kappa=k * sin(0.7 * t))
    eq, herm = dyson_residual(p, x, HilbertSpec(32, 8))
    assert eq < 1e-8 and herm < 1e-10


def test_broken_condition_gives_non_hermitian_partner(fig1, spec):
    broken = fig1.with_(beta=fig1.alpha, solution_class="custom")
    eq, herm = dyson_residual(broken, 1.0, spec)
    assert eq < 1e-8  # the closed form still matches the conjugation
    assert herm > 0.1
    assert hermiticity_defect(assemble_h_closed(broken, 1.0, spec), spec) > 0.1


def test_working_cutoff_grows_with_squeezing():
    spec = HilbertSpec()
    assert working_cutoff(spec, 0.0) % 32 == 0
    assert working_cutoff(spec, 0.0) >= 2 * spec.fock_cutoff
    assert working_cutoff(spec, 1.0) > working_cutoff(spec, 0.3)


def test_residual_insensitive_to_working_cutoff(fig1, spec):
    a, _ = dyson_residual(fig1, 4.0, spec)
    b, _ = dyson_residual(fig1, 4.0, spec, m_work=2 * working_cutoff(spec, 0.3))
    assert abs(a - b) < 1e-11


def test_model_operators_facade(fig1, small_spec):
    m = ModelOperators(fig1, small_spec)
    assert m.H(1.0).shape == (48, 48)
    assert max_abs(m.eta(1.0) @ m.eta_inv(1.0) - np.eye(48)) < 1e-12
    assert m.h_numeric(1.0).shape == (2 * small_spec.n_valid,) * 2
    assert m.effective(1.0).A_b == pytest.approx(1.0)
    assert max_abs(m.h_closed(1.0) - assemble_h_closed(fig1, 1.0, small_spec)) == 0
    assert m.Htilde(1.0).shape == (48, 48)
