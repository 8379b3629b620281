import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhsb.dyson import assemble_h0, assemble_h_closed, assemble_Htilde
from qhsb.operators import DOWN, UP, HilbertSpec, max_abs
from qhsb.spectra import (
    DressedState,
    block,
    closed_form_levels,
    continue_frame,
    diagonalize_full,
    guard_weight,
    guarded_eigvals,
    match_levels,
    parity_defect,
    q_commutator_defect,
    q_selection_defect,
    sector_angles,
    sector_basis,
    vacuum_energy,
    vacuum_state,
)
from qhsb.trajectories import EffectiveParams, const

effective_params = st.builds(
    EffectiveParams,
    A_f=st.floats(-1.5, 1.5),
    A_b=st.floats(0.2, 2.0),
    g=st.tuples(st.floats(0.05, 1.5), st.floats(0, 2 * math.pi)).map(lambda p: p[0] * complex(math.cos(p[1]), math.sin(p[1]))),
)


@settings(max_examples=60, deadline=None)
@given(effective_params, st.integers(0, 20))
def test_dressed_states_diagonalize_block(eff, n):
    b = block(n, eff)
    for sigma in (1, -1):
        v = np.array(b.state(sigma).components)
        assert np.allclose(b.matrix @ v, b.energy(sigma) * v, atol=1e-12 * (1 + abs(b.energy(sigma))))
        assert abs(np.vdot(v, v) - 1) < 1e-14
    assert b.E_plus - b.E_minus == pytest.approx(b.Omega)
    assert np.allclose(np.linalg.eigvalsh(b.matrix), [b.E_minus, b.E_plus], atol=1e-12 * (1 + b.Omega))


def test_block_layout_and_q():
    eff = EffectiveParams(A_f=0.4, A_b=1.0, g=0.3j)
    b = block(2, eff)
    assert b.matrix[0, 0] == pytest.approx(2 - 0.2)
    assert b.matrix[1, 1] == pytest.approx(3 + 0.2)
    assert b.matrix[1, 0] == pytest.approx(0.3j * math.sqrt(3))
    assert b.q == 2.5
    with pytest.raises(ValueError):
        block(-1, eff)


def test_degenerate_sector_has_no_dressed_state():
    eff = EffectiveParams(A_f=-1.0, A_b=1.0, g=0.0)
    b = block(0, eff)
    assert b.degenerate and math.isnan(b.theta)
    with pytest.raises(ValueError):
        b.state(1)


def test_closed_form_levels_sorted_and_labelled():
    eff = EffectiveParams(A_f=0.0, A_b=1.0, g=0.5)
    lv = closed_form_levels(eff, 3)
    assert len(lv) == 9
    assert [x.energy for x in lv] == sorted(x.energy for x in lv)
    assert sum(x.branch == "vac" for x in lv) == 1
    assert vacuum_energy(eff) == 0.0


def test_closed_forms_match_h0_diagonalization(spec):
    eff = EffectiveParams(A_f=0.3, A_b=1.2, g=0.4 - 0.2j)
    pairs = diagonalize_full(assemble_h0(eff, spec), spec)
    numeric = np.array([e for e, _ in pairs])
    ref = np.array([x.energy for x in closed_form_levels(eff, spec.n_valid - 2)])
    assert len(numeric) == len(ref)
    assert np.allclose(numeric, ref, atol=1e-10)


def test_dressed_vector_is_eigenvector_of_h0(spec):
    eff = EffectiveParams(A_f=0.3, A_b=1.2, g=0.4 - 0.2j)
    h = assemble_h0(eff, spec)
    for n in (0, 5, 30):
        b = block(n, eff)
        for sigma in (1, -1):
            v = b.state(sigma).vector(spec)
            assert max_abs(h @ v - b.energy(sigma) * v) < 1e-12
    assert max_abs(h @ vacuum_state(spec) - vacuum_energy(eff) * vacuum_state(spec)) < 1e-14


def test_dressed_state_vector_rejects_overflow():
    with pytest.raises(ValueError):
        DressedState(63, 1, 1.0, 0.0).vector(HilbertSpec())


def test_symmetry_of_h0_and_parity_of_squeezed_partner(fig1, spec):
    h0 = assemble_h0(fig1.effective(1.2), spec)
    assert q_commutator_defect(h0, spec) < 1e-14
    hc = assemble_h_closed(fig1, 1.2, spec)
    assert q_commutator_defect(hc, spec) > 1e-3  # squeezing breaks the U(1) charge
    assert parity_defect(hc, spec) < 1e-14
    assert q_selection_defect(hc, spec) < 1e-14


def test_constant_squeezing_preserves_spectrum(fig1, spec):
    p = fig1.with_(kappa=const(0.3))
    x = 1.7
    w = np.array([e for e, _ in diagonalize_full(assemble_h_closed(p, x, spec), spec, k=30)])
    ref = np.array([lv.energy for lv in closed_form_levels(p.effective(x), spec.n_valid - 2)])
    for e in w:
        assert np.min(np.abs(ref - e)) < 1e-8


def test_diagonalize_refuses_non_hermitian(fig1, spec):
    with pytest.raises(ValueError, match="guarded_eigvals"):
        diagonalize_full(assemble_Htilde(fig1, 1.0, spec), spec)


def test_energy_operator_spectrum_is_real(fig1, spec):
    w = guarded_eigvals(assemble_Htilde(fig1, 3.1, spec), spec)
    assert np.max(np.abs(w.imag)) < 1e-9


def test_guard_weight():
    spec = HilbertSpec(16, 4)
    v = np.stack([spec.basis(UP, 2), spec.basis(DOWN, 14)], axis=1)
    assert np.allclose(guard_weight(v, spec), [0.0, 1.0])


def test_sector_basis_indices(spec):
    eff = EffectiveParams(A_f=0.0, A_b=1.0, g=0.5)
    sb = sector_basis(eff, spec)
    assert len(sb["n"]) == spec.n_valid - 1
    assert sb["down_index"][3] == spec.index(DOWN, 3)
    assert sb["up_index"][3] == spec.index(UP, 4)


def test_sector_angles_vectorized_over_time(fig1):
    x = np.linspace(0, 5, 11)
    a = sector_angles(fig1.effective(x), 2)
    assert a["E_plus"].shape == x.shape
    assert np.all(a["Omega"] >= 0)


def test_frame_continuation_and_matching(rng):
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    ph = np.exp(1j * rng.uniform(0, 6, 6))
    perm = rng.permutation(6)
    shuffled = (q * ph)[:, perm]
    p = match_levels(q, shuffled)
    assert np.allclose(continue_frame(q, shuffled[:, p]), q)
