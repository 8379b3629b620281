import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhsb.operators import (
    DOWN,
    UP,
    HilbertSpec,
    commutator,
    expm,
    guarded_defect,
    hermiticity_defect,
    lift,
    make_boson_ops,
    make_spin_ops,
    max_abs,
    operator_table,
    restrict,
)


def test_basis_ordering_spin_major():
    spec = HilbertSpec(16, 4)
    assert spec.index(UP, 3) == 3
    assert spec.index(DOWN, 0) == 16
    v = spec.basis(DOWN, 5)
    assert v[21] == 1 and np.count_nonzero(v) == 1
    assert spec.dim == 32 and spec.n_valid == 12


@pytest.mark.parametrize("cutoff,guard", [(4, 1), (16, 0), (16, 8), (16, 9)])
def test_invalid_specs_rejected(cutoff, guard):
    with pytest.raises(ValueError):
        HilbertSpec(cutoff, guard)


def test_guarded_indices_cover_both_spins():
    spec = HilbertSpec(16, 4)
    idx = spec.guarded_indices()
    assert len(idx) == 2 * spec.n_valid
    assert set(idx) == set(range(12)) | set(range(16, 28))
    assert np.array_equal(spec.guard_mask(), ~np.isin(np.arange(32), idx))


def test_boson_canonical_commutator_below_cutoff(small_spec):
    b, bd, n = make_boson_ops(small_spec)
    c = b @ bd - bd @ b
    m = small_spec.fock_cutoff
    assert np.allclose(c[: m - 1, : m - 1], np.eye(m - 1))
    # truncation artefact lives only in the last level
    assert c[m - 1, m - 1] == pytest.approx(-(m - 1))
    assert np.allclose(n, bd @ b)


def test_spin_algebra():
    s0, sp, sm = make_spin_ops()
    assert np.allclose(commutator(sp, sm), 2 * s0)
    assert np.allclose(commutator(s0, sp), sp)
    assert np.allclose(commutator(s0, sm), -sm)


def test_lift_shapes_and_errors(small_spec):
    b, _, _ = make_boson_ops(small_spec)
    s0, _, _ = make_spin_ops()
    assert lift(b, "boson", small_spec).shape == (48, 48)
    assert lift(s0, "spin", small_spec).shape == (48, 48)
    with pytest.raises(ValueError):
        lift(np.eye(3), "boson", small_spec)
    with pytest.raises(ValueError):
        lift(s0, "photon", small_spec)


def test_operator_table_products_match_matmul(small_spec):
    ops = operator_table(small_spec)
    assert np.allclose(ops.sp_bdag, ops.sp @ ops.b_dag)
    assert np.allclose(ops.sm_b, ops.sm @ ops.b)
    assert np.allclose(ops.sp_b, ops.sp @ ops.b)
    assert np.allclose(ops.sm_bdag, ops.sm @ ops.b_dag)
    assert np.allclose(ops.b2, ops.b @ ops.b)
    assert np.allclose(ops.b_dag2, ops.b_dag @ ops.b_dag)
    assert not ops.num.flags.writeable
    assert operator_table(small_spec) is ops


def test_s_plus_raises_spin():
    spec = HilbertSpec(16, 4)
    ops = operator_table(spec)
    out = ops.sp_bdag @ spec.basis(DOWN, 2)
    assert np.allclose(out, np.sqrt(3) * spec.basis(UP, 3))


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_squeeze_exponential_is_orthogonal(k1, k2):
    spec = HilbertSpec(24, 6)
    K = operator_table(spec).squeeze_generator
    S1, S2 = expm(k1 * K), expm(k2 * K)
    assert max_abs(S1 @ expm(-k1 * K) - np.eye(spec.dim)) < 1e-12
    assert max_abs(S1 @ S2 - expm((k1 + k2) * K)) < 1e-12
    assert max_abs(S1.T - expm(-k1 * K)) < 1e-12


@pytest.mark.filterwarnings("ignore:overflow")
def test_expm_rejects_non_finite():
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))
    with pytest.raises(OverflowError):
        expm(np.array([[1000.0]]))


def test_defects_and_restrict():
    spec = HilbertSpec(16, 4)
    a = np.zeros((32, 32), complex)
    a[15, 0] = 1.0  # touches the guard band only
    assert hermiticity_defect(a) == 1.0
    assert hermiticity_defect(a, spec) == 0.0
    assert guarded_defect(a, spec) == 0.0
    assert restrict(a, spec).shape == (24, 24)
    assert max_abs(np.zeros((0, 0))) == 0.0
