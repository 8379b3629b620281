"""Non-Hermitian Hamiltonian, Dyson map, Hermitian partner and energy operator.

Conventions: ``K = (b†² - b²)/2`` and ``eta = exp(kappa K) exp(gamma N) exp(delta S0)``.

The similarity transform ``eta H eta^-1`` is never formed directly in the
truncated space. The squeezing factor spreads a Fock state ``|n>`` over
levels up to roughly ``n * exp(2|kappa|)``, so a truncated ``exp(kappa K)``
is wrong well below the cutoff. Instead the conjugation is done in a padded
working boson space and only the guarded block is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .operators import HilbertSpec, expm, hermiticity_defect, max_abs, operator_table, restrict
from .trajectories import ParameterSet, ensure_bounded


def _scalar(v) -> complex:
    return complex(np.asarray(v).reshape(()))


def assemble_H(params: ParameterSet, t: float, spec: HilbertSpec) -> np.ndarray:
    """``omega_f S0 + omega_b N + alpha S+ b† + beta S- b``."""
    ops = operator_table(spec)
    return (
        _scalar(params.omega_f(t)) * ops.s0
        + _scalar(params.omega_b(t)) * ops.num
        + _scalar(params.alpha(t)) * ops.sp_bdag
        + _scalar(params.beta(t)) * ops.sm_b
    )


def squeezed_number(kappa: float, spec: HilbertSpec) -> np.ndarray:
    """``exp(kK) N exp(-kK) = cosh2k N - sinh2k (b†²+b²)/2 + sinh²k``."""
    ops = operator_table(spec)
    return (
        math.cosh(2 * kappa) * ops.num
        - 0.5 * math.sinh(2 * kappa) * (ops.b_dag2 + ops.b2)
        + math.sinh(kappa) ** 2 * ops.identity
    )


def assemble_eta(params: ParameterSet, t: float, spec: HilbertSpec):
    """Return ``(eta, eta_inv)`` built from the three exponential factors.

    Raises
    ------
    UnboundedMapError
        If the map is unbounded and ``params.expert`` is not set.
    """
    ensure_bounded(params)
    ops = operator_table(spec)
    k = _scalar(params.kappa(t))
    gam = _scalar(params.gamma(t))
    dl = _scalar(params.delta(t))
    K = ops.squeeze_generator
    nums = spec.boson_numbers()
    sz = spec.spin_projections()
    diag = np.exp(gam * nums + dl * sz)
    S = expm(k * K)
    S_inv = expm(-k * K)
    eta = S * diag[None, :]
    eta_inv = diag[:, None] ** -1 * S_inv
    return eta, eta_inv


def eta_dot_eta_inv(params: ParameterSet, t: float, spec: HilbertSpec) -> np.ndarray:
    """Analytic ``eta' eta^-1 = kappa' K + gamma' C(kappa) + delta' S0``."""
    ops = operator_table(spec)
    v = params.values(t)
    k = float(np.real(v.kappa))
    return (
        _scalar(v.kappa_dot) * ops.squeeze_generator
        + _scalar(v.gamma_dot) * squeezed_number(k, spec)
        + _scalar(v.delta_dot) * ops.s0
    )


def eta_inv_eta_dot(params: ParameterSet, t: float, spec: HilbertSpec) -> np.ndarray:
    """Analytic ``eta^-1 eta' = (kappa'/2)(e^{-2gamma} b†² - e^{2gamma} b²) + gamma' N + delta' S0``."""
    ops = operator_table(spec)
    v = params.values(t)
    gam = _scalar(v.gamma)
    return (
        0.5 * _scalar(v.kappa_dot) * (np.exp(-2 * gam) * ops.b_dag2 - np.exp(2 * gam) * ops.b2)
        + _scalar(v.gamma_dot) * ops.num
        + _scalar(v.delta_dot) * ops.s0
    )


def assemble_h_closed(params: ParameterSet, t: float, spec: HilbertSpec) -> np.ndarray:
    """Hermitian partner written out term by term.

    The coefficients are kept in their general complex form
    (``omega_f + i delta'``, ``omega_b + i gamma'``, ``alpha e^{gamma+delta}``,
    ``beta e^{-(gamma+delta)}``) so that a violated Hermiticity condition
    shows up as a non-Hermitian matrix instead of being silently projected away.
    """
    ops = operator_table(spec)
    v = params.values(t)
    k = float(np.real(v.kappa))
    ch, sh = math.cosh(k), math.sinh(k)
    ef = np.exp(_scalar(v.gamma) + _scalar(v.delta))
    cf = _scalar(v.omega_f) + 1j * _scalar(v.delta_dot)
    cb = _scalar(v.omega_b) + 1j * _scalar(v.gamma_dot)
    up = _scalar(v.alpha) * ef
    down = _scalar(v.beta) / ef
    return (
        cf * ops.s0
        + cb * squeezed_number(k, spec)
        + up * (ch * ops.sp_bdag - sh * ops.sp_b)
        + down * (ch * ops.sm_b - sh * ops.sm_bdag)
        + 1j * _scalar(v.kappa_dot) * ops.squeeze_generator
    )


def assemble_h0(effective, spec: HilbertSpec) -> np.ndarray:
    """Non-squeezing partner ``A_f S0 + A_b N + g S+ b† + g* S- b`` from effective parameters."""
    ops = operator_table(spec)
    g = complex(effective.g)
    return (
        float(effective.A_f) * ops.s0
        + float(effective.A_b) * ops.num
        + g * ops.sp_bdag
        + g.conjugate() * ops.sm_b
    )


def assemble_Htilde(params: ParameterSet, t: float, spec: HilbertSpec) -> np.ndarray:
    """Energy operator ``H + i eta^-1 eta'``.

    Written as ``A_f S0 + A_b N + alpha S+ b† + beta S- b
    + (i kappa'/2)(e^{-2gamma} b†² - e^{2gamma} b²)`` with the complex
    ``A_f = omega_f + i delta'`` and ``A_b = omega_b + i gamma'``.
    """
    ops = operator_table(spec)
    v = params.values(t)
    gam = _scalar(v.gamma)
    return (
        (_scalar(v.omega_f) + 1j * _scalar(v.delta_dot)) * ops.s0
        + (_scalar(v.omega_b) + 1j * _scalar(v.gamma_dot)) * ops.num
        + _scalar(v.alpha) * ops.sp_bdag
        + _scalar(v.beta) * ops.sm_b
        + 0.5j * _scalar(v.kappa_dot) * (np.exp(-2 * gam) * ops.b_dag2 - np.exp(2 * gam) * ops.b2)
    )


# padded working space --------------------------------------------------------


def working_cutoff(spec: HilbertSpec, kappa: float) -> int:
    """Boson cutoff large enough to represent ``exp(kappa K)`` on the guarded levels."""
    need = max(2 * spec.fock_cutoff, math.ceil(3.0 * math.exp(2 * abs(kappa)) * spec.n_valid) + 16)
    return 32 * math.ceil(need / 32)


@lru_cache(maxsize=8)
def _boson_generators(m: int):
    b = np.diag(np.sqrt(np.arange(1, m, dtype=float)), 1)
    K = 0.5 * (b.T @ b.T - b @ b)
    K.flags.writeable = False
    return K


def _squeeze_pair(kappa: float, m: int):
    # K is real antisymmetric, so exp(kK) is orthogonal and its inverse is the transpose
    S = expm(kappa * _boson_generators(m)).real
    return S, S.T


def _working_spec(spec: HilbertSpec, m: int) -> HilbertSpec:
    return HilbertSpec(m, spec.guard_band)


def conjugate_guarded(
    params: ParameterSet, t: float, spec: HilbertSpec, op_builder, m_work: int | None = None
) -> np.ndarray:
    """Guarded block of ``eta X eta^-1`` with ``X = op_builder(params, t, working_spec)``.

    The result is indexed like ``restrict(., spec)``.
    """
    k = float(np.real(params.kappa(t)))
    m = m_work or working_cutoff(spec, k)
    wspec = _working_spec(spec, m)
    X = op_builder(params, t, wspec)
    gam = _scalar(params.gamma(t))
    dl = _scalar(params.delta(t))
    diag = np.exp(gam * wspec.boson_numbers() + dl * wspec.spin_projections())
    Y = diag[:, None] * X / diag[None, :]
    S, S_inv = _squeeze_pair(k, m)
    nv = spec.n_valid
    Sp = S[:nv, :]
    Si = S_inv[:, :nv]
    out = np.empty((2 * nv, 2 * nv), dtype=complex)
    for a in range(2):
        for c in range(2):
            blk = Y[a * m : (a + 1) * m, c * m : (c + 1) * m]
            out[a * nv : (a + 1) * nv, c * nv : (c + 1) * nv] = Sp @ blk @ Si
    return out


def h_numeric(params: ParameterSet, t: float, spec: HilbertSpec, m_work: int | None = None) -> np.ndarray:
    """``eta H eta^-1 + i eta' eta^-1`` on the guarded subspace."""
    ensure_bounded(params)
    conj = conjugate_guarded(params, t, spec, assemble_H, m_work)
    return conj + 1j * restrict(eta_dot_eta_inv(params, t, spec), spec)


def eta_dot_crosscheck(params: ParameterSet, t: float, spec: HilbertSpec, m_work: int | None = None) -> float:
    """``|| eta (eta^-1 eta') eta^-1 - eta' eta^-1 ||`` on the guarded subspace."""
    ensure_bounded(params)
    conj = conjugate_guarded(params, t, spec, eta_inv_eta_dot, m_work)
    return max_abs(conj - restrict(eta_dot_eta_inv(params, t, spec), spec))


def dyson_residual(params: ParameterSet, t: float, spec: HilbertSpec, m_work: int | None = None):
    """Return ``(defect_eq, defect_herm)`` on the guarded subspace.

    ``defect_eq`` compares the numerically conjugated ``eta H eta^-1 + i eta' eta^-1``
    with the closed form; ``defect_herm`` is its Hermiticity defect.
    """
    lhs = h_numeric(params, t, spec, m_work)
    closed = restrict(assemble_h_closed(params, t, spec), spec)
    return max_abs(lhs - closed), hermiticity_defect(lhs)


def finite_difference_eta_dot(params: ParameterSet, t: float, spec: HilbertSpec, step: float = 1e-6):
    """Central-difference ``eta'`` (test oracle only)."""
    ep, _ = assemble_eta(params, t + step, spec)
    em, _ = assemble_eta(params, t - step, spec)
    return (ep - em) / (2 * step)


@dataclass(frozen=True)
class ModelOperators:
    """Operator-valued functions of time for one parameter set."""

    params: ParameterSet
    spec: HilbertSpec

    def H(self, t):
        return assemble_H(self.params, t, self.spec)

    def h_closed(self, t):
        return assemble_h_closed(self.params, t, self.spec)

    def h_numeric(self, t):
        """Guarded block only (see :func:`h_numeric`)."""
        return h_numeric(self.params, t, self.spec)

    def Htilde(self, t):
        return assemble_Htilde(self.params, t, self.spec)

    def eta(self, t):
        return assemble_eta(self.params, t, self.spec)[0]

    def eta_inv(self, t):
        return assemble_eta(self.params, t, self.spec)[1]

    def effective(self, t):
        return self.params.effective(t)
