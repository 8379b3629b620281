"""Squeezing perturbation, its closed-form matrix elements and energy shifts.

Everything here works in the real-``g`` gauge: the phase of ``g`` is
absorbed into the basis, so only ``|g|`` enters. To first order in ``kappa``

    V = a+ b†² + a- b² - kappa|g| (S+ b + S- b†),   a± = -kappa A_b ± i kappa'/2,

and it splits into a part raising ``Q`` by 2 and a part lowering it by 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .operators import DOWN, UP, HilbertSpec, operator_table
from .spectra import DressedState, block, sector_angles, vacuum_energy
from .trajectories import EffectiveParams, ParameterSet

DENOMINATOR_RTOL = 1e-8


@dataclass(frozen=True)
class PerturbationContext:
    """Effective parameters plus the squeezing amplitude and rate at one time."""

    effective: EffectiveParams
    kappa: float
    kappa_dot: float
    t: float | None = None

    @classmethod
    def from_params(cls, params: ParameterSet, t: float) -> "PerturbationContext":
        eff = params.effective(t)
        return cls(eff, float(eff.kappa), float(eff.kappa_dot), t)

    def scaled(self, s: float) -> "PerturbationContext":
        return PerturbationContext(self.effective, s * self.kappa, s * self.kappa_dot, self.t)

    @property
    def alpha_plus(self) -> complex:
        return complex(-self.kappa * float(self.effective.A_b), 0.5 * self.kappa_dot)

    @property
    def alpha_minus(self) -> complex:
        return complex(-self.kappa * float(self.effective.A_b), -0.5 * self.kappa_dot)

    @property
    def g_mod(self) -> float:
        return float(abs(complex(self.effective.g)))

    def angles(self, n: int):
        """``(c_n, s_n)``; sector ``-1`` stands for the vacuum ``|up,0>``."""
        if n == -1:
            return 0.0, 1.0
        b = block(n, self.effective)
        if b.degenerate:
            raise ValueError(f"sector {n} is degenerate at t={self.t}")
        return b.c, b.s

    def energy(self, n: int, sigma: int) -> float:
        if n == -1:
            return vacuum_energy(self.effective)
        return block(n, self.effective).energy(sigma)


def v_kappa(
    effective: EffectiveParams, kappa: float, kappa_dot: float, spec: HilbertSpec, real_gauge: bool = True
):
    """Return ``(V, V_plus2, V_minus2)``.

    With ``real_gauge=False`` the complex ``g`` is kept and the couplings
    read ``-kappa g S+ b - kappa g* S- b†``.
    """
    ops = operator_table(spec)
    A_b = float(effective.A_b)
    ap = complex(-kappa * A_b, 0.5 * kappa_dot)
    am = complex(-kappa * A_b, -0.5 * kappa_dot)
    g = complex(abs(complex(effective.g))) if real_gauge else complex(effective.g)
    v_up = ap * ops.b_dag2 - kappa * g.conjugate() * ops.sm_bdag
    v_down = am * ops.b2 - kappa * g * ops.sp_b
    return v_up + v_down, v_up, v_down


def h_closed_effective(ctx: PerturbationContext, spec: HilbertSpec) -> np.ndarray:
    """Full Hermitian partner in the real-``g`` gauge, built from ``ctx``."""
    ops = operator_table(spec)
    e = ctx.effective
    k = ctx.kappa
    ch, sh = math.cosh(k), math.sinh(k)
    gm = ctx.g_mod
    C = math.cosh(2 * k) * ops.num - 0.5 * math.sinh(2 * k) * (ops.b_dag2 + ops.b2) + sh**2 * ops.identity
    return (
        float(e.A_f) * ops.s0
        + float(e.A_b) * C
        + gm * (ch * ops.sp_bdag - sh * ops.sp_b)
        + gm * (ch * ops.sm_b - sh * ops.sm_bdag)
        + 1j * ctx.kappa_dot * ops.squeeze_generator
    )


def h0_effective(ctx: PerturbationContext, spec: HilbertSpec) -> np.ndarray:
    ops = operator_table(spec)
    e = ctx.effective
    gm = ctx.g_mod
    return float(e.A_f) * ops.s0 + float(e.A_b) * ops.num + gm * (ops.sp_bdag + ops.sm_b)


def dressed_vector(n: int, sigma: int, ctx: PerturbationContext, spec: HilbertSpec) -> np.ndarray:
    """Real-gauge dressed vector; ``n = -1`` gives the vacuum."""
    if n == -1:
        return spec.basis(UP, 0)
    c, s = ctx.angles(n)
    return DressedState(n, sigma, c, s, 0.0).vector(spec)


# closed-form matrix elements ---------------------------------------------------


def _up_plus_plus(n, ap, k, gm, cn, sn, cm, sm):
    return cm * (ap * cn * math.sqrt((n + 1) * (n + 2)) - k * gm * sn * math.sqrt(n + 2)) + sm * sn * ap * math.sqrt(
        (n + 2) * (n + 3)
    )


def _up_minus_plus(n, ap, k, gm, cn, sn, cm, sm):
    return -sm * (ap * cn * math.sqrt((n + 1) * (n + 2)) - k * gm * sn * math.sqrt(n + 2)) + cm * sn * ap * math.sqrt(
        (n + 2) * (n + 3)
    )


def _up_plus_minus(n, ap, k, gm, cn, sn, cm, sm):
    return -cm * (ap * sn * math.sqrt((n + 1) * (n + 2)) + k * gm * cn * math.sqrt(n + 2)) + sm * cn * ap * math.sqrt(
        (n + 2) * (n + 3)
    )


def _up_minus_minus(n, ap, k, gm, cn, sn, cm, sm):
    return sm * (ap * sn * math.sqrt((n + 1) * (n + 2)) + k * gm * cn * math.sqrt(n + 2)) + cm * cn * ap * math.sqrt(
        (n + 2) * (n + 3)
    )


def _down_plus_plus(n, am, k, gm, cn, sn, cm, sm):
    return cm * cn * am * math.sqrt(n * (n - 1)) + sm * (am * sn * math.sqrt(n * (n + 1)) - k * gm * cn * math.sqrt(n))


def _down_minus_plus(n, am, k, gm, cn, sn, cm, sm):
    return -sm * cn * am * math.sqrt(n * (n - 1)) + cm * (am * sn * math.sqrt(n * (n + 1)) - k * gm * cn * math.sqrt(n))


def _down_plus_minus(n, am, k, gm, cn, sn, cm, sm):
    return -cm * sn * am * math.sqrt(n * (n - 1)) + sm * (am * cn * math.sqrt(n * (n + 1)) + k * gm * sn * math.sqrt(n))


def _down_minus_minus(n, am, k, gm, cn, sn, cm, sm):
    return sm * sn * am * math.sqrt(n * (n - 1)) + cm * (am * cn * math.sqrt(n * (n + 1)) + k * gm * sn * math.sqrt(n))


# keyed by (direction, target branch, source branch)
_TABLE = {
    (+2, +1, +1): _up_plus_plus,
    (+2, -1, +1): _up_minus_plus,
    (+2, +1, -1): _up_plus_minus,
    (+2, -1, -1): _up_minus_minus,
    (-2, +1, +1): _down_plus_plus,
    (-2, -1, +1): _down_minus_plus,
    (-2, +1, -1): _down_plus_minus,
    (-2, -1, -1): _down_minus_minus,
}


@dataclass(frozen=True)
class PerturbationElement:
    """One closed-form element ``<psi_{n'}^tau| V |psi_n^sigma>`` with its building blocks."""

    source: tuple
    target: tuple
    value: complex
    alpha_plus: complex
    alpha_minus: complex
    c_n: float
    s_n: float
    c_target: float
    s_target: float
    kappa: float
    kappa_dot: float
    g_mod: float


def _sign(x) -> int:
    if x in (+1, "+"):
        return +1
    if x in (-1, "-"):
        return -1
    raise ValueError(f"branch must be +1/-1 or '+'/'-', got {x!r}")


def element(nprime: int, tau, n: int, sigma, ctx: PerturbationContext) -> PerturbationElement | None:
    """Closed-form element with building blocks, or ``None`` for an invalid channel.

    Downward elements into the vacuum (``n = 1 -> n' = -1``) are not part of
    the table; see :func:`vacuum_matrix_element`.
    """
    tau, sigma = _sign(tau), _sign(sigma)
    d = nprime - n
    if d not in (2, -2) or n < 0 or (d == -2 and n < 2):
        return None
    cn, sn = ctx.angles(n)
    cm, sm = ctx.angles(nprime)
    a = ctx.alpha_plus if d > 0 else ctx.alpha_minus
    val = _TABLE[(d, tau, sigma)](n, a, ctx.kappa, ctx.g_mod, cn, sn, cm, sm)
    return PerturbationElement(
        source=(n, sigma),
        target=(nprime, tau),
        value=complex(val),
        alpha_plus=ctx.alpha_plus,
        alpha_minus=ctx.alpha_minus,
        c_n=cn,
        s_n=sn,
        c_target=cm,
        s_target=sm,
        kappa=ctx.kappa,
        kappa_dot=ctx.kappa_dot,
        g_mod=ctx.g_mod,
    )


def matrix_element(nprime: int, tau, n: int, sigma, ctx: PerturbationContext) -> complex:
    """Closed-form ``M_{n',tau; n,sigma}``; an invalid channel returns 0 with a warning."""
    el = element(nprime, tau, n, sigma, ctx)
    if el is None:
        warnings.warn(
            f"no closed form for channel ({n},{sigma}) -> ({nprime},{tau}); returning 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0j
    return el.value


def vacuum_matrix_element(sigma, ctx: PerturbationContext) -> complex:
    """``<up,0| V |psi_1^sigma>``, the channel the ``n >= 2`` gate leaves out."""
    sigma = _sign(sigma)
    c1, s1 = ctx.angles(1)
    am = ctx.alpha_minus
    kg = ctx.kappa * ctx.g_mod
    if sigma > 0:
        return complex(am * s1 * math.sqrt(2) - kg * c1)
    return complex(am * c1 * math.sqrt(2) + kg * s1)


def sandwich(nprime: int, tau, n: int, sigma, ctx: PerturbationContext, spec: HilbertSpec) -> complex:
    """Numerical ``<psi_{n'}^tau| V |psi_n^sigma>`` from dressed vectors (oracle).

    Sector ``-1`` is the vacuum ``|up,0>``; its branch label is ignored.
    """
    V, _, _ = v_kappa(ctx.effective, ctx.kappa, ctx.kappa_dot, spec)
    a = dressed_vector(n, 0 if n == -1 else _sign(sigma), ctx, spec)
    b = dressed_vector(nprime, 0 if nprime == -1 else _sign(tau), ctx, spec)
    return complex(np.vdot(b, V @ a))


def first_order(n: int, sigma, ctx: PerturbationContext, spec: HilbertSpec) -> float:
    """``<psi_n^sigma| V |psi_n^sigma>`` evaluated numerically (identically zero)."""
    V, _, _ = v_kappa(ctx.effective, ctx.kappa, ctx.kappa_dot, spec)
    v = dressed_vector(n, _sign(sigma), ctx, spec)
    return float(np.vdot(v, V @ v).real)


@dataclass
class EnergyCorrection:
    """First- and second-order shift of one dressed level."""

    n: int
    sigma: int
    t: float | None
    first_order: float
    second_order: float
    channels: dict = field(default_factory=dict)
    degenerate_flag: bool = False
    include_vacuum_channel: bool = False


def _channels(n: int, sigma: int, ctx: PerturbationContext, include_vacuum_channel: bool):
    """Yield ``((n', tau), M)`` for every channel coupled to ``(n, sigma)``."""
    if n == -1:
        if include_vacuum_channel:
            for tau in (+1, -1):
                yield (1, tau), np.conj(vacuum_matrix_element(tau, ctx))
        return
    for tau in (+1, -1):
        yield (n + 2, tau), element(n + 2, tau, n, sigma, ctx).value
    if n >= 2:
        for tau in (+1, -1):
            yield (n - 2, tau), element(n - 2, tau, n, sigma, ctx).value
    elif n == 1 and include_vacuum_channel:
        yield (-1, 0), vacuum_matrix_element(sigma, ctx)


def second_order(
    n: int, sigma, ctx: PerturbationContext, include_vacuum_channel: bool = False
) -> EnergyCorrection:
    """Non-degenerate second-order shift ``sum |M|^2 / (E_n^sigma - E_n'^tau)``.

    ``n = -1`` requests the vacuum level, which only shifts through the
    ``n = 1`` channel when ``include_vacuum_channel`` is set. When any
    denominator falls below ``1e-8 * Omega_n`` the value is withheld (NaN)
    and ``degenerate_flag`` is set.
    """
    sigma = 0 if n == -1 else _sign(sigma)
    e0 = ctx.energy(n, sigma)
    omega = block(max(n, 0), ctx.effective).Omega
    chans = {}
    flag = False
    total = 0.0
    for key, m in _channels(n, sigma, ctx, include_vacuum_channel):
        den = e0 - ctx.energy(*key)
        if abs(den) <= DENOMINATOR_RTOL * omega:
            flag = True
            chans[key] = float("nan")
            continue
        contrib = abs(m) ** 2 / den
        chans[key] = contrib
        total += contrib
    return EnergyCorrection(
        n=n,
        sigma=sigma,
        t=ctx.t,
        first_order=0.0,
        second_order=float("nan") if flag else float(total),
        channels=chans,
        degenerate_flag=flag,
        include_vacuum_channel=include_vacuum_channel,
    )


def w2_shift(n: int, sigma, ctx: PerturbationContext) -> float:
    """First-order expectation of the static ``kappa²`` part of the full partner.

    Expanding the squeezed partner to second order in ``kappa`` produces
    ``W2 = A_b kappa² (2N + 1) + (kappa²/2)(g S+ b† + g* S- b)`` on top of
    ``h0 + V``. Its diagonal element is the same order as the second-order
    shift, so it must be added when comparing against the full partner.
    """
    A_b = float(ctx.effective.A_b)
    k2 = ctx.kappa**2
    if n == -1:
        return A_b * k2
    sigma = _sign(sigma)
    c, s = ctx.angles(n)
    if sigma > 0:
        num = c * c * n + s * s * (n + 1)
        cross = 2 * c * s * ctx.g_mod * math.sqrt(n + 1)
    else:
        num = s * s * n + c * c * (n + 1)
        cross = -2 * c * s * ctx.g_mod * math.sqrt(n + 1)
    return A_b * k2 * (2 * num + 1) + 0.5 * k2 * cross


def exact_level(
    n: int, sigma, ctx: PerturbationContext, spec: HilbertSpec, operator: str = "h0+V"
) -> float:
    """Exact eigenvalue continuously connected to the dressed level ``(n, sigma)``.

    ``operator`` is ``"h0+V"`` (first-order truncated perturbation) or
    ``"h_closed"`` (full squeezed partner). The eigenvector with maximal
    overlap on the unperturbed dressed vector is selected.
    """
    if operator == "h0+V":
        V, _, _ = v_kappa(ctx.effective, ctx.kappa, ctx.kappa_dot, spec)
        h = h0_effective(ctx, spec) + V
    elif operator == "h_closed":
        h = h_closed_effective(ctx, spec)
    else:
        raise ValueError("operator must be 'h0+V' or 'h_closed'")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    ref = dressed_vector(n, 0 if n == -1 else _sign(sigma), ctx, spec)
    i = int(np.argmax(np.abs(ref.conj() @ v)))
    return float(w[i])
