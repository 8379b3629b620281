"""First-order boundary-induced transition amplitudes between sectors n and n+2.

The integrated amplitude of the ``(n, sigma) -> (n+2, tau)`` channel is

    I = ∫_0^T M(t) exp(i Phi(t)) dt,   Phi(t) = ∫_0^t gap(s) ds,

with ``gap = E_{n+2}^tau - E_n^sigma``. For the ``++`` channel
``M = i (B/2) kappa' - D kappa`` and ``D = gap * B / 2``, so integrating by
parts leaves ``-(i/2) ∫ kappa B' exp(i Phi)`` plus an endpoint term that
vanishes for closed protocols.

Quadrature uses Gauss-Legendre panels refined adaptively by halving. Panels
are laid out so that no panel spans more than a quarter of the fastest
oscillation period and every ramp window is resolved separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .spectra import sector_angles
from .trajectories import (
    EffectiveParams,
    ParameterSet,
    TimeFunction,
    build_solution_I_from_delta,
    cos,
    parameter_ramp_windows,
    ramp,
    sin,
    t as t_var,
)

PROTOCOL_KINDS = ("quench", "delta_pulse", "periodic", "custom")
FIRST_ORDER_KAPPA = 0.3
FIRST_ORDER_PROBABILITY = 0.1
_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


# protocols -------------------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    """Boundary and non-Hermitian control schedule on ``[0, T]``.

    The background is solution I with constant ``A_b`` and ``alpha``;
    ``delta`` follows the protocol (constant ``delta_a`` for a quench).

    Parameters
    ----------
    kind : {'quench', 'delta_pulse', 'periodic', 'custom'}
    T : float
        Duration. For ``periodic`` it is derived from ``n_cycles``.
    kappa0 : float
        Squeezing amplitude.
    tau_ramp : float or None
        Width of the smooth steps in kappa (default ``1e-3 T``).
    delta_a, delta_b : float
        Plateau values of delta before/after ``t1`` (delta returns to
        ``delta_a`` at ``t2``).
    t1, t2 : float
        Centres of the delta steps.
    tau_delta : float or None
        Width of the delta steps (default ``tau_ramp``).
    omega_drive, delta0, epsilon, nu, n_cycles :
        Periodic drive ``kappa0 sin(omega_drive t)``, ``delta0 + epsilon cos(nu t)``.
    custom_params : ParameterSet or None
        Used verbatim for ``kind='custom'``.
    """

    kind: str
    T: float = 10.0
    kappa0: float = 0.05
    tau_ramp: float | None = None
    A_b: float = 1.0
    alpha: complex = 0.5
    delta_a: float = 0.0
    delta_b: float = 0.0
    t1: float = 0.0
    t2: float = 0.0
    tau_delta: float | None = None
    omega_drive: float = 1.0
    delta0: float = 0.0
    epsilon: float = 0.0
    nu: float = 1.0
    n_cycles: int = 1
    custom_params: ParameterSet | None = None
    epsabs: float = 1e-12

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"kind must be one of {PROTOCOL_KINDS}")
        if self.kind == "periodic":
            if self.n_cycles < 1 or int(self.n_cycles) != self.n_cycles:
                raise ValueError("n_cycles must be a positive integer")
            if abs(self.epsilon) > 0.1:
                raise ValueError("periodic modulation needs |epsilon| <= 0.1")
            object.__setattr__(self, "T", 2 * math.pi * self.n_cycles / self.omega_drive)
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.tau_ramp is None:
            object.__setattr__(self, "tau_ramp", 1e-3 * self.T)
        if self.tau_delta is None:
            object.__setattr__(self, "tau_delta", self.tau_ramp)
        if self.kind == "delta_pulse":
            half = 0.5 * self.tau_delta
            if not (self.tau_ramp + half < self.t1 < self.t2 < self.T - self.tau_ramp - half):
                raise ValueError("delta_pulse needs tau_ramp < t1 < t2 < T - tau_ramp (with room for the steps)")
        if self.kind == "custom" and self.custom_params is None:
            raise ValueError("custom protocols need custom_params")

    def kappa_function(self) -> TimeFunction:
        k0, tr = self.kappa0, self.tau_ramp
        if self.kind == "periodic":
            return k0 * sin(self.omega_drive * t_var)
        return k0 * (ramp(0.5 * tr, tr) - ramp(self.T - 0.5 * tr, tr))

    def delta_function(self) -> TimeFunction:
        if self.kind == "periodic":
            return self.delta0 + self.epsilon * cos(self.nu * t_var)
        if self.kind == "delta_pulse":
            jump = self.delta_b - self.delta_a
            return self.delta_a + jump * (ramp(self.t1, self.tau_delta) - ramp(self.t2, self.tau_delta))
        return self.delta_a + 0 * t_var

    def parameters(self) -> ParameterSet:
        if self.kind == "custom":
            return self.custom_params
        return build_solution_I_from_delta(
            delta=self.delta_function(),
            omega_b=self.A_b,
            alpha=self.alpha,
            gamma0=0.0,
            kappa=self.kappa_function(),
        )

    def plateau_effective(self, delta: float) -> EffectiveParams:
        """Effective parameters of the constant background at a given delta."""
        return EffectiveParams(A_f=0.0, A_b=self.A_b, g=complex(self.alpha) * math.exp(delta))

    def with_(self, **changes) -> "Protocol":
        from dataclasses import replace

        return replace(self, **changes)


# sector quantities ---------------------------------------------------------------


def gap(n: int, effective: EffectiveParams, sigma: int = +1, tau: int = +1):
    """``E_{n+2}^tau - E_n^sigma`` (vectorized over time arrays)."""
    a = sector_angles(effective, n)
    b = sector_angles(effective, n + 2)
    e_src = a["E_plus"] if sigma > 0 else a["E_minus"]
    e_dst = b["E_plus"] if tau > 0 else b["E_minus"]
    return e_dst - e_src


def gap_formula(n: int, A_b: float, alpha_mod: float, delta: float) -> float:
    """Plus-to-plus gap for ``A_f = 0`` and ``|g| = |alpha| e^delta``."""
    g2 = 4 * alpha_mod**2 * math.exp(2 * delta)
    return 2 * A_b + 0.5 * (math.sqrt(A_b**2 + g2 * (n + 3)) - math.sqrt(A_b**2 + g2 * (n + 1)))


def bd_coefficients(n: int, effective: EffectiveParams):
    """``(B_n, D_n)`` for the plus-to-plus channel (vectorized)."""
    a = sector_angles(effective, n)
    b = sector_angles(effective, n + 2)
    if np.any(a["degenerate"]) or np.any(b["degenerate"]):
        raise ValueError(f"sector {n} or {n + 2} is degenerate")
    B = b["c"] * a["c"] * math.sqrt((n + 1) * (n + 2)) + b["s"] * a["s"] * math.sqrt((n + 2) * (n + 3))
    D = np.asarray(effective.A_b) * B + np.abs(effective.g) * b["c"] * a["s"] * math.sqrt(n + 2)
    if np.ndim(B) == 0:
        return float(B), float(D)
    return B, D


def _dB_dtheta(n, a, b):
    r1 = math.sqrt((n + 1) * (n + 2))
    r3 = math.sqrt((n + 2) * (n + 3))
    d_n = -b["c"] * a["s"] * r1 + b["s"] * a["c"] * r3
    d_m = -b["s"] * a["c"] * r1 + b["c"] * a["s"] * r3
    return d_n, d_m


def dB_ddelta(n: int, effective: EffectiveParams):
    """Analytic ``dB_n/d delta`` through ``|g| = |alpha| e^delta`` (so ``d|g|/d delta = |g|``)."""
    a = sector_angles(effective, n)
    b = sector_angles(effective, n + 2)
    x = np.asarray(effective.A_b) + np.asarray(effective.A_f)
    gm = np.abs(effective.g)
    d_n, d_m = _dB_dtheta(n, a, b)
    th_n = -x * math.sqrt(n + 1) / a["Omega"] ** 2
    th_m = -x * math.sqrt(n + 3) / b["Omega"] ** 2
    return gm * (d_n * th_n + d_m * th_m)


def dB_dt(n: int, effective: EffectiveParams):
    """Time derivative of ``B_n`` from the rates stored in ``effective``."""
    a = sector_angles(effective, n)
    b = sector_angles(effective, n + 2)
    x = np.asarray(effective.A_b) + np.asarray(effective.A_f)
    x_dot = np.asarray(effective.A_b_dot) + np.asarray(effective.A_f_dot)
    gm_dot = np.asarray(effective.g_mod_dot)
    gm = np.abs(effective.g)

    def theta_dot(ang, m):
        om2 = ang["Omega"] ** 2
        y = 2 * gm * math.sqrt(m + 1)
        return y / (2 * om2) * x_dot - x * math.sqrt(m + 1) / om2 * gm_dot

    d_n, d_m = _dB_dtheta(n, a, b)
    return d_n * theta_dot(a, n) + d_m * theta_dot(b, n + 2)


def channel_element(n: int, effective: EffectiveParams, sigma: int = +1, tau: int = +1):
    """Closed-form ``M_{n+2,tau; n,sigma}`` along a time array."""
    from .perturbation import _TABLE

    a = sector_angles(effective, n)
    b = sector_angles(effective, n + 2)
    kappa = np.asarray(effective.kappa, dtype=float)
    ap = -kappa * np.asarray(effective.A_b) + 0.5j * np.asarray(effective.kappa_dot)
    return _TABLE[(2, tau, sigma)](n, ap, kappa, np.abs(effective.g), a["c"], a["s"], b["c"], b["s"])


# quadrature ------------------------------------------------------------------------


def _gl_panels(f, lo, hi):
    """Gauss-Legendre integral of ``f`` on each panel ``[lo_k, hi_k]`` (vectorized)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    ts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(ts.ravel())).reshape(ts.shape)
    return half * (vals @ _GL_W)


def adaptive_panels(f, edges, epsabs: float = 1e-12, max_depth: int = 40):
    """Integrate ``f`` over each initial panel with adaptive halving.

    Returns
    -------
    (refined_edges, panel_integrals)
        The accepted panels in order and the integral over each one.

    Raises
    ------
    RuntimeError
        If refinement does not converge (unresolved oscillation).
    """
    edges = np.asarray(edges, dtype=float)
    total = edges[-1] - edges[0]
    lo, hi = edges[:-1], edges[1:]
    done_lo, done_hi, done_val = [], [], []
    for _ in range(max_depth):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        whole = _gl_panels(f, lo, hi)
        left = _gl_panels(f, lo, mid)
        right = _gl_panels(f, mid, hi)
        err = np.abs(whole - left - right)
        ok = err <= epsabs * np.maximum((hi - lo) / total, 1e-3)
        done_lo += [lo[ok], mid[ok]]
        done_hi += [mid[ok], hi[ok]]
        done_val += [left[ok], right[ok]]
        lo, hi = np.concatenate([lo[~ok], mid[~ok]]), np.concatenate([mid[~ok], hi[~ok]])
    else:
        if lo.size:
            raise RuntimeError("quadrature did not converge: unresolved oscillation")
    lo = np.concatenate(done_lo)
    hi = np.concatenate(done_hi)
    val = np.concatenate(done_val)
    order = np.argsort(lo, kind="stable")
    return np.append(lo[order], hi[order][-1]), val[order]


def protocol_edges(params: ParameterSet, T: float, rate: float, extra=()) -> np.ndarray:
    """Initial panel edges: ramp windows split finely, the rest at quarter periods."""
    windows = [(max(a, 0.0), min(b, T)) for a, b in parameter_ramp_windows(params) if b > 0 and a < T]
    points = {0.0, T, *[p for p in extra if 0 < p < T]}
    for a, b in windows:
        points.update(np.linspace(a, b, 9))
    pts = np.array(sorted(points))
    h = 0.25 * 2 * math.pi / max(rate, 2 * math.pi / T)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, math.ceil((b - a) / h))
        out.extend(np.linspace(a, b, m + 1)[1:])
    return np.array(out)


@dataclass
class PhaseTable:
    """Cumulative ``Phi(t) = ∫_0^t gap`` on refined panels, evaluable anywhere in ``[0, T]``."""

    edges: np.ndarray
    cumulative: np.ndarray
    rate: object

    @classmethod
    def build(cls, rate, edges, epsabs: float = 1e-12) -> "PhaseTable":
        e, vals = adaptive_panels(rate, edges, epsabs)
        return cls(e, np.concatenate([[0.0], np.cumsum(vals.real)]), rate)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2)
        lo = self.edges[k]
        part = _gl_panels(lambda s: np.real(self.rate(s)), lo, t)
        return self.cumulative[k] + part


def phase(n: int, params: ParameterSet, t: float, sigma: int = +1, tau: int = +1, epsabs: float = 1e-10) -> float:
    """``Phi(t) = ∫_0^t gap(s) ds`` by adaptive quadrature."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 0.0
    pts = [p for w in parameter_ramp_windows(params) for p in w if 0 < p < t]

    def f(s):
        return float(gap(n, params.effective(s), sigma, tau))

    val, err = quad(f, 0.0, t, points=pts or None, epsabs=epsabs, epsrel=1e-12, limit=500)
    return float(val)


# amplitudes ---------------------------------------------------------------------


@dataclass
class AmplitudeResult:
    """Integrated first-order amplitude of one channel."""

    n: int
    channel: tuple
    I_value: complex
    probability: float
    time_grid: np.ndarray
    phase_grid: np.ndarray
    gap_grid: np.ndarray
    B_grid: np.ndarray | None = None
    D_grid: np.ndarray | None = None
    I_by_parts: complex | None = None
    boundary_term: complex | None = None
    by_parts_difference: float | None = None

    @property
    def amplitude(self) -> complex:
        """Transition amplitude ``-i I``."""
        return -1j * self.I_value


def _max_rate(params, n, T, sigma, tau, protocol=None):
    grid = np.linspace(0.0, T, 2001)
    rate = float(np.max(np.abs(gap(n, params.effective(grid), sigma, tau))))
    if protocol is not None and protocol.kind == "periodic":
        rate = max(rate, abs(protocol.omega_drive), abs(protocol.nu))
    return rate


def amplitude_integral(
    n: int,
    params: ParameterSet | None,
    protocol: Protocol,
    sigma: int = +1,
    tau: int = +1,
    samples: int = 401,
) -> AmplitudeResult:
    """``I = ∫ M exp(i Phi) dt`` by panel quadrature, plus the by-parts form for ``++``."""
    params = params if params is not None else protocol.parameters()
    T = protocol.T
    kmax = float(np.max(np.abs(np.real(params.kappa(np.linspace(0, T, 2001))))))
    if kmax > FIRST_ORDER_KAPPA:
        warnings.warn(f"|kappa| reaches {kmax:.3g}; first-order theory assumes |kappa| <= 0.3", RuntimeWarning)
    rate = _max_rate(params, n, T, sigma, tau, protocol)
    extra = [protocol.t1, protocol.t2] if protocol.kind == "delta_pulse" else []
    edges = protocol_edges(params, T, rate, extra)

    def gap_t(s):
        return gap(n, params.effective(s), sigma, tau)

    ph = PhaseTable.build(gap_t, edges, protocol.epsabs)

    def direct(s):
        return channel_element(n, params.effective(s), sigma, tau) * np.exp(1j * ph(s))

    _, vals = adaptive_panels(direct, ph.edges, protocol.epsabs)
    I = complex(np.sum(vals))

    grid = np.linspace(0.0, T, samples)
    eff = params.effective(grid)
    res = AmplitudeResult(
        n=n,
        channel=(sigma, tau),
        I_value=I,
        probability=abs(I) ** 2,
        time_grid=grid,
        phase_grid=ph(grid),
        gap_grid=np.asarray(gap(n, eff, sigma, tau)),
    )
    if (sigma, tau) == (1, 1):
        res.B_grid, res.D_grid = bd_coefficients(n, eff)

        def parts(s):
            e = params.effective(s)
            return np.asarray(e.kappa) * dB_dt(n, e) * np.exp(1j * ph(s))

        _, pv = adaptive_panels(parts, ph.edges, protocol.epsabs)
        ends = params.effective(np.array([0.0, T]))
        B_end, _ = bd_coefficients(n, ends)
        phi_end = ph(np.array([0.0, T]))
        kap = np.asarray(ends.kappa)
        boundary = 0.5j * (kap[1] * B_end[1] * np.exp(1j * phi_end[0 + 1]) - kap[0] * B_end[0] * np.exp(1j * phi_end[0]))
        res.I_by_parts = complex(-0.5j * np.sum(pv))
        res.boundary_term = complex(boundary)
        res.by_parts_difference = abs(I - (res.I_by_parts + res.boundary_term))
    if res.probability > FIRST_ORDER_PROBABILITY:
        warnings.warn(
            f"|I|^2 = {res.probability:.3g} exceeds 0.1; first-order theory is unreliable", RuntimeWarning
        )
    return res


def delta_pulse_phases(n: int, protocol: Protocol):
    """``(Phi(t1), Phi(t2))`` accumulated with the plateau gap values."""
    ga = gap_formula(n, protocol.A_b, abs(protocol.alpha), protocol.delta_a)
    gb = gap_formula(n, protocol.A_b, abs(protocol.alpha), protocol.delta_b)
    p1 = ga * protocol.t1
    return p1, p1 + gb * (protocol.t2 - protocol.t1)


def delta_pulse_amplitude(n: int, protocol: Protocol) -> complex:
    """Closed form for an ideal delta pulse at constant ``kappa0``."""
    if protocol.kind != "delta_pulse":
        raise ValueError("delta_pulse_amplitude needs a delta_pulse protocol")
    Ba, _ = bd_coefficients(n, protocol.plateau_effective(protocol.delta_a))
    Bb, _ = bd_coefficients(n, protocol.plateau_effective(protocol.delta_b))
    p1, p2 = delta_pulse_phases(n, protocol)
    return complex(-0.5j * protocol.kappa0 * (Bb - Ba) * (np.exp(1j * p1) - np.exp(1j * p2)))


def delta_pulse_jump(n: int, protocol: Protocol) -> float:
    """``B_n(delta_b) - B_n(delta_a)``."""
    Ba, _ = bd_coefficients(n, protocol.plateau_effective(protocol.delta_a))
    Bb, _ = bd_coefficients(n, protocol.plateau_effective(protocol.delta_b))
    return Bb - Ba


def suppression_times(n: int, t1: float, k: int, delta_b: float, protocol: Protocol) -> float:
    """``t2 = t1 + 2 pi k / gap(delta_b)`` at which the pulse amplitude vanishes."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    return t1 + 2 * math.pi * k / gap_formula(n, protocol.A_b, abs(protocol.alpha), delta_b)


# sidebands ---------------------------------------------------------------------


def _exp_integral(w, T):
    """``∫_0^T exp(i w t) dt``, stable at ``w -> 0``."""
    return T * np.exp(0.5j * w * T) * np.sinc(w * T / (2 * math.pi))


def sine_sine_phase_integral(a: float, b: float, w: float, T: float) -> complex:
    """Closed form of ``∫_0^T sin(a t) sin(b t) exp(i w t) dt``."""
    return complex(
        0.25
        * (
            _exp_integral(w + a - b, T)
            + _exp_integral(w - a + b, T)
            - _exp_integral(w + a + b, T)
            - _exp_integral(w - a - b, T)
        )
    )


@dataclass(frozen=True)
class ResonanceReport:
    label: str
    frequency: float
    detuning: float
    fourier_width: float

    @property
    def matched(self) -> bool:
        return self.detuning < self.fourier_width


def sideband_amplitude(n: int, protocol: Protocol, params: ParameterSet | None = None):
    """Leading sideband approximation for the periodic protocol.

    Returns ``(I_approx, reports)`` where the reports give the detuning of the
    gap from ``Omega + nu`` and ``|Omega - nu|`` against the Fourier width ``2 pi / T``.
    """
    if protocol.kind != "periodic":
        raise ValueError("sideband_amplitude needs a periodic protocol")
    T = protocol.T
    eff0 = protocol.plateau_effective(protocol.delta0)
    delta_gap = float(gap(n, eff0))
    params = params if params is not None else protocol.parameters()
    grid = np.linspace(0, T, 1001)
    g = gap(n, params.effective(grid))
    if np.ptp(g) > 0.05 * abs(delta_gap):
        warnings.warn("gap varies by more than 5% over the drive; sideband approximation is rough", RuntimeWarning)
    J = sine_sine_phase_integral(protocol.omega_drive, protocol.nu, delta_gap, T)
    dB = float(dB_ddelta(n, eff0))
    I = 0.5j * protocol.epsilon * protocol.kappa0 * protocol.nu * dB * J
    width = 2 * math.pi / T
    reports = [
        ResonanceReport("Omega+nu", protocol.omega_drive + protocol.nu, abs(delta_gap - (protocol.omega_drive + protocol.nu)), width),
        ResonanceReport("|Omega-nu|", abs(protocol.omega_drive - protocol.nu), abs(delta_gap - abs(protocol.omega_drive - protocol.nu)), width),
    ]
    return complex(I), reports
