"""Time-dependent model and Dyson-map parameters.

Time functions are small expression trees that know their own analytic
derivative, so no numerical differentiation happens on the core path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.integrate import quad


class UnboundedMapError(ValueError):
    """Raised when a Dyson map (or its inverse) is unbounded on Fock space."""


def _as_tf(x) -> "TimeFunction":
    if isinstance(x, TimeFunction):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to TimeFunction")


def _fmt(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}j"
    return f"({c.real!r}+{c.imag!r}j)"


# Below this rate the closed forms (f(at + b) - f(b)) / a lose more than
# ~1e-10 to cancellation, so integration falls back to quadrature.
_MIN_RATE = 1e-6


def _linear_arg(arg) -> "tuple[complex, complex] | None":
    """``(b, a)`` for an argument ``a*t + b`` with ``|a|`` large enough to divide by."""
    lin = arg.linear_coeffs() if isinstance(arg, Poly) else None
    if lin is None or abs(lin[1]) < _MIN_RATE:
        return None
    return lin


class TimeFunction:
    """Complex-valued function of time with an analytic derivative.

    Instances are immutable. Calling with a scalar returns a Python complex,
    with an array returns a complex array of the same shape.
    """

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self._eval(arr), dtype=complex)
        if arr.ndim == 0:
            return complex(out)
        return np.broadcast_to(out, arr.shape).copy()

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self) -> "TimeFunction":
        raise NotImplementedError

    def antiderivative(self) -> "TimeFunction | None":
        """Analytic ``∫_0^t f ds`` when the tree permits it, else ``None``."""
        return None

    def expr(self) -> str:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    def __repr__(self):
        return f"TimeFunction({self.expr()})"

    def __add__(self, other):
        return _add(self, _as_tf(other))

    __radd__ = __add__

    def __sub__(self, other):
        return _add(self, _scale(-1.0, _as_tf(other)))

    def __rsub__(self, other):
        return _add(_as_tf(other), _scale(-1.0, self))

    def __neg__(self):
        return _scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, TimeFunction):
            return _mul(self, other)
        return _scale(complex(other), self)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TimeFunction):
            if not other.is_constant:
                raise ValueError("division only by constants")
            other = other.value
        return _scale(1.0 / complex(other), self)

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out: TimeFunction = Const(1.0)
        for _ in range(int(k)):
            out = _mul(out, self)
        return out

    def conj(self) -> "TimeFunction":
        if self.is_constant:
            return Const(self.value.conjugate())
        return Conj(self)


@dataclass(frozen=True, repr=False)
class Const(TimeFunction):
    value: complex

    def _eval(self, t):
        return np.full(t.shape, self.value, dtype=complex)

    def derivative(self):
        return Const(0.0)

    def antiderivative(self):
        return Poly((0.0, self.value))

    def expr(self):
        return _fmt(self.value)

    @property
    def is_constant(self):
        return True


@dataclass(frozen=True, repr=False)
class Poly(TimeFunction):
    """``sum_k coeffs[k] * t**k``."""

    coeffs: tuple

    def _eval(self, t):
        out = np.zeros(t.shape, dtype=complex)
        for c in reversed(self.coeffs):
            out = out * t + c
        return out

    def derivative(self):
        if len(self.coeffs) <= 1:
            return Const(0.0)
        return _poly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def antiderivative(self):
        return _poly((0.0,) + tuple(c / (k + 1) for k, c in enumerate(self.coeffs)))

    def linear_coeffs(self):
        """``(b, a)`` if this is ``a*t + b``, else ``None``."""
        if len(self.coeffs) == 2:
            return complex(self.coeffs[0]), complex(self.coeffs[1])
        return None

    def expr(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if k == 0 else ("t" if k == 1 else f"t**{k}")
            if k == 0:
                parts.append(_fmt(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{_fmt(c)}*{mono}")
        return "(" + " + ".join(parts) + ")" if parts else "0.0"


def _poly(coeffs):
    coeffs = tuple(complex(c) for c in coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    if len(coeffs) == 1:
        return Const(coeffs[0])
    return Poly(coeffs)


@dataclass(frozen=True, repr=False)
class Sin(TimeFunction):
    arg: TimeFunction

    def _eval(self, t):
        return np.sin(self.arg._eval(t))

    def derivative(self):
        return _mul(Cos(self.arg), self.arg.derivative())

    def antiderivative(self):
        lin = _linear_arg(self.arg)
        if lin is None:
            return None
        b, a = lin
        return _scale(-1.0 / a, _add(Cos(self.arg), Const(-np.cos(b))))

    def expr(self):
        return f"sin({self.arg.expr()})"


@dataclass(frozen=True, repr=False)
class Cos(TimeFunction):
    arg: TimeFunction

    def _eval(self, t):
        return np.cos(self.arg._eval(t))

    def derivative(self):
        return _scale(-1.0, _mul(Sin(self.arg), self.arg.derivative()))

    def antiderivative(self):
        lin = _linear_arg(self.arg)
        if lin is None:
            return None
        b, a = lin
        return _scale(1.0 / a, _add(Sin(self.arg), Const(-np.sin(b))))

    def expr(self):
        return f"cos({self.arg.expr()})"


@dataclass(frozen=True, repr=False)
class Exp(TimeFunction):
    arg: TimeFunction

    def _eval(self, t):
        return np.exp(self.arg._eval(t))

    def derivative(self):
        return _mul(self, self.arg.derivative())

    def antiderivative(self):
        lin = _linear_arg(self.arg)
        if lin is None:
            return None
        b, a = lin
        return _scale(1.0 / a, _add(self, Const(-np.exp(b))))

    def expr(self):
        return f"exp({self.arg.expr()})"


# smoothstep p(x) = 10x^3 - 15x^4 + 6x^5 and its derivatives, as coefficient lists
_SMOOTHSTEP = [np.array([0, 0, 0, 10, -15, 6], dtype=float)]
for _ in range(5):
    _SMOOTHSTEP.append(np.polynomial.polynomial.polyder(_SMOOTHSTEP[-1]))


@dataclass(frozen=True, repr=False)
class Ramp(TimeFunction):
    """Smooth step from 0 to 1 over ``[center - width/2, center + width/2]``.

    The profile is the C² quintic smoothstep, so it is exactly 0 before and
    exactly 1 after the window. ``order`` selects a time derivative.
    """

    center: float
    width: float
    order: int = 0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("ramp width must be positive")

    @property
    def start(self):
        return self.center - 0.5 * self.width

    @property
    def stop(self):
        return self.center + 0.5 * self.width

    def _eval(self, t):
        x = (t - self.start) / self.width
        inside = (x > 0) & (x < 1)
        if self.order >= len(_SMOOTHSTEP):
            return np.zeros(t.shape, dtype=complex)
        poly = _SMOOTHSTEP[self.order]
        val = np.polynomial.polynomial.polyval(np.clip(x, 0, 1), poly) / self.width**self.order
        if self.order == 0:
            return np.where(x >= 1, 1.0, np.where(inside, val, 0.0)).astype(complex)
        return np.where(inside, val, 0.0).astype(complex)

    def derivative(self):
        return Ramp(self.center, self.width, self.order + 1)

    def expr(self):
        if self.order:
            raise ValueError("derivatives of ramps have no expression form")
        return f"ramp({self.center!r}, {self.width!r})"


@dataclass(frozen=True, repr=False)
class Sum(TimeFunction):
    terms: tuple

    def _eval(self, t):
        out = np.zeros(t.shape, dtype=complex)
        for f in self.terms:
            out = out + f._eval(t)
        return out

    def derivative(self):
        out: TimeFunction = Const(0.0)
        for f in self.terms:
            out = _add(out, f.derivative())
        return out

    def antiderivative(self):
        parts = [f.antiderivative() for f in self.terms]
        if any(p is None for p in parts):
            return None
        out: TimeFunction = Const(0.0)
        for p in parts:
            out = _add(out, p)
        return out

    def expr(self):
        return "(" + " + ".join(f.expr() for f in self.terms) + ")"


@dataclass(frozen=True, repr=False)
class Prod(TimeFunction):
    left: TimeFunction
    right: TimeFunction

    def _eval(self, t):
        return self.left._eval(t) * self.right._eval(t)

    def derivative(self):
        return _add(
            _mul(self.left.derivative(), self.right), _mul(self.left, self.right.derivative())
        )

    def expr(self):
        return f"({self.left.expr()} * {self.right.expr()})"


@dataclass(frozen=True, repr=False)
class Scale(TimeFunction):
    factor: complex
    f: TimeFunction

    def _eval(self, t):
        return self.factor * self.f._eval(t)

    def derivative(self):
        return _scale(self.factor, self.f.derivative())

    def antiderivative(self):
        a = self.f.antiderivative()
        return None if a is None else _scale(self.factor, a)

    def expr(self):
        return f"({_fmt(self.factor)} * {self.f.expr()})"


@dataclass(frozen=True, repr=False)
class Conj(TimeFunction):
    f: TimeFunction

    def _eval(self, t):
        return np.conj(self.f._eval(t))

    def derivative(self):
        return Conj(self.f.derivative())

    def antiderivative(self):
        a = self.f.antiderivative()
        return None if a is None else Conj(a)

    def expr(self):
        return f"conj({self.f.expr()})"


@dataclass(frozen=True, repr=False)
class Integral(TimeFunction):
    """``∫_0^t f(s) ds`` by adaptive quadrature (fallback when no closed form)."""

    f: TimeFunction

    def _eval(self, t):
        flat = np.atleast_1d(t).ravel()
        out = np.empty(flat.shape, dtype=complex)
        for i, ti in enumerate(flat):
            re = quad(lambda s: self.f(s).real, 0.0, ti, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
            im = quad(lambda s: self.f(s).imag, 0.0, ti, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
            out[i] = re + 1j * im
        return out.reshape(t.shape)

    def derivative(self):
        return self.f

    def expr(self):
        return f"integral({self.f.expr()})"


def _scale(c: complex, f: TimeFunction) -> TimeFunction:
    c = complex(c)
    if c == 0:
        return Const(0.0)
    if c == 1:
        return f
    if isinstance(f, Const):
        return Const(c * f.value)
    if isinstance(f, Scale):
        return _scale(c * f.factor, f.f)
    if isinstance(f, Poly):
        return _poly(tuple(c * x for x in f.coeffs))
    return Scale(c, f)


def _add(a: TimeFunction, b: TimeFunction) -> TimeFunction:
    if isinstance(a, Const) and a.value == 0:
        return b
    if isinstance(b, Const) and b.value == 0:
        return a
    if isinstance(a, (Const, Poly)) and isinstance(b, (Const, Poly)):
        ca = a.coeffs if isinstance(a, Poly) else (a.value,)
        cb = b.coeffs if isinstance(b, Poly) else (b.value,)
        n = max(len(ca), len(cb))
        ca = tuple(ca) + (0,) * (n - len(ca))
        cb = tuple(cb) + (0,) * (n - len(cb))
        return _poly(tuple(x + y for x, y in zip(ca, cb)))
    terms = []
    for f in (a, b):
        terms.extend(f.terms if isinstance(f, Sum) else (f,))
    return Sum(tuple(terms))


def _mul(a: TimeFunction, b: TimeFunction) -> TimeFunction:
    if isinstance(a, Const):
        return _scale(a.value, b)
    if isinstance(b, Const):
        return _scale(b.value, a)
    if isinstance(a, Poly) and isinstance(b, Poly):
        return _poly(tuple(np.polynomial.polynomial.polymul(a.coeffs, b.coeffs)))
    return Prod(a, b)


# public constructors -------------------------------------------------------

t = Poly((0.0, 1.0))


def const(c) -> TimeFunction:
    return Const(complex(c))


def sin(f) -> TimeFunction:
    f = _as_tf(f)
    return Const(np.sin(f.value)) if f.is_constant else Sin(f)


def cos(f) -> TimeFunction:
    f = _as_tf(f)
    return Const(np.cos(f.value)) if f.is_constant else Cos(f)


def exp(f) -> TimeFunction:
    f = _as_tf(f)
    return Const(np.exp(f.value)) if f.is_constant else Exp(f)


def ramp(center: float, width: float) -> TimeFunction:
    return Ramp(float(center), float(width))


def integrate(f: TimeFunction) -> TimeFunction:
    """``∫_0^t f ds``: analytic when possible, quadrature-backed otherwise."""
    a = f.antiderivative()
    return a if a is not None else Integral(f)


def is_real(f: TimeFunction, grid, tol: float = 1e-14) -> bool:
    v = f(np.asarray(grid, dtype=float))
    return bool(np.all(np.abs(v.imag) <= tol * np.maximum(1.0, np.abs(v))))


def is_imaginary(f: TimeFunction, grid, tol: float = 1e-14) -> bool:
    v = f(np.asarray(grid, dtype=float))
    return bool(np.all(np.abs(v.real) <= tol * np.maximum(1.0, np.abs(v))))


DEFAULT_CHECK_GRID = np.linspace(0.0, 20.0, 401)


# parameter sets --------------------------------------------------------------

SOLUTION_CLASSES = ("I", "II", "custom")


@dataclass(frozen=True)
class ParamValues:
    """Snapshot of all seven parameters and the derivatives the model needs."""

    t: float | np.ndarray
    omega_f: complex | np.ndarray
    omega_b: complex | np.ndarray
    alpha: complex | np.ndarray
    beta: complex | np.ndarray
    kappa: complex | np.ndarray
    gamma: complex | np.ndarray
    delta: complex | np.ndarray
    omega_f_dot: complex | np.ndarray
    omega_b_dot: complex | np.ndarray
    alpha_dot: complex | np.ndarray
    kappa_dot: complex | np.ndarray
    gamma_dot: complex | np.ndarray
    delta_dot: complex | np.ndarray
    kappa_ddot: complex | np.ndarray
    gamma_ddot: complex | np.ndarray
    delta_ddot: complex | np.ndarray


@dataclass(frozen=True)
class EffectiveParams:
    """Coefficients of the Hermitian partner at one time (or a time array).

    ``A_f`` and ``A_b`` are the real parts of ``omega_f + i delta_dot`` and
    ``omega_b + i gamma_dot``; ``g = alpha * exp(gamma + delta)`` multiplies
    ``S+ b†``. ``ell`` is the boundary half-width ``ell0 * exp(-kappa)``.
    """

    A_f: float | np.ndarray
    A_b: float | np.ndarray
    g: complex | np.ndarray
    kappa: float | np.ndarray = 0.0
    kappa_dot: float | np.ndarray = 0.0
    ell0: float = 1.0
    A_f_dot: float | np.ndarray = 0.0
    A_b_dot: float | np.ndarray = 0.0
    g_mod_dot: float | np.ndarray = 0.0
    A_f_imag: float | np.ndarray = 0.0
    A_b_imag: float | np.ndarray = 0.0

    @property
    def g_mod(self):
        return np.abs(self.g)

    @property
    def phi(self):
        return np.angle(self.g)

    @property
    def ell(self):
        return self.ell0 * np.exp(-np.asarray(self.kappa, dtype=float))

    def with_(self, **changes) -> "EffectiveParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ParameterSet:
    """The Hamiltonian couplings and Dyson-map parameters as functions of time."""

    omega_f: TimeFunction
    omega_b: TimeFunction
    alpha: TimeFunction
    beta: TimeFunction
    kappa: TimeFunction
    gamma: TimeFunction
    delta: TimeFunction
    solution_class: str = "custom"
    ell0: float = 1.0
    expert: bool = False

    def __post_init__(self):
        if self.solution_class not in SOLUTION_CLASSES:
            raise ValueError(f"solution_class must be one of {SOLUTION_CLASSES}")
        for name in ("omega_f", "omega_b", "alpha", "beta", "kappa", "gamma", "delta"):
            object.__setattr__(self, name, _as_tf(getattr(self, name)))

    @cached_property
    def _derivs(self):
        d = {}
        for name in ("omega_f", "omega_b", "alpha", "kappa", "gamma", "delta"):
            d[name] = getattr(self, name).derivative()
        for name in ("kappa", "gamma", "delta"):
            d[name + "2"] = d[name].derivative()
        return d

    def values(self, t) -> ParamValues:
        d = self._derivs
        return ParamValues(
            t=t,
            omega_f=self.omega_f(t),
            omega_b=self.omega_b(t),
            alpha=self.alpha(t),
            beta=self.beta(t),
            kappa=self.kappa(t),
            gamma=self.gamma(t),
            delta=self.delta(t),
            omega_f_dot=d["omega_f"](t),
            omega_b_dot=d["omega_b"](t),
            alpha_dot=d["alpha"](t),
            kappa_dot=d["kappa"](t),
            gamma_dot=d["gamma"](t),
            delta_dot=d["delta"](t),
            kappa_ddot=d["kappa2"](t),
            gamma_ddot=d["gamma2"](t),
            delta_ddot=d["delta2"](t),
        )

    def effective(self, t) -> EffectiveParams:
        v = self.values(t)
        af = v.omega_f + 1j * v.delta_dot
        ab = v.omega_b + 1j * v.gamma_dot
        g = v.alpha * np.exp(v.gamma + v.delta)
        g_dot = (v.alpha_dot + v.alpha * (v.gamma_dot + v.delta_dot)) * np.exp(v.gamma + v.delta)
        gm = np.abs(g)
        with np.errstate(invalid="ignore", divide="ignore"):
            gm_dot = np.where(gm > 0, np.real(np.conj(g) * g_dot) / np.where(gm > 0, gm, 1), 0.0)
        return EffectiveParams(
            A_f=np.real(af),
            A_b=np.real(ab),
            g=g,
            kappa=np.real(v.kappa),
            kappa_dot=np.real(v.kappa_dot),
            ell0=self.ell0,
            A_f_dot=np.real(v.omega_f_dot + 1j * v.delta_ddot),
            A_b_dot=np.real(v.omega_b_dot + 1j * v.gamma_ddot),
            g_mod_dot=gm_dot if np.ndim(gm_dot) else float(gm_dot),
            A_f_imag=np.imag(af),
            A_b_imag=np.imag(ab),
        )

    def with_(self, **changes) -> "ParameterSet":
        return replace(self, **changes)

    def describe(self) -> dict:
        """Expression strings of every parameter, for provenance headers."""
        out = {"solution_class": self.solution_class, "ell0": repr(self.ell0)}
        for name in ("omega_f", "omega_b", "alpha", "beta", "kappa", "gamma", "delta"):
            try:
                out[name] = getattr(self, name).expr()
            except ValueError:
                out[name] = "<derived>"
        return out


def build_solution_I(
    omega_f,
    omega_b,
    alpha,
    gamma0: complex = 0.0,
    kappa=0.0,
    delta0: float = 0.0,
    grid=DEFAULT_CHECK_GRID,
) -> ParameterSet:
    """Solution I from the gain/loss frequency ``omega_f`` (purely imaginary).

    ``delta = delta0 + i ∫_0^t omega_f ds`` is real, ``beta = alpha* e^{2 delta}``
    and ``A_f`` vanishes identically.
    """
    omega_f, omega_b, alpha, kappa = map(_as_tf, (omega_f, omega_b, alpha, kappa))
    if not is_imaginary(omega_f, grid):
        raise ValueError("solution I needs a purely imaginary omega_f")
    _check_solution_I_common(omega_b, gamma0, kappa, grid)
    delta = _add(Const(delta0), _scale(1j, integrate(omega_f)))
    return _solution_I(omega_f, omega_b, alpha, gamma0, kappa, delta)


def build_solution_I_from_delta(
    delta, omega_b, alpha, gamma0: complex = 0.0, kappa=0.0, grid=DEFAULT_CHECK_GRID
) -> ParameterSet:
    """Solution I specified by a real ``delta(t)``; ``omega_f = -i d(delta)/dt``."""
    delta, omega_b, alpha, kappa = map(_as_tf, (delta, omega_b, alpha, kappa))
    if not is_real(delta, grid):
        raise ValueError("solution I needs a real delta(t)")
    _check_solution_I_common(omega_b, gamma0, kappa, grid)
    omega_f = _scale(-1j, delta.derivative())
    return _solution_I(omega_f, omega_b, alpha, gamma0, kappa, delta)


def _check_solution_I_common(omega_b, gamma0, kappa, grid):
    if not is_real(omega_b, grid):
        raise ValueError("solution I needs a real omega_b")
    if complex(gamma0).real != 0:
        raise ValueError("solution I needs a purely imaginary gamma0")
    if not is_real(kappa, grid):
        raise ValueError("kappa(t) must be real")


def _solution_I(omega_f, omega_b, alpha, gamma0, kappa, delta):
    beta = _mul(alpha.conj(), exp(_scale(2.0, delta)))
    return ParameterSet(
        omega_f=omega_f,
        omega_b=omega_b,
        alpha=alpha,
        beta=beta,
        kappa=kappa,
        gamma=Const(complex(gamma0)),
        delta=delta,
        solution_class="I",
    )


def build_solution_II(
    omega_f, omega_b, alpha, delta0: complex = 0.0, kappa=0.0, gamma0: float = 0.0,
    expert: bool = False, grid=DEFAULT_CHECK_GRID,
) -> ParameterSet:
    """Solution II: real ``omega_f``, imaginary ``omega_b``, real ``gamma``.

    The resulting map is unbounded unless ``gamma`` vanishes; downstream
    operations refuse it unless ``expert=True``.
    """
    omega_f, omega_b, alpha, kappa = map(_as_tf, (omega_f, omega_b, alpha, kappa))
    if not is_real(omega_f, grid):
        raise ValueError("solution II needs a real omega_f")
    if not is_imaginary(omega_b, grid):
        raise ValueError("solution II needs a purely imaginary omega_b")
    if complex(delta0).real != 0:
        raise ValueError("solution II needs a purely imaginary delta")
    gamma = _add(Const(gamma0), _scale(1j, integrate(omega_b)))
    beta = _mul(alpha.conj(), exp(_scale(2.0, gamma)))
    return ParameterSet(
        omega_f=omega_f, omega_b=omega_b, alpha=alpha, beta=beta, kappa=kappa,
        gamma=gamma, delta=Const(complex(delta0)), solution_class="II", expert=expert,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Residuals of the four Hermiticity conditions at one time."""

    t: float
    A_f_real: float
    A_b_real: float
    kappa_real: float
    beta_relation: float
    tol: float

    @property
    def residuals(self) -> dict:
        return {
            "A_f_real": self.A_f_real,
            "A_b_real": self.A_b_real,
            "kappa_real": self.kappa_real,
            "beta_relation": self.beta_relation,
        }

    def failing(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v < self.tol]

    @property
    def passed(self) -> bool:
        return not self.failing()


def check_hermiticity_conditions(params: ParameterSet, t: float, tol: float = 1e-12) -> ConditionReport:
    v = params.values(t)
    af = v.omega_f + 1j * v.delta_dot
    ab = v.omega_b + 1j * v.gamma_dot
    beta_target = np.conj(v.alpha) * np.exp(2 * np.real(v.gamma + v.delta))
    return ConditionReport(
        t=float(t),
        A_f_real=float(abs(np.imag(af))),
        A_b_real=float(abs(np.imag(ab))),
        kappa_real=float(abs(np.imag(v.kappa))),
        beta_relation=float(abs(v.beta - beta_target)),
        tol=tol,
    )


BOUNDED = "bounded"
ETA_UNBOUNDED = "eta_unbounded"
ETA_INVERSE_UNBOUNDED = "eta_inverse_unbounded"
BOTH_DIRECTIONS_FAIL = "both_directions_fail"


def classify_boundedness(params: ParameterSet, grid=DEFAULT_CHECK_GRID, tol: float = 1e-14) -> str:
    """Classify the Dyson map by the sign of ``Re gamma`` on a time grid.

    ``exp(gamma N)`` is bounded iff ``Re gamma <= 0`` and its inverse iff
    ``Re gamma >= 0``; the other two factors are always bounded for real kappa.
    """
    re = np.real(params.gamma(np.asarray(grid, dtype=float)))
    pos = bool(np.any(re > tol))
    neg = bool(np.any(re < -tol))
    if pos and neg:
        return BOTH_DIRECTIONS_FAIL
    if pos:
        return ETA_UNBOUNDED
    if neg:
        return ETA_INVERSE_UNBOUNDED
    return BOUNDED


def ensure_bounded(params: ParameterSet, grid=DEFAULT_CHECK_GRID) -> None:
    label = classify_boundedness(params, grid)
    if label != BOUNDED and not params.expert:
        raise UnboundedMapError(
            f"Dyson map is not bounded ({label}); solution II and other Re(gamma) != 0 "
            "trajectories need expert=True"
        )


def fig1_parameters(kappa_amplitude: float = 0.3, kappa_frequency: float = 0.4) -> ParameterSet:
    """Solution-I trajectory used as the reference parameter set.

    alpha = sin(2t), delta = 0.2 + 0.1 cos(4t), A_f = 0, A_b = 1,
    kappa = 0.3 sin(0.4t).
    """
    return build_solution_I_from_delta(
        delta=0.2 + 0.1 * cos(4 * t),
        omega_b=1.0,
        alpha=sin(2 * t),
        gamma0=0.0,
        kappa=kappa_amplitude * sin(kappa_frequency * t),
    )


def frozen(params: ParameterSet, t0: float, keep_kappa: bool = True) -> ParameterSet:
    """Constant-in-time copy of ``params`` at ``t0`` (custom class).

    With ``keep_kappa`` the squeezing is frozen at ``kappa(t0)`` (constant
    squeezing regime), otherwise set to zero.
    """
    v = params.values(t0)
    return ParameterSet(
        omega_f=Const(v.omega_f + 1j * v.delta_dot),
        omega_b=Const(v.omega_b + 1j * v.gamma_dot),
        alpha=Const(v.alpha),
        beta=Const(v.beta),
        kappa=Const(v.kappa if keep_kappa else 0.0),
        gamma=Const(v.gamma),
        delta=Const(v.delta),
        solution_class="custom",
        ell0=params.ell0,
    )


def ramp_windows(*funcs: TimeFunction) -> list[tuple[float, float]]:
    """Sorted ``(start, stop)`` windows of every ramp node found in the trees."""
    found = set()

    def walk(f):
        if isinstance(f, Ramp):
            found.add((f.start, f.stop))
        for child in vars(f).values():
            if isinstance(child, TimeFunction):
                walk(child)
            elif isinstance(child, tuple):
                for c in child:
                    if isinstance(c, TimeFunction):
                        walk(c)

    for f in funcs:
        walk(f)
    return sorted(found)


def parameter_ramp_windows(params: ParameterSet) -> list[tuple[float, float]]:
    return ramp_windows(
        params.omega_f, params.omega_b, params.alpha, params.beta, params.kappa, params.gamma, params.delta
    )
