"""Sector blocks, closed-form dressed energies and numerical diagonalization.

Without squeezing the Hermitian partner commutes with ``Q = N - S0`` and
splits into the vacuum ``|up,0>`` plus two-dimensional sectors
``{|down,n>, |up,n+1>}``. Inside sector ``n`` the matrix is

    [[A_b n - A_f/2,        g* sqrt(n+1)    ],
     [g sqrt(n+1),          A_b(n+1) + A_f/2]]

in the ordered basis ``(|down,n>, |up,n+1>)``; ``g`` multiplies ``S+ b†``
and therefore appears below the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import DOWN, UP, HilbertSpec, commutator, hermiticity_defect, max_abs, restrict
from .trajectories import EffectiveParams

DEGENERACY_RTOL = 1e-10
HERMITIAN_TOL = 1e-8
GUARD_WEIGHT_TOL = 1e-6


def _degenerate(omega, A_b, g_mod):
    scale = np.maximum(np.maximum(np.abs(A_b), g_mod), 1.0)
    return omega < DEGENERACY_RTOL * scale


def sector_angles(effective: EffectiveParams, n):
    """Vectorized closed forms for sectors ``n`` (broadcast against time arrays).

    Returns
    -------
    dict with ``E_plus``, ``E_minus``, ``Omega``, ``theta``, ``c``, ``s``, ``degenerate``.
    """
    n = np.asarray(n)
    A_f = np.asarray(effective.A_f, dtype=float)
    A_b = np.asarray(effective.A_b, dtype=float)
    gm = np.abs(np.asarray(effective.g))
    x = A_b + A_f
    y = 2 * gm * np.sqrt(n + 1.0)
    omega = np.hypot(x, y)
    theta = 0.5 * np.arctan2(y, -x)
    mid = A_b * (n + 0.5)
    return {
        "E_plus": mid + 0.5 * omega,
        "E_minus": mid - 0.5 * omega,
        "Omega": omega,
        "theta": theta,
        "c": np.cos(theta),
        "s": np.sin(theta),
        "degenerate": _degenerate(omega, A_b, gm),
    }


@dataclass(frozen=True)
class SectorBlock:
    """The 2x2 restriction of the non-squeezing partner to sector ``n``."""

    n: int
    matrix: np.ndarray
    E_plus: float
    E_minus: float
    Omega: float
    theta: float
    phi: float
    degenerate: bool

    @property
    def c(self) -> float:
        return math.cos(self.theta)

    @property
    def s(self) -> float:
        return math.sin(self.theta)

    @property
    def q(self) -> float:
        """Eigenvalue of ``Q = N - S0`` on the sector."""
        return self.n + 0.5

    def energy(self, sigma: int) -> float:
        return self.E_plus if sigma > 0 else self.E_minus

    def state(self, sigma: int) -> "DressedState":
        if self.degenerate:
            raise ValueError(f"sector {self.n} is degenerate; dressed states are undefined")
        return DressedState(self.n, 1 if sigma > 0 else -1, self.c, self.s, self.phi)


def block(n: int, effective: EffectiveParams) -> SectorBlock:
    """Closed-form sector block at a single time."""
    if n < 0:
        raise ValueError("sector index must be non-negative")
    A_f, A_b = float(effective.A_f), float(effective.A_b)
    g = complex(effective.g)
    r = math.sqrt(n + 1)
    mat = np.array(
        [[A_b * n - 0.5 * A_f, g.conjugate() * r], [g * r, A_b * (n + 1) + 0.5 * A_f]],
        dtype=complex,
    )
    a = sector_angles(effective, n)
    deg = bool(a["degenerate"])
    return SectorBlock(
        n=n,
        matrix=mat,
        E_plus=float(a["E_plus"]),
        E_minus=float(a["E_minus"]),
        Omega=float(a["Omega"]),
        theta=float("nan") if deg else float(a["theta"]),
        phi=float(np.angle(g)),
        degenerate=deg,
    )


def vacuum_energy(effective: EffectiveParams) -> float:
    """Energy of the uncoupled state ``|up,0>``."""
    return 0.5 * float(effective.A_f)


@dataclass(frozen=True)
class DressedState:
    """Eigenvector of a sector block.

    ``sigma=+1``: ``c |down,n> + e^{i phi} s |up,n+1>``;
    ``sigma=-1``: ``-s |down,n> + e^{i phi} c |up,n+1>``.
    """

    n: int
    sigma: int
    c: float
    s: float
    phi: float = 0.0

    @property
    def components(self):
        """Coefficients on ``(|down,n>, |up,n+1>)``."""
        ph = complex(math.cos(self.phi), math.sin(self.phi))
        if self.sigma > 0:
            return complex(self.c), ph * self.s
        return complex(-self.s), ph * self.c

    def vector(self, spec: HilbertSpec) -> np.ndarray:
        if self.n + 1 >= spec.fock_cutoff:
            raise ValueError("sector does not fit in the truncated space")
        v = np.zeros(spec.dim, dtype=complex)
        a, b = self.components
        v[spec.index(DOWN, self.n)] = a
        v[spec.index(UP, self.n + 1)] = b
        return v


def vacuum_state(spec: HilbertSpec) -> np.ndarray:
    return spec.basis(UP, 0)


@dataclass(frozen=True)
class Level:
    """One entry of the closed-form spectrum (``n = -1`` marks the vacuum)."""

    energy: float
    n: int
    branch: str
    theta: float


def closed_form_levels(effective: EffectiveParams, n_max: int) -> list[Level]:
    """``{E_vac} ∪ {E_n^±, n <= n_max}`` sorted by energy."""
    out = [Level(vacuum_energy(effective), -1, "vac", float("nan"))]
    ns = np.arange(n_max + 1)
    a = sector_angles(effective, ns)
    for i, n in enumerate(ns):
        th = float("nan") if a["degenerate"][i] else float(a["theta"][i])
        out.append(Level(float(a["E_plus"][i]), int(n), "+", th))
        out.append(Level(float(a["E_minus"][i]), int(n), "-", th))
    out.sort(key=lambda lv: lv.energy)
    return out


@dataclass(frozen=True)
class SymmetryOps:
    """``Q = N - S0`` and the parity ``Pi = exp(i pi (N - S0 + 1/2))``."""

    Q: np.ndarray
    Pi: np.ndarray

    @classmethod
    def build(cls, spec: HilbertSpec) -> "SymmetryOps":
        q = spec.boson_numbers() - spec.spin_projections()
        # N - S0 + 1/2 is an integer, so the parity is a real +-1 diagonal
        pi = np.where(np.rint(q + 0.5).astype(int) % 2 == 0, 1.0, -1.0)
        return cls(np.diag(q).astype(complex), np.diag(pi).astype(complex))


def q_commutator_defect(h: np.ndarray, spec: HilbertSpec) -> float:
    """``||[h, Q]||`` on the guarded subspace."""
    return max_abs(restrict(commutator(h, SymmetryOps.build(spec).Q), spec))


def parity_defect(h: np.ndarray, spec: HilbertSpec) -> float:
    """``||[h, Pi]||`` on the guarded subspace."""
    return max_abs(restrict(commutator(h, SymmetryOps.build(spec).Pi), spec))


def q_selection_defect(h: np.ndarray, spec: HilbertSpec) -> float:
    """Largest ``|h_ij|`` between basis states whose ``Q`` differ by anything but 0 or 2."""
    q = spec.boson_numbers() - spec.spin_projections()
    dq = np.abs(q[:, None] - q[None, :])
    forbidden = ~(np.isclose(dq, 0) | np.isclose(dq, 2))
    return float(np.max(np.abs(h[forbidden]), initial=0.0))


def guard_weight(vecs: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    """Fraction of each column's norm inside the guard band."""
    mask = spec.guard_mask()
    w = np.sum(np.abs(vecs[mask]) ** 2, axis=0)
    return w / np.sum(np.abs(vecs) ** 2, axis=0)


def diagonalize_full(h: np.ndarray, spec: HilbertSpec, k: int | None = None):
    """Guarded eigenpairs of a Hermitian matrix.

    Returns a list of ``(energy, eigvec)`` sorted by energy. Only eigenvectors
    with less than ``1e-6`` weight in the guard band are kept; if ``k`` is
    given, the ``k`` of smallest ``|energy|`` among them are returned.

    Raises
    ------
    ValueError
        If ``h`` is not Hermitian to ``1e-8`` (use :func:`guarded_eigvals` for
        the non-Hermitian energy operator).
    """
    defect = hermiticity_defect(h)
    if defect >= HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3g}); use guarded_eigvals")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    keep = guard_weight(v, spec) < GUARD_WEIGHT_TOL
    w, v = w[keep], v[:, keep]
    if k is not None:
        sel = np.sort(np.argsort(np.abs(w), kind="stable")[:k])
        w, v = w[sel], v[:, sel]
    return [(float(w[i]), v[:, i]) for i in range(len(w))]


def guarded_eigvals(H: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    """Eigenvalues of a general matrix whose right eigenvectors avoid the guard band.

    Sorted by real part.
    """
    w, v = scipy.linalg.eig(H)
    keep = guard_weight(v, spec) < GUARD_WEIGHT_TOL
    w = w[keep]
    return w[np.argsort(w.real, kind="stable")]


def sector_basis(effective: EffectiveParams, spec: HilbertSpec, n_max: int | None = None) -> dict:
    """Dressed vectors of all guarded sectors at one time, vectorized.

    Returns a dict with sector labels ``n``, arrays ``c``, ``s``, ``phi``,
    energies, and the flat indices of ``|down,n>`` and ``|up,n+1>``.
    """
    if n_max is None:
        n_max = spec.n_valid - 2
    ns = np.arange(n_max + 1)
    a = sector_angles(effective, ns)
    a["n"] = ns
    a["phi"] = float(np.angle(complex(effective.g)))
    a["down_index"] = DOWN * spec.fock_cutoff + ns
    a["up_index"] = UP * spec.fock_cutoff + ns + 1
    return a


def continue_frame(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Rephase the columns of ``new`` so each has real positive overlap with ``prev``.

    Columns are matched one to one (same ordering); only the phase is fixed.
    """
    ov = np.sum(prev.conj() * new, axis=0)
    ph = np.where(np.abs(ov) > 0, ov / np.where(np.abs(ov) > 0, np.abs(ov), 1), 1.0)
    return new / ph


def match_levels(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Permutation ``p`` such that ``new[:, p]`` has maximal overlap with ``prev`` column-wise."""
    from scipy.optimize import linear_sum_assignment

    cost = -np.abs(prev.conj().T @ new) ** 2
    _, cols = linear_sum_assignment(cost)
    return cols
