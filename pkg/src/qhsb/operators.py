"""Truncated boson Fock space tensored with a spin-1/2 factor.

Basis ordering is spin ⊗ boson with spin-up at spin index 0 and spin-down at
spin index 1, so the basis vector ``|s, n>`` sits at ``s * cutoff + n``.
Every other module relies on this convention.

Operators are plain dense ``numpy`` complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

UP = 0
DOWN = 1

OperatorMatrix = np.ndarray


@dataclass(frozen=True)
class HilbertSpec:
    """Size of the truncated spin ⊗ boson space.

    Parameters
    ----------
    fock_cutoff : int
        Number of boson levels kept, ``|0>..|cutoff-1>``.
    guard_band : int
        Top boson levels excluded from validated results.
    spin_dim : int
        Always 2.
    """

    fock_cutoff: int = 64
    guard_band: int = 16
    spin_dim: int = 2

    def __post_init__(self):
        if self.spin_dim != 2:
            raise ValueError("only spin-1/2 is supported (spin_dim=2)")
        if self.fock_cutoff < 8:
            raise ValueError(f"fock_cutoff must be >= 8, got {self.fock_cutoff}")
        if not 0 < self.guard_band < self.fock_cutoff / 2:
            raise ValueError(
                f"guard_band must satisfy 0 < guard_band < cutoff/2, got {self.guard_band}"
            )

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_cutoff

    @property
    def n_valid(self) -> int:
        """Boson levels ``n < n_valid`` are outside the guard band."""
        return self.fock_cutoff - self.guard_band

    def index(self, spin: int, n: int) -> int:
        return spin * self.fock_cutoff + n

    def basis(self, spin: int, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(spin, n)] = 1.0
        return v

    def boson_numbers(self) -> np.ndarray:
        return np.tile(np.arange(self.fock_cutoff), 2)

    def spin_projections(self) -> np.ndarray:
        """S0 eigenvalue of each basis vector."""
        return np.repeat([0.5, -0.5], self.fock_cutoff)

    def guarded_indices(self) -> np.ndarray:
        return np.flatnonzero(self.boson_numbers() < self.n_valid)

    def guard_mask(self) -> np.ndarray:
        """Boolean mask of basis vectors inside the guard band."""
        return self.boson_numbers() >= self.n_valid

    def doubled(self) -> "HilbertSpec":
        return HilbertSpec(2 * self.fock_cutoff, self.guard_band)


def make_boson_ops(spec: HilbertSpec):
    """Return ``(b, b_dag, num)`` on the boson factor alone."""
    m = spec.fock_cutoff
    b = np.diag(np.sqrt(np.arange(1, m, dtype=float)), 1).astype(complex)
    b_dag = b.T.copy()
    num = np.diag(np.arange(m, dtype=float)).astype(complex)
    return b, b_dag, num


def make_spin_ops():
    """Return ``(S0, Sp, Sm)`` for spin 1/2 in the (up, down) ordering."""
    s0 = np.diag([0.5, -0.5]).astype(complex)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = sp.T.copy()
    return s0, sp, sm


def lift(op: OperatorMatrix, factor: str, spec: HilbertSpec) -> OperatorMatrix:
    """Embed a single-factor operator into the full spin ⊗ boson space."""
    op = np.asarray(op)
    if factor == "boson":
        n = spec.fock_cutoff
        if op.shape != (n, n):
            raise ValueError(f"boson operator must be {n}x{n}, got {op.shape}")
        return np.kron(np.eye(spec.spin_dim), op)
    if factor == "spin":
        if op.shape != (spec.spin_dim, spec.spin_dim):
            raise ValueError(f"spin operator must be 2x2, got {op.shape}")
        return np.kron(op, np.eye(spec.fock_cutoff))
    raise ValueError(f"unknown factor {factor!r}; expected 'boson' or 'spin'")


@dataclass(frozen=True)
class OperatorTable:
    """Lifted operators that every Hamiltonian in the model is built from."""

    spec: HilbertSpec
    identity: np.ndarray
    b: np.ndarray
    b_dag: np.ndarray
    num: np.ndarray
    s0: np.ndarray
    sp: np.ndarray
    sm: np.ndarray
    b_dag2: np.ndarray
    b2: np.ndarray
    sp_bdag: np.ndarray  # S+ b†
    sm_b: np.ndarray  # S- b
    sp_b: np.ndarray  # S+ b
    sm_bdag: np.ndarray  # S- b†

    @property
    def squeeze_generator(self) -> np.ndarray:
        """``K = (b†² - b²)/2``."""
        return 0.5 * (self.b_dag2 - self.b2)


@lru_cache(maxsize=16)
def operator_table(spec: HilbertSpec) -> OperatorTable:
    b, bd, n = make_boson_ops(spec)
    s0, sp, sm = make_spin_ops()
    one_s = np.eye(spec.spin_dim)
    one_b = np.eye(spec.fock_cutoff)
    # products are formed per factor, then lifted: far cheaper than full-space matmuls
    mats = dict(
        identity=np.eye(spec.dim, dtype=complex),
        b=np.kron(one_s, b),
        b_dag=np.kron(one_s, bd),
        num=np.kron(one_s, n),
        s0=np.kron(s0, one_b),
        sp=np.kron(sp, one_b),
        sm=np.kron(sm, one_b),
        b_dag2=np.kron(one_s, bd @ bd),
        b2=np.kron(one_s, b @ b),
        sp_bdag=np.kron(sp, bd),
        sm_b=np.kron(sm, b),
        sp_b=np.kron(sp, b),
        sm_bdag=np.kron(sm, bd),
    )
    for m in mats.values():
        m.flags.writeable = False
    return OperatorTable(spec=spec, **mats)


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def expm(op: OperatorMatrix) -> OperatorMatrix:
    """Matrix exponential (Padé scaling and squaring).

    Raises
    ------
    OverflowError
        If the result is not finite.
    """
    op = np.asarray(op)
    if not np.all(np.isfinite(op)):
        raise ValueError("expm argument has non-finite entries")
    out = scipy.linalg.expm(op)
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential overflowed; reduce the cutoff or |Re gamma|")
    return out


def max_abs(op: OperatorMatrix) -> float:
    return float(np.max(np.abs(op))) if np.size(op) else 0.0


def restrict(op: OperatorMatrix, spec: HilbertSpec) -> OperatorMatrix:
    """Block of ``op`` acting within the guarded subspace."""
    idx = spec.guarded_indices()
    return op[np.ix_(idx, idx)]


def hermiticity_defect(op: OperatorMatrix, spec: HilbertSpec | None = None) -> float:
    """``max |op - op†|``, optionally on the guarded subspace only."""
    d = op - op.conj().T
    if spec is not None:
        d = restrict(d, spec)
    return max_abs(d)


def guarded_defect(op: OperatorMatrix, spec: HilbertSpec) -> float:
    """Max-abs entry of ``op`` on the guarded subspace."""
    return max_abs(restrict(op, spec))
