"""Perturbative T-matrices obeying order-by-order unitarity, and the exact
unitary S used as the evolution oracle.

With S = 1 + iT and T = lam*T1 + lam^2*T2 + ..., unitarity of S is
i(T - T^dag) = -T T^dag order by order, which pins T1 = T1^dag and
T2 - T2^dag = i*T1*T1. The Hermitian part of T2 is free; it is exposed as
``h2`` and defaults to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConflictingAssignment, DimensionMismatch, NonHermitianInput
from .linalg import as_square, hermiticity_defect, matexp_skew, max_abs

T_PAIR_TOL = 1e-10


def _require_hermitian(m: np.ndarray, name: str, tol: float = T_PAIR_TOL) -> np.ndarray:
    if hermiticity_defect(m) > tol * max(max_abs(m), 1.0):
        raise NonHermitianInput(f"{name} is not Hermitian within {tol:.1e}")
    return m


@dataclass(frozen=True)
class TMatrixPair:
    """First- and second-order T-matrix coefficients (T1, T2).

    Invariants: T1 = T1^dag and T2 - T2^dag = i*T1*T1, both within 1e-10.
    """

    t1: np.ndarray
    t2: np.ndarray
    d_a: int
    d_b: int

    def __post_init__(self):
        t1 = as_square(self.t1)
        t2 = as_square(self.t2)
        dim = self.d_a * self.d_b
        if t1.shape[0] != dim or t2.shape[0] != dim:
            raise DimensionMismatch(f"T matrices must be {dim}x{dim}")
        _require_hermitian(t1, "T1")
        defect = max_abs(t2 - t2.conj().T - 1j * (t1 @ t1))
        if defect > T_PAIR_TOL * max(max_abs(t1) ** 2, 1.0):
            raise NonHermitianInput(
                f"T2 - T2^dag differs from i*T1*T1 by {defect:.3e}"
            )
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @property
    def h2(self) -> np.ndarray:
        """Hermitian part of T2 (the part the optical theorem leaves free)."""
        return 0.5 * (self.t2 + self.t2.conj().T)


def sample_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Gaussian Hermitian draw from an explicit generator.

    Diagonal entries are standard normal; each off-diagonal entry is
    (g1 + i*g2)/2 with independent standard normals, mirrored by conjugation.
    """
    if dim < 1:
        raise DimensionMismatch("dim must be >= 1")
    m = np.zeros((dim, dim), dtype=complex)
    m[np.diag_indices(dim)] = rng.standard_normal(dim)
    for i in range(dim):
        for j in range(i + 1, dim):
            g1, g2 = rng.standard_normal(2)
            m[i, j] = 0.5 * (g1 + 1j * g2)
            m[j, i] = np.conj(m[i, j])
    return m


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    """Seeded Gaussian Hermitian matrix; deterministic for a fixed seed."""
    return sample_hermitian(np.random.default_rng(seed), dim)


def random_blocked_hermitian(
    d_a: int, d_b: int, a_blocks, seed: int
) -> np.ndarray:
    """Gaussian Hermitian matrix supported on given A-index blocks.

    Elements T[(m,mt),(m',mt')] are zero unless m and m' lie in the same
    block of ``a_blocks`` (a partition of range(d_a)). Realizes T-families
    under which a kernel is protected by a super-selection rule.
    """
    blocks = [tuple(int(i) for i in blk) for blk in a_blocks]
    flat = sorted(i for blk in blocks for i in blk)
    if flat != list(range(d_a)):
        raise DimensionMismatch(f"a_blocks must partition range({d_a}), got {blocks}")
    full = random_hermitian(d_a * d_b, seed)
    mask = np.zeros((d_a, d_a), dtype=bool)
    for blk in blocks:
        for m in blk:
            for mp in blk:
                mask[m, mp] = True
    keep = np.kron(mask, np.ones((d_b, d_b), dtype=bool))
    return np.where(keep, full, 0.0)


def complete_second_order(t1, h2=None, *, d_a: int | None = None, d_b: int | None = None) -> "TMatrixPair":
    """Complete a Hermitian T1 to a unitarity-consistent pair.

    T2 = h2 + (i/2)*T1*T1 for a free Hermitian h2 (zero when omitted).
    Factor dimensions default to (dim, 1) when not given.
    """
    t1 = as_square(t1)
    _require_hermitian(t1, "t1")
    if h2 is None:
        h2 = np.zeros_like(t1)
    else:
        h2 = as_square(h2)
        _require_hermitian(h2, "h2")
        if h2.shape != t1.shape:
            raise DimensionMismatch("h2 must match t1 in shape")
    t2 = h2 + 0.5j * (t1 @ t1)
    if d_a is None or d_b is None:
        d_a, d_b = t1.shape[0], 1
    return TMatrixPair(t1=t1, t2=t2, d_a=d_a, d_b=d_b)


def exact_s(t1, lam: float) -> np.ndarray:
    """The exact unitary S = exp(i*lam*T1).

    This is the minimal unitary completion of the perturbative series: its
    Taylor coefficients reproduce T1 and T2 = (i/2)*T1^2.
    """
    return matexp_skew(t1, lam)


@dataclass(frozen=True)
class UnitarityReport:
    """Max-norm defect of the truncated optical theorem at a given coupling."""

    lam: float
    defect: float
    bound: float
    consistent: bool


def verify_unitarity(pair: TMatrixPair, lam: float) -> UnitarityReport:
    """Evaluate ||i(T - T^dag) + T T^dag||_max for T truncated at order lam^2.

    For a consistent pair the defect is O(lam^3); the report's bound is
    10 * max(1, ||T1||_max)^3 * lam^3.
    """
    t = lam * pair.t1 + lam**2 * pair.t2
    defect = max_abs(1j * (t - t.conj().T) + t @ t.conj().T)
    scale = max(1.0, max_abs(pair.t1))
    bound = 10.0 * scale**3 * abs(lam) ** 3
    return UnitarityReport(lam=lam, defect=defect, bound=bound, consistent=defect <= bound)


def flat_index(m: int, mt: int, d_b: int) -> int:
    """Product-space index of |m> x |mt| under the A-major convention."""
    return m * d_b + mt


def structured_t1(d_a: int, d_b: int, elements) -> np.ndarray:
    """Build a Hermitian T1 from listed elements, closing under conjugation.

    ``elements`` is an iterable of (m, mt, mp, mtp, value) with
    T1[(m,mt),(mp,mtp)] = value; the conjugate element is set automatically.
    Raises ConflictingAssignment when an element and its conjugate partner
    (or a repeat listing) disagree.
    """
    dim = d_a * d_b
    t1 = np.zeros((dim, dim), dtype=complex)
    assigned: dict[tuple[int, int], complex] = {}

    def put(i: int, j: int, value: complex):
        if (i, j) in assigned and not np.isclose(assigned[(i, j)], value, rtol=1e-12, atol=1e-15):
            raise ConflictingAssignment(
                f"element ({i},{j}) assigned both {assigned[(i, j)]} and {value}"
            )
        assigned[(i, j)] = value
        t1[i, j] = value

    for m, mt, mp, mtp, value in elements:
        for k, d in ((m, d_a), (mp, d_a)):
            if not 0 <= k < d:
                raise DimensionMismatch(f"A index {k} outside range({d_a})")
        for k in (mt, mtp):
            if not 0 <= k < d_b:
                raise DimensionMismatch(f"B index {k} outside range({d_b})")
        i = flat_index(m, mt, d_b)
        j = flat_index(mp, mtp, d_b)
        value = complex(value)
        if i == j and abs(value.imag) > 1e-15 * max(abs(value), 1.0):
            raise ConflictingAssignment(
                f"diagonal element ({i},{i}) must be real, got {value}"
            )
        put(i, j, value)
        if i != j:
            put(j, i, np.conj(value))
    return t1


@dataclass(frozen=True)
class TElementView:
    """Indexed accessor for T1 elements <m,mt|T1|mp,mtp> in chosen bases.

    ``a_basis``/``b_basis`` columns define the A and B bases; identity means
    the computational basis.
    """

    t1: np.ndarray
    d_a: int
    d_b: int
    a_basis: np.ndarray | None = None
    b_basis: np.ndarray | None = None

    def element(self, m: int, mt: int, mp: int, mtp: int) -> complex:
        ua = np.eye(self.d_a) if self.a_basis is None else self.a_basis
        ub = np.eye(self.d_b) if self.b_basis is None else self.b_basis
        bra = np.kron(ua[:, m], ub[:, mt])
        ket = np.kron(ua[:, mp], ub[:, mtp])
        return complex(bra.conj() @ self.t1 @ ket)
