"""Perturbative predictions for the subsystem entropy change.

Expanding S = 1 + i(lam*T1 + lam^2*T2 + ...) and conjugating the state, the
reduced eigenvalue shifts follow from (degenerate) perturbation theory on
the per-class blocks of the shift matrix. Three closed-form coefficients
result:

* the order-lam coefficient of dS (vanishes on states passing the
  commutation criterion, and flips sign with T1);
* the lam^2*ln(1/lam^2) coefficient when the reduced A state has a kernel
  (sum of the second-order kernel eigenvalue shifts, manifestly nonnegative
  in its squared form);
* the lam^2 coefficient when the reduced A state has full rank (pairwise
  log-weighted form with indefinite sign).

All element formulas are evaluated per degeneracy class in basis-free form
(B-operator traces), which reduces to the printed elementwise sums whenever
a global product eigenbasis exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .criteria import (
    DEFAULT_COMMUTATOR_TOL,
    ClassForm,
    ProductForm,
    product_eigenbasis,
)
from .errors import (
    BasisMismatch,
    DegeneracyLeak,
    EnergyViolation,
    IllConditionedSpectrum,
    PreconditionViolated,
    ScatentropyError,
)
from .linalg import eig_hermitian, max_abs, partial_trace_b
from .qstate import (
    ASpectralData,
    BipartiteState,
    a_spectral_data,
    gray_zone_eigenvalues,
)
from .smatrix import TMatrixPair, flat_index

GRAY_ZONE_UPPER = 1e-6
FORM_EQUIVALENCE_TOL = 1e-10


class Branch(str, Enum):
    KERNEL = "KernelBranch"
    FULL_RANK = "FullRankBranch"
    MIXED = "Mixed"


@dataclass(frozen=True)
class ClassShifts:
    """Per-class eigenvalue shift data: spectra of the order-lam and order-lam^2 blocks."""

    indices: tuple[int, ...]
    eigenvalue: float
    order1: tuple[float, ...]
    order2: tuple[float, ...]


@dataclass(frozen=True)
class PerturbativePrediction:
    """Predicted dS coefficients: dS ~ order1*lam + log*lam^2 ln(1/lam^2) + order2*lam^2."""

    order1_coeff: float
    log_coeff: float | None
    order2_coeff: float | None
    branch: Branch
    shifts: tuple[ClassShifts, ...]
    # Mixed branch only: the full-rank-style sum restricted to non-kernel
    # class pairs. Informative, not a complete lam^2 prediction (kernel
    # couplings also feed the analytic order).
    nonkernel_order2_partial: float | None = None
    # (m, m') pairs dropped from the full-rank sum because their reduced
    # eigenvalues coincide (zero log factor, ill-defined difference ratio).
    order2_excluded_pairs: tuple[tuple[int, int], ...] = ()


def _check(state: BipartiteState, adata: ASpectralData):
    if adata.d_a != state.d_a:
        raise BasisMismatch(
            f"spectral data is {adata.d_a}-dimensional but state has dA={state.d_a}"
        )


def _class_of(adata: ASpectralData, indices) -> tuple[int, ...]:
    cls = tuple(indices)
    if cls not in adata.classes:
        raise BasisMismatch(f"{cls} is not a degeneracy class of this spectrum")
    return cls


def delta_rho_a_first(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData,
    class_indices,
) -> np.ndarray:
    """First-order shift block of one degeneracy class.

    Entry (m, m') is i*Tr( T1 [rho, |m><m'| x 1_B] ) over the class's
    A-eigenvectors. Hermitian within 1e-12; its eigenvalues are the
    order-lam shifts of the class eigenvalue.
    """
    _check(state, adata)
    cls = _class_of(adata, class_indices)
    t1 = np.asarray(t1, dtype=complex)
    u = adata.spectrum.eigenvectors
    eye_b = np.eye(state.d_b)
    rho = state.rho
    n = len(cls)
    block = np.zeros((n, n), dtype=complex)
    for i, m in enumerate(cls):
        for j, mp in enumerate(cls):
            op = np.kron(np.outer(u[:, m], u[:, mp].conj()), eye_b)
            block[i, j] = 1j * np.trace(t1 @ (rho @ op - op @ rho))
    defect = max_abs(block - block.conj().T)
    if defect > 1e-12 * max(max_abs(block), 1.0):
        raise ScatentropyError(f"first-order block hermiticity defect {defect:.3e}")
    return 0.5 * (block + block.conj().T)


def _reduced_first_order(state: BipartiteState, t1: np.ndarray, adata: ASpectralData) -> np.ndarray:
    """Tr_B( i [T1, rho] ) in the A eigenbasis (full dA x dA matrix)."""
    c = 1j * (t1 @ state.rho - state.rho @ t1)
    r = partial_trace_b(c, state.d_a, state.d_b)
    u = adata.spectrum.eigenvectors
    out = u.conj().T @ r @ u
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class PerturbationBlock:
    """Shift-matrix block of one degeneracy class: M(lam) = lam*order1 + lam^2*order2."""

    indices: tuple[int, ...]
    eigenvalue: float
    order1: np.ndarray
    order2: np.ndarray

    def evaluate(self, lam: float) -> np.ndarray:
        return lam * self.order1 + lam * lam * self.order2


def perturbation_matrix(
    state: BipartiteState,
    pair: TMatrixPair,
    adata: ASpectralData,
) -> tuple[PerturbationBlock, ...]:
    """Per-class blocks of the reduced eigenvalue-shift matrix.

    order1 is the restricted first-order block. order2 collects the direct
    second-order term, Tr_B( i[h2, rho] - (1/2) [T1, [T1, rho]] ), and the
    resolvent sum over indices outside the class, with class-representative
    eigenvalues in the denominators. Raises DegeneracyLeak when an included
    denominator is at or below degen_tol.
    """
    _check(state, adata)
    t1 = pair.t1
    rho = state.rho
    u = adata.spectrum.eigenvectors
    h2 = pair.h2
    comm1 = t1 @ rho - rho @ t1
    direct_full = 1j * (h2 @ rho - rho @ h2) - 0.5 * (t1 @ comm1 - comm1 @ t1)
    direct = u.conj().T @ partial_trace_b(direct_full, state.d_a, state.d_b) @ u
    direct = 0.5 * (direct + direct.conj().T)
    first = _reduced_first_order(state, t1, adata)

    rep = np.empty(state.d_a)
    for cls in adata.classes:
        rep[list(cls)] = adata.class_eigenvalue(cls)

    blocks = []
    for cls in adata.classes:
        idx = list(cls)
        eig_c = adata.class_eigenvalue(cls)
        others = [m for m in range(state.d_a) if m not in cls]
        o1 = first[np.ix_(idx, idx)]
        o2 = direct[np.ix_(idx, idx)].copy()
        if others:
            denom = eig_c - rep[others]
            if np.min(np.abs(denom)) <= adata.degen_tol:
                raise DegeneracyLeak(
                    f"denominator {np.min(np.abs(denom)):.3e} within degen_tol for class {cls}"
                )
            coupling = first[np.ix_(idx, others)]
            o2 += (coupling / denom) @ coupling.conj().T
        o2 = 0.5 * (o2 + o2.conj().T)
        blocks.append(
            PerturbationBlock(indices=cls, eigenvalue=eig_c, order1=o1, order2=o2)
        )
    return tuple(blocks)


def _guard_gray_zone(adata: ASpectralData):
    gray = gray_zone_eigenvalues(adata, GRAY_ZONE_UPPER)
    if gray:
        raise IllConditionedSpectrum(
            f"reduced eigenvalues {gray} lie in (kernel_tol, {GRAY_ZONE_UPPER:g})"
        )


def first_order_entropy(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    gray_guard: bool = True,
) -> float:
    """Coefficient of lam in dS: -sum over non-kernel shifts of (ln p + 1).

    Within a degeneracy class the log weight is constant, so only the trace
    of the class block enters; this makes the T1 -> -T1 antisymmetry exact.
    Raises IllConditionedSpectrum on gray-zone spectra unless ``gray_guard``
    is disabled.
    """
    if adata is None:
        adata = a_spectral_data(state)
    _check(state, adata)
    if gray_guard:
        _guard_gray_zone(adata)
    kernel = set(adata.kernel)
    total = 0.0
    for cls in adata.classes:
        if set(cls) & kernel:
            continue
        block = delta_rho_a_first(state, t1, adata, cls)
        trace = float(np.trace(block).real)
        total -= (math.log(adata.class_eigenvalue(cls)) + 1.0) * trace
    return total


def _t_in_a_eigenbasis(state: BipartiteState, t1: np.ndarray, form: ProductForm) -> np.ndarray:
    big = np.kron(form.a_vectors, np.eye(state.d_b))
    return (big.conj().T @ np.asarray(t1, dtype=complex) @ big).reshape(
        state.d_a, state.d_b, state.d_a, state.d_b
    )


def _require_product_form(
    state: BipartiteState, adata: ASpectralData, commutator_tol: float
) -> ProductForm:
    form = product_eigenbasis(state, adata, commutator_tol)
    if form is None:
        raise PreconditionViolated("state fails the commutation criterion")
    return form


def log_coefficient_forms(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
) -> tuple[float, float]:
    """Both printed forms of the kernel-shift sum: (completed-square, direct).

    The completed-square form sums the probability-weighted squared moduli of
    the kernel-mixing elements with their B-diagonal average subtracted; the
    direct form is the transition-probability sum minus the over-counting
    correction. They are algebraically equal; both are evaluated in the
    product eigenbasis of each non-kernel class.
    """
    if adata is None:
        adata = a_spectral_data(state)
    _check(state, adata)
    form = _require_product_form(state, adata, commutator_tol)
    if not adata.kernel:
        raise PreconditionViolated("reduced A state has an empty kernel")
    kernel_cls = form.kernel_class()
    t1 = np.asarray(t1, dtype=complex)
    u = form.a_vectors
    kernel_idx = list(kernel_cls.indices)

    square_form = 0.0
    direct_form = 0.0
    for c in form.nonkernel():
        w_n = np.kron(u[:, list(c.indices)], c.b_vectors)
        w_k = np.kron(u[:, kernel_idx], c.b_vectors)
        t_blk = (w_n.conj().T @ t1 @ w_k).reshape(
            len(c.indices), state.d_b, len(kernel_idx), state.d_b
        )
        beta = c.b_weights
        for i in range(len(c.indices)):
            for j in range(len(kernel_idx)):
                x = t_blk[i, :, j, :]
                diag = np.diag(x)
                avg = complex(beta @ diag) / c.eigenvalue
                shifted = x.copy()
                shifted[np.diag_indices(state.d_b)] -= avg
                square_form += float(np.sum(beta[:, None] * np.abs(shifted) ** 2))
                direct_form += float(
                    np.sum(beta[:, None] * np.abs(x) ** 2)
                    - abs(complex(beta @ diag)) ** 2 / c.eigenvalue
                )
    return square_form, direct_form


def log_coefficient(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
    equivalence_tol: float = FORM_EQUIVALENCE_TOL,
) -> float:
    """Coefficient of lam^2 ln(1/lam^2) in dS for kernel-bearing states.

    Evaluates both printed forms of the kernel-shift sum, asserts their
    agreement within ``equivalence_tol``, and returns the completed-square
    value (manifestly nonnegative).
    """
    square_form, direct_form = log_coefficient_forms(
        state, t1, adata, commutator_tol=commutator_tol
    )
    if abs(square_form - direct_form) > equivalence_tol:
        raise ScatentropyError(
            f"kernel-shift forms disagree by {abs(square_form - direct_form):.3e}"
        )
    return square_form


def _braces(
    x: np.ndarray, b_i: np.ndarray, b_j: np.ndarray, rho_i: float, rho_j: float
) -> float:
    """One (m, m') term of the full-rank pair sum, in basis-free form.

    x is the B-side block <m|T1|m'>; b_i/b_j are the class B operators.
    """
    xdag = x.conj().T
    t_pop = np.trace(b_i @ (x @ xdag)).real - np.trace(b_j @ (xdag @ x)).real
    cross = complex(np.trace(x @ (b_j - b_i)))
    return t_pop - (abs(cross) ** 2) / (rho_i - rho_j)


def _pairwise_sum(
    state: BipartiteState,
    t1: np.ndarray,
    form: ProductForm,
    classes: tuple[ClassForm, ...],
    *,
    with_log: bool,
) -> float:
    """Sum of (1/2) [ln(rho_i/rho_j)] * braces over ordered distinct-class pairs."""
    blocks = _t_in_a_eigenbasis(state, t1, form)
    total = 0.0
    for ci in classes:
        for cj in classes:
            if ci is cj:
                continue
            weight = math.log(ci.eigenvalue / cj.eigenvalue) if with_log else 1.0
            for m in ci.indices:
                for mp in cj.indices:
                    x = blocks[m, :, mp, :]
                    total += 0.5 * weight * _braces(
                        x, ci.b_op, cj.b_op, ci.eigenvalue, cj.eigenvalue
                    )
    return total


def full_rank_contributions(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
) -> tuple[float, tuple[tuple[int, int], ...]]:
    """Full-rank lam^2 coefficient plus the (m, m') pairs excluded as degenerate.

    Pairs within one degeneracy class carry a vanishing log factor and an
    ill-defined difference ratio; the antisymmetrized sum drops them
    identically, so they are excluded and reported.
    """
    if adata is None:
        adata = a_spectral_data(state)
    _check(state, adata)
    form = _require_product_form(state, adata, commutator_tol)
    if adata.kernel:
        raise PreconditionViolated("reduced A state has a nonempty kernel")
    excluded = tuple(
        (m, mp)
        for c in form.classes
        if len(c.indices) > 1
        for m in c.indices
        for mp in c.indices
        if m != mp
    )
    total = _pairwise_sum(state, t1, form, form.classes, with_log=True)
    return total, excluded


def full_rank_second_order(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
) -> float:
    """Coefficient of lam^2 in dS when the reduced A state has full rank."""
    total, _ = full_rank_contributions(state, t1, adata, commutator_tol=commutator_tol)
    return total


def trace_identity_check(
    state: BipartiteState,
    t1: np.ndarray,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
) -> float:
    """|sum of second-order eigenvalue shifts| via the pair-sum form.

    The summand is odd under interchanging the pair labels, so the total
    must vanish; the returned defect is pure rounding for a correct
    implementation.
    """
    if adata is None:
        adata = a_spectral_data(state)
    _check(state, adata)
    form = _require_product_form(state, adata, commutator_tol)
    if adata.kernel:
        raise PreconditionViolated("reduced A state has a nonempty kernel")
    return abs(_pairwise_sum(state, t1, form, form.classes, with_log=False))


def thermal_delta_s(
    a_energies,
    beta: float,
    b_index: int,
    t1: np.ndarray,
    b_energies,
    *,
    element_tol: float = 1e-12,
    energy_tol: float = 1e-9,
) -> float:
    """lam^2 coefficient of dS for a thermal A state against a pure B level.

    The incoming state is exp(-beta*E_m)/Z on A with B fixed in level
    ``b_index``; T1 must conserve energy element by element (otherwise
    EnergyViolation). Equals the full-rank coefficient on the same inputs.
    """
    e_a = np.asarray(a_energies, dtype=float)
    e_b = np.asarray(b_energies, dtype=float)
    d_a, d_b = len(e_a), len(e_b)
    t1 = np.asarray(t1, dtype=complex)
    if t1.shape != (d_a * d_b, d_a * d_b):
        raise BasisMismatch(f"T1 must be {d_a * d_b}x{d_a * d_b}")
    if not 0 <= b_index < d_b:
        raise BasisMismatch(f"b_index {b_index} outside range({d_b})")
    for m in range(d_a):
        for mt in range(d_b):
            for mp in range(d_a):
                for mtp in range(d_b):
                    amp = t1[flat_index(m, mt, d_b), flat_index(mp, mtp, d_b)]
                    if abs(amp) > element_tol:
                        gap = e_a[m] + e_b[mt] - e_a[mp] - e_b[mtp]
                        if abs(gap) > energy_tol:
                            raise EnergyViolation(
                                f"element ({m},{mt})->({mp},{mtp}) violates energy "
                                f"conservation by {gap:.3e}"
                            )
    weights = np.exp(-beta * e_a)
    weights /= weights.sum()
    total = 0.0
    for m in range(d_a):
        row = flat_index(m, b_index, d_b)
        for mp in range(d_a):
            for mtp in range(d_b):
                amp = t1[row, flat_index(mp, mtp, d_b)]
                total -= weights[m] * beta * (e_b[mtp] - e_b[b_index]) * abs(amp) ** 2
    return total


def _shift_table(blocks: tuple[PerturbationBlock, ...]) -> tuple[ClassShifts, ...]:
    out = []
    for blk in blocks:
        o1 = eig_hermitian(blk.order1).eigenvalues
        o2 = eig_hermitian(blk.order2).eigenvalues
        out.append(
            ClassShifts(
                indices=blk.indices,
                eigenvalue=blk.eigenvalue,
                order1=tuple(float(x) for x in o1),
                order2=tuple(float(x) for x in o2),
            )
        )
    return tuple(out)


def predict(
    state: BipartiteState,
    pair: TMatrixPair,
    adata: ASpectralData | None = None,
    *,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
    gray_guard: bool = True,
) -> PerturbativePrediction:
    """Assemble every applicable coefficient prediction for (state, T1, T2).

    States failing the commutation criterion get only the first-order
    coefficient (the log/analytic closed forms presuppose the criterion).
    Raises IllConditionedSpectrum for gray-zone spectra unless ``gray_guard``
    is disabled.
    """
    if adata is None:
        adata = a_spectral_data(state)
    _check(state, adata)
    if gray_guard:
        _guard_gray_zone(adata)
    order1 = first_order_entropy(state, pair.t1, adata, gray_guard=gray_guard)
    commuting = product_eigenbasis(state, adata, commutator_tol) is not None

    kernel_nonempty = len(adata.kernel) > 0
    n_nonkernel_classes = len(adata.nonkernel_classes())
    if not kernel_nonempty:
        branch = Branch.FULL_RANK
    elif n_nonkernel_classes <= 1:
        branch = Branch.KERNEL
    else:
        branch = Branch.MIXED

    log_coeff = None
    order2 = None
    partial = None
    excluded: tuple[tuple[int, int], ...] = ()
    if commuting and kernel_nonempty:
        log_coeff = log_coefficient(state, pair.t1, adata, commutator_tol=commutator_tol)
    if commuting and branch is Branch.FULL_RANK:
        order2, excluded = full_rank_contributions(
            state, pair.t1, adata, commutator_tol=commutator_tol
        )
    if commuting and branch is Branch.MIXED:
        form = product_eigenbasis(state, adata, commutator_tol)
        partial = _pairwise_sum(
            state, pair.t1, form, form.nonkernel(), with_log=True
        )
    shifts = _shift_table(perturbation_matrix(state, pair, adata))
    return PerturbativePrediction(
        order1_coeff=order1,
        log_coeff=log_coeff,
        order2_coeff=order2,
        branch=branch,
        shifts=shifts,
        nonkernel_order2_partial=partial,
        order2_excluded_pairs=excluded,
    )
