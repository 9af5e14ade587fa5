"""Classification of an incoming state and first-order T-matrix against the
three monotonicity criteria.

Criterion 1: the reduced A state has a nonempty kernel. Criterion 2: the
full state commutes with every |m><m'| x 1_B built from A-eigenvectors of
equal eigenvalue (equivalently, it is block-diagonal over the degeneracy
classes with one shared B operator per class). Criterion 3: T1 mixes kernel
with non-kernel states and acts nontrivially on B while doing so.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BasisMismatch
from .linalg import eig_hermitian, max_abs
from .qstate import (
    DEFAULT_DEGEN_TOL,
    DEFAULT_KERNEL_TOL,
    ASpectralData,
    BipartiteState,
    a_spectral_data,
)

DEFAULT_COMMUTATOR_TOL = 1e-10
DEFAULT_ELEMENT_TOL = 1e-10


class Guarantee(str, Enum):
    STRICT_INCREASE = "StrictIncrease"
    NONNEGATIVE_AT_LOG_ORDER = "NonNegativeAtLogOrder"
    NO_GUARANTEE = "NoGuarantee"


@dataclass(frozen=True)
class Witness:
    """A violating index tuple and its defect magnitude."""

    kind: str
    indices: tuple[int, ...]
    defect: float


@dataclass(frozen=True)
class GuaranteeVerdict:
    kernel_nonempty: bool
    commutation_ok: bool
    t_mixes_kernel: bool
    t_nontrivial_on_b: bool
    overall: Guarantee
    witnesses: tuple[Witness, ...]


def _check_dims(state: BipartiteState, adata: ASpectralData):
    if adata.d_a != state.d_a:
        raise BasisMismatch(
            f"spectral data is {adata.d_a}-dimensional but state has dA={state.d_a}"
        )


def check_commutation(
    state: BipartiteState,
    adata: ASpectralData,
    tol: float = DEFAULT_COMMUTATOR_TOL,
) -> tuple[bool, tuple[Witness, ...]]:
    """Test [ |m><m'| x 1_B , rho ] = 0 for all pairs within a degeneracy class.

    Returns (ok, witnesses); each witness records a failing (m, m') with its
    commutator max-norm.
    """
    _check_dims(state, adata)
    u = adata.spectrum.eigenvectors
    eye_b = np.eye(state.d_b)
    rho = state.rho
    witnesses = []
    for cls in adata.classes:
        for a, m in enumerate(cls):
            for mp in cls[a:]:
                op = np.kron(np.outer(u[:, m], u[:, mp].conj()), eye_b)
                defect = max_abs(op @ rho - rho @ op)
                if defect > tol:
                    witnesses.append(Witness("commutator", (m, mp), defect))
    return not witnesses, tuple(witnesses)


@dataclass(frozen=True)
class ClassForm:
    """One degeneracy class of the reduced A state in product form.

    ``b_op`` is the shared B-side operator of the class (the state restricted
    to the class is P_class x b_op); its eigenvalues ``b_weights`` are the
    per-product-basis-vector probabilities and sum to the class eigenvalue.
    """

    indices: tuple[int, ...]
    eigenvalue: float
    is_kernel: bool
    b_op: np.ndarray
    b_weights: np.ndarray
    b_vectors: np.ndarray


@dataclass(frozen=True)
class ProductForm:
    """Per-class product eigenbasis of a state passing the commutation criterion."""

    a_vectors: np.ndarray
    classes: tuple[ClassForm, ...]
    d_a: int
    d_b: int

    def nonkernel(self) -> tuple[ClassForm, ...]:
        return tuple(c for c in self.classes if not c.is_kernel)

    def kernel_class(self) -> ClassForm | None:
        for c in self.classes:
            if c.is_kernel:
                return c
        return None


def product_eigenbasis(
    state: BipartiteState,
    adata: ASpectralData,
    tol: float = DEFAULT_COMMUTATOR_TOL,
) -> ProductForm | None:
    """Constructively extract the per-class product form, or None.

    Rotates the state to the A eigenbasis and checks the block structure
    rho = sum_c P_c x B_c: cross-class B-blocks and within-class off-diagonal
    blocks must vanish, and the diagonal blocks of a class must coincide,
    all within ``tol`` in max-norm. On success each B_c is diagonalized to
    give the class's B basis and weights.
    """
    _check_dims(state, adata)
    d_a, d_b = state.d_a, state.d_b
    u = adata.spectrum.eigenvectors
    big = np.kron(u, np.eye(d_b))
    rotated = (big.conj().T @ state.rho @ big).reshape(d_a, d_b, d_a, d_b)

    index_class = {}
    for k, cls in enumerate(adata.classes):
        for m in cls:
            index_class[m] = k
    for m in range(d_a):
        for mp in range(d_a):
            if m == mp or index_class[m] == index_class[mp]:
                continue
            if max_abs(rotated[m, :, mp, :]) > tol:
                return None

    classes = []
    kernel = set(adata.kernel)
    for cls in adata.classes:
        ref = rotated[cls[0], :, cls[0], :]
        for m in cls:
            for mp in cls:
                block = rotated[m, :, mp, :]
                if m != mp and max_abs(block) > tol:
                    return None
                if m == mp and max_abs(block - ref) > tol:
                    return None
        b_op = np.zeros((d_b, d_b), dtype=complex)
        for m in cls:
            b_op += rotated[m, :, m, :]
        b_op = 0.5 * (b_op + b_op.conj().T) / len(cls)
        spec = eig_hermitian(b_op)
        classes.append(
            ClassForm(
                indices=tuple(cls),
                eigenvalue=adata.class_eigenvalue(cls),
                is_kernel=bool(set(cls) & kernel),
                b_op=b_op,
                b_weights=np.clip(spec.eigenvalues, 0.0, 1.0),
                b_vectors=spec.eigenvectors,
            )
        )
    return ProductForm(a_vectors=u, classes=tuple(classes), d_a=d_a, d_b=d_b)


def check_special_form(
    state: BipartiteState,
    tol: float = DEFAULT_COMMUTATOR_TOL,
    *,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    degen_tol: float = DEFAULT_DEGEN_TOL,
) -> bool:
    """True iff the state is diagonal in a (per-class) product eigenbasis.

    Decided constructively via product_eigenbasis; agrees with
    check_commutation on every input.
    """
    adata = a_spectral_data(state, kernel_tol, degen_tol)
    return product_eigenbasis(state, adata, tol) is not None


def _t_blocks(t1: np.ndarray, state: BipartiteState, adata: ASpectralData) -> np.ndarray:
    """T1 rotated to the A eigenbasis, reshaped to (m, mt, m', mt')."""
    d_a, d_b = state.d_a, state.d_b
    if t1.shape[0] != d_a * d_b:
        raise BasisMismatch(f"T1 dimension {t1.shape[0]} is not dA*dB = {d_a * d_b}")
    big = np.kron(adata.spectrum.eigenvectors, np.eye(d_b))
    return (big.conj().T @ t1 @ big).reshape(d_a, d_b, d_a, d_b)


def check_t_criterion(
    t1: np.ndarray,
    state: BipartiteState,
    adata: ASpectralData,
    tol: float = DEFAULT_ELEMENT_TOL,
) -> tuple[bool, bool, tuple[Witness, ...]]:
    """Evaluate the two halves of criterion 3.

    t_mixes_kernel: some element |<m,mt|T1|m',mt'>| > tol with m outside and
    m' inside the kernel. t_nontrivial_on_b: some kernel-mixing B-block is
    not proportional to the B identity within tol (an off-diagonal element
    exceeds tol, or the diagonal varies by more than tol).
    """
    _check_dims(state, adata)
    blocks = _t_blocks(np.asarray(t1, dtype=complex), state, adata)
    kernel = set(adata.kernel)
    nonkernel = [m for m in range(state.d_a) if m not in kernel]
    mixes = False
    nontrivial = False
    witnesses = []
    for m in nonkernel:
        for mp in kernel:
            x = blocks[m, :, mp, :]
            peak = max_abs(x)
            if peak > tol:
                mixes = True
                witnesses.append(Witness("kernel-mixing", (m, mp), peak))
            diag = np.diag(x)
            off = max_abs(x - np.diag(diag))
            spread = max_abs(diag[:, None] - diag[None, :]) if len(diag) > 1 else 0.0
            if off > tol or spread > tol:
                nontrivial = True
                witnesses.append(Witness("nontrivial-on-b", (m, mp), max(off, spread)))
    return mixes, nontrivial, tuple(witnesses)


def classify(
    state: BipartiteState,
    t1: np.ndarray,
    *,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    degen_tol: float = DEFAULT_DEGEN_TOL,
    commutator_tol: float = DEFAULT_COMMUTATOR_TOL,
    element_tol: float = DEFAULT_ELEMENT_TOL,
    adata: ASpectralData | None = None,
) -> GuaranteeVerdict:
    """Assemble the guarantee verdict for (state, T1)."""
    if adata is None:
        adata = a_spectral_data(state, kernel_tol, degen_tol)
    kernel_nonempty = len(adata.kernel) > 0
    commutation_ok, comm_witnesses = check_commutation(state, adata, commutator_tol)
    mixes, nontrivial, t_witnesses = check_t_criterion(t1, state, adata, element_tol)
    if kernel_nonempty and commutation_ok and mixes and nontrivial:
        overall = Guarantee.STRICT_INCREASE
    elif kernel_nonempty and commutation_ok:
        overall = Guarantee.NONNEGATIVE_AT_LOG_ORDER
    else:
        overall = Guarantee.NO_GUARANTEE
    return GuaranteeVerdict(
        kernel_nonempty=kernel_nonempty,
        commutation_ok=commutation_ok,
        t_mixes_kernel=mixes,
        t_nontrivial_on_b=nontrivial,
        overall=overall,
        witnesses=comm_witnesses + t_witnesses,
    )
