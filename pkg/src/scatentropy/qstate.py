"""Density matrices on bipartite spaces: entropy, reduced states, spectral data.

The product-space index convention is A-major, B-minor: basis vector
``m*dB + mt`` is |m> x |mt>, matching ``linalg.kron(A_op, B_op)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidDensity
from .linalg import Spectrum, as_square, eig_hermitian, hermiticity_defect, partial_trace_b

# Module-level tolerance configuration.
DENSITY_TOL = 1e-10
DEFAULT_KERNEL_TOL = 1e-12
DEFAULT_DEGEN_TOL = 1e-9


def validate_density(mat, tol: float = DENSITY_TOL) -> np.ndarray:
    """Check the density-matrix invariants and return the coerced array.

    Requires Hermiticity, eigenvalues >= -tol and unit trace, each within
    ``tol`` in max-norm. Raises InvalidDensity otherwise.
    """
    m = as_square(mat)
    if hermiticity_defect(m) > tol:
        raise InvalidDensity(f"hermiticity defect {hermiticity_defect(m):.3e} > {tol:.1e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > tol:
        raise InvalidDensity(f"trace {tr} differs from 1 by more than {tol:.1e}")
    w = eig_hermitian(0.5 * (m + m.conj().T)).eigenvalues
    if w[0] < -tol:
        raise InvalidDensity(f"negative eigenvalue {w[0]:.3e} below -{tol:.1e}")
    return m


def density_eigenvalues(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Ascending eigenvalues of a valid density matrix, clamped to [0, 1]."""
    m = validate_density(rho, tol)
    w = eig_hermitian(0.5 * (m + m.conj().T)).eigenvalues
    return np.clip(w, 0.0, 1.0)


def entropy_of_eigenvalues(w, kernel_tol: float = DEFAULT_KERNEL_TOL) -> float:
    """-sum p ln p in nats with the 0*ln(0) = 0 convention below kernel_tol."""
    w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
    mask = w > kernel_tol
    p = w[mask]
    return float(-np.sum(p * np.log(p))) if p.size else 0.0


def von_neumann_entropy(rho, *, kernel_tol: float = DEFAULT_KERNEL_TOL) -> float:
    """Von Neumann entropy S(rho) = -tr(rho ln rho), in nats."""
    return entropy_of_eigenvalues(density_eigenvalues(rho), kernel_tol)


@dataclass(frozen=True)
class BipartiteState:
    """A density matrix on a dA*dB product space with recorded factor dimensions."""

    rho: np.ndarray
    d_a: int
    d_b: int

    def __post_init__(self):
        m = validate_density(self.rho)
        if m.shape[0] != self.d_a * self.d_b:
            raise DimensionMismatch(
                f"state dimension {m.shape[0]} is not dA*dB = {self.d_a}*{self.d_b}"
            )
        object.__setattr__(self, "rho", m)

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b


def reduced_a(state: BipartiteState) -> np.ndarray:
    """Reduced density matrix of subsystem A (partial trace over B)."""
    return partial_trace_b(state.rho, state.d_a, state.d_b)


@dataclass(frozen=True)
class ASpectralData:
    """Spectral data of the reduced A state: eigenbasis, kernel, degeneracy classes.

    ``kernel`` holds the indices (into the ascending spectrum) of eigenvalues
    at or below ``kernel_tol``; ``classes`` partitions all indices into groups
    whose eigenvalues are equal within ``degen_tol``. The kernel, when present,
    is always a class of its own.
    """

    spectrum: Spectrum
    kernel: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]
    kernel_tol: float = field(default=DEFAULT_KERNEL_TOL)
    degen_tol: float = field(default=DEFAULT_DEGEN_TOL)

    @property
    def d_a(self) -> int:
        return self.spectrum.dim

    def class_eigenvalue(self, cls: tuple[int, ...]) -> float:
        w = self.spectrum.eigenvalues
        return float(np.mean([w[i] for i in cls]))

    def nonkernel_classes(self) -> tuple[tuple[int, ...], ...]:
        kernel = set(self.kernel)
        return tuple(c for c in self.classes if not set(c) & kernel)


def a_spectral_data(
    state: BipartiteState,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    degen_tol: float = DEFAULT_DEGEN_TOL,
) -> ASpectralData:
    """Eigendecompose the reduced A state and group its spectrum.

    Classes are formed by chaining ascending eigenvalues whose successive
    gaps stay within ``degen_tol``; a new class is forced at the boundary
    between kernel (<= kernel_tol) and non-kernel eigenvalues.
    """
    spec = eig_hermitian(_hermitize(reduced_a(state)))
    w = spec.eigenvalues
    kernel = tuple(i for i in range(len(w)) if w[i] <= kernel_tol)
    classes: list[list[int]] = []
    for i in range(len(w)):
        in_kernel = w[i] <= kernel_tol
        if classes:
            prev = classes[-1][-1]
            same_side = (w[prev] <= kernel_tol) == in_kernel
            if same_side and w[i] - w[prev] <= degen_tol:
                classes[-1].append(i)
                continue
        classes.append([i])
    return ASpectralData(
        spectrum=spec,
        kernel=kernel,
        classes=tuple(tuple(c) for c in classes),
        kernel_tol=kernel_tol,
        degen_tol=degen_tol,
    )


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def gray_zone_eigenvalues(
    adata: ASpectralData, upper: float = 1e-6
) -> tuple[float, ...]:
    """Eigenvalues strictly between kernel_tol and ``upper``.

    The theory treats zero and order-one eigenvalues by different formulas;
    eigenvalues in this window sit between the two regimes.
    """
    w = adata.spectrum.eigenvalues
    return tuple(float(x) for x in w if adata.kernel_tol < x < upper)
