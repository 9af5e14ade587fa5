"""Dense complex linear algebra: Hermitian eigensolver, unitary matrix
exponential, Kronecker product and partial trace.

All operations are pure functions of their inputs. Matrices are plain
complex ndarrays; Hermiticity/unitarity are checkable predicates with
explicit tolerances, never silent assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DimensionOverflow, NoConvergence, NonHermitianInput

# Module-level tolerance configuration.
HERMITICITY_RTOL = 1e-10
UNITARITY_TOL_PER_DIM = 1e-12
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_FACTOR = 1e-14
MAX_KRON_DIM = 4096


def as_square(a) -> np.ndarray:
    """Coerce to a square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermiticity_defect(m: np.ndarray) -> float:
    return max_abs(m - m.conj().T)


def is_hermitian(m, rtol: float = HERMITICITY_RTOL) -> bool:
    m = as_square(m)
    return hermiticity_defect(m) <= rtol * max_abs(m)


def is_unitary(m, tol_per_dim: float = UNITARITY_TOL_PER_DIM) -> bool:
    m = as_square(m)
    n = m.shape[0]
    return max_abs(m.conj().T @ m - np.eye(n)) <= tol_per_dim * n


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (real, ascending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eig_hermitian(
    h,
    *,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    off_factor: float = JACOBI_OFF_FACTOR,
    rtol: float = HERMITICITY_RTOL,
) -> Spectrum:
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``off_factor * ||H||_F``. Raises NonHermitianInput on a bad input and
    NoConvergence if ``max_sweeps`` cyclic sweeps are exhausted.

    Degenerate eigenvalues come back in an arbitrary orthonormal basis of
    their eigenspace; callers must not rely on a canonical choice.
    """
    h = as_square(h)
    if hermiticity_defect(h) > rtol * max_abs(h):
        raise NonHermitianInput(
            f"hermiticity defect {hermiticity_defect(h):.3e} exceeds {rtol:.1e}*|H|"
        )
    n = h.shape[0]
    a = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=complex)
    if n == 1:
        return Spectrum(np.array([a[0, 0].real]), v)

    threshold = off_factor * float(np.linalg.norm(a))
    # Elements at or below `skip` can all be left untouched without pushing
    # the residual off-diagonal norm above `threshold`.
    skip = threshold / (n * n)
    converged = False
    for _ in range(max_sweeps + 1):
        if _offdiag_norm(a) <= threshold:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= skip:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = 1.0 / (abs(tau) + math.sqrt(1.0 + tau * tau))
                if tau < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c * phase
                # a <- J^H a J with J = [[c, s], [-conj(s), c]] on (p, q)
                ap, aq = a[:, p].copy(), a[:, q]
                a[:, p] = c * ap - np.conj(s) * aq
                a[:, q] = s * ap + c * aq
                rp, rq = a[p, :].copy(), a[q, :]
                a[p, :] = c * rp - s * rq
                a[q, :] = np.conj(s) * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp, vq = v[:, p].copy(), v[:, q]
                v[:, p] = c * vp - np.conj(s) * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        raise NoConvergence(f"Jacobi sweeps exceeded {max_sweeps} without converging")

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order], v[:, order])


def matexp_skew(h, lam: float) -> np.ndarray:
    """exp(i*lam*H) for Hermitian H, via the spectral decomposition.

    The result is unitary by construction (phases applied to an orthonormal
    eigenbasis), which scaling-and-squaring would not guarantee.
    """
    spec = eig_hermitian(h)
    phases = np.exp(1j * lam * spec.eigenvalues)
    u = spec.eigenvectors
    return (u * phases) @ u.conj().T


def kron(a, b, *, max_dim: int = MAX_KRON_DIM) -> np.ndarray:
    """Kronecker product with entry ((i*dB+k),(j*dB+l)) = A_ij * B_kl."""
    a = as_square(a)
    b = as_square(b)
    out_dim = a.shape[0] * b.shape[0]
    if out_dim > max_dim:
        raise DimensionOverflow(f"kron dimension {out_dim} exceeds maximum {max_dim}")
    return np.kron(a, b)


def partial_trace_b(m, d_a: int, d_b: int) -> np.ndarray:
    """Trace out the second (minor) tensor factor of a dA*dB square matrix."""
    m = as_square(m)
    if d_a < 1 or d_b < 1 or m.shape[0] != d_a * d_b:
        raise DimensionMismatch(
            f"matrix dimension {m.shape[0]} is not dA*dB = {d_a}*{d_b}"
        )
    return np.einsum("ikjk->ij", m.reshape(d_a, d_b, d_a, d_b))
