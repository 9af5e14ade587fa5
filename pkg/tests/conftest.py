"""Shared state and operator builders for the test suite."""

import numpy as np
import pytest

from scatentropy.linalg import kron
from scatentropy.qstate import BipartiteState
from scatentropy.smatrix import flat_index, random_hermitian


def random_density(rng, dim):
    """Full-rank random density matrix (Wishart-normalized)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def diag_separable_with_kernel(seed, max_dim=4):
    """Random diagonal-in-product-basis state whose reduced A state has a kernel.

    Non-kernel weights are drawn from uniform(0.1, 1), keeping every
    occupied product basis vector genuinely populated.
    """
    rng = np.random.default_rng(seed)
    d_a = int(rng.integers(2, max_dim + 1))
    d_b = int(rng.integers(2, max_dim + 1))
    kernel_size = int(rng.integers(1, d_a))
    weights = np.zeros((d_a, d_b))
    weights[: d_a - kernel_size, :] = rng.uniform(0.1, 1.0, size=(d_a - kernel_size, d_b))
    weights /= weights.sum()
    rho = np.diag(weights.reshape(-1).astype(complex))
    return BipartiteState(rho=rho, d_a=d_a, d_b=d_b)


def diag_separable_full_rank(seed, max_dim=4):
    """Random diagonal-in-product-basis state with strictly positive weights."""
    rng = np.random.default_rng(seed)
    d_a = int(rng.integers(2, max_dim + 1))
    d_b = int(rng.integers(2, max_dim + 1))
    weights = rng.uniform(0.1, 1.0, size=(d_a, d_b))
    weights /= weights.sum()
    rho = np.diag(weights.reshape(-1).astype(complex))
    return BipartiteState(rho=rho, d_a=d_a, d_b=d_b)


def product_state(a_weights, b_weights):
    rho = kron(np.diag(np.asarray(a_weights, dtype=complex)),
               np.diag(np.asarray(b_weights, dtype=complex)))
    return BipartiteState(rho=rho, d_a=len(a_weights), d_b=len(b_weights))


def pure_state(amplitudes, d_a, d_b):
    """Pure BipartiteState from {(m, mt): amplitude} entries."""
    vec = np.zeros(d_a * d_b, dtype=complex)
    for (m, mt), value in amplitudes.items():
        vec[flat_index(m, mt, d_b)] = value
    vec = vec / np.linalg.norm(vec)
    return BipartiteState(rho=np.outer(vec, vec.conj()), d_a=d_a, d_b=d_b)


def bell_state():
    """The symmetric two-qubit Bell state."""
    return pure_state({(0, 0): 1.0, (1, 1): 1.0}, 2, 2)


def asymmetric_bell(weight=0.8):
    """Entangled two-qubit pure state with unequal Schmidt weights."""
    return pure_state({(0, 0): np.sqrt(weight), (1, 1): np.sqrt(1.0 - weight)}, 2, 2)


def random_unitary(seed, dim):
    """Haar-ish random unitary from the exponential of a Gaussian Hermitian."""
    from scatentropy.linalg import matexp_skew

    return matexp_skew(random_hermitian(dim, seed), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
