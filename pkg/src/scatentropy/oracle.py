"""Exact nonperturbative evolution and asymptotic coefficient extraction.

The oracle conjugates the state with the exact unitary S(lam), computes the
exact entropy change of subsystem A, and fits a lambda sweep against the
basis {lam, lam^2 ln(1/lam^2), lam^2} to recover the coefficients every
closed-form prediction is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedFit, NonUnitary, PreconditionViolated
from .linalg import as_square, max_abs
from .qstate import BipartiteState, reduced_a, von_neumann_entropy
from .smatrix import exact_s

DEFAULT_GRID = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)
UNITARITY_TOL = 1e-10
CONDITION_LIMIT = 1e8


def evolve_exact(state: BipartiteState, s) -> BipartiteState:
    """Conjugate the state by a unitary: rho_out = S rho S^dag."""
    s = as_square(s)
    defect = max_abs(s @ s.conj().T - np.eye(s.shape[0]))
    if defect > UNITARITY_TOL:
        raise NonUnitary(f"S S^dag deviates from identity by {defect:.3e}")
    if s.shape[0] != state.dim:
        raise NonUnitary(f"S dimension {s.shape[0]} does not match state dimension {state.dim}")
    rho_out = s @ state.rho @ s.conj().T
    return BipartiteState(rho=rho_out, d_a=state.d_a, d_b=state.d_b)


def exact_delta_entropy(state: BipartiteState, t1, lam: float) -> float:
    """Exact dS^A(lam) = S(reduced_a(S rho S^dag)) - S(reduced_a(rho))."""
    if not 0.0 < lam <= 0.5:
        raise PreconditionViolated(f"lam = {lam} outside (0, 0.5]")
    out = evolve_exact(state, exact_s(t1, lam))
    return von_neumann_entropy(reduced_a(out)) - von_neumann_entropy(reduced_a(state))


@dataclass(frozen=True)
class SweepFit:
    """Fitted dS(lam) ~ a*lam + b*lam^2 ln(1/lam^2) + c*lam^2 with diagnostics."""

    a: float
    b: float
    c: float
    lambda_grid: tuple[float, ...]
    delta_s: tuple[float, ...]
    residual_max: float
    condition_estimate: float

    def model(self, lam: float) -> float:
        return float(
            self.a * lam
            + self.b * lam * lam * np.log(1.0 / (lam * lam))
            + self.c * lam * lam
        )


def _design(lams: np.ndarray) -> np.ndarray:
    return np.stack([lams, lams**2 * np.log(1.0 / lams**2), lams**2], axis=1)


def sweep_and_fit(
    state: BipartiteState,
    t1,
    grid=DEFAULT_GRID,
    *,
    condition_limit: float = CONDITION_LIMIT,
) -> SweepFit:
    """Sweep the exact entropy change over a lambda grid and fit coefficients.

    The grid must be strictly decreasing with at least 6 points spanning at
    least 3 decades, all in (0, 0.1]. The fit is least squares with each row
    scaled by 1/lam^2 so every decade weighs in comparably; the condition
    number of the scaled design is reported and must stay below
    ``condition_limit`` (the two lam^2 basis functions collide on narrow
    grids).
    """
    lams = np.asarray(grid, dtype=float)
    if len(lams) < 6:
        raise PreconditionViolated("grid needs at least 6 points")
    if np.any(np.diff(lams) >= 0.0):
        raise PreconditionViolated("grid must be strictly decreasing")
    if lams[0] > 0.1 or lams[-1] <= 0.0:
        raise PreconditionViolated("grid values must lie in (0, 0.1]")
    if np.log10(lams[0] / lams[-1]) < 3.0 - 1e-9:
        raise PreconditionViolated("grid must span at least 3 decades")

    delta = np.array([exact_delta_entropy(state, t1, lam) for lam in lams])
    weights = 1.0 / lams**2
    design = _design(lams) * weights[:, None]
    condition = float(np.linalg.cond(design))
    if condition > condition_limit:
        raise IllConditionedFit(f"design condition {condition:.3e} exceeds {condition_limit:.1e}")
    coef, *_ = np.linalg.lstsq(design, delta * weights, rcond=None)
    model = _design(lams) @ coef
    residual_max = float(np.max(np.abs(delta - model)))
    return SweepFit(
        a=float(coef[0]),
        b=float(coef[1]),
        c=float(coef[2]),
        lambda_grid=tuple(float(x) for x in lams),
        delta_s=tuple(float(x) for x in delta),
        residual_max=residual_max,
        condition_estimate=condition,
    )
