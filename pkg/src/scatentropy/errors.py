"""Exception types shared across the package."""


class ScatentropyError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(ScatentropyError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class NoConvergence(ScatentropyError):
    """The Jacobi sweep limit was exceeded before the off-diagonal norm fell below threshold."""


class DimensionOverflow(ScatentropyError):
    """A Kronecker product would exceed the configured maximum dimension."""


class DimensionMismatch(ScatentropyError):
    """Matrix dimensions are inconsistent with the declared factor dimensions."""


class InvalidDensity(ScatentropyError):
    """Hermiticity, positivity or unit-trace invariants of a density matrix fail."""


class ConflictingAssignment(ScatentropyError):
    """A structured T-matrix element and its Hermitian conjugate were listed inconsistently."""


class BasisMismatch(ScatentropyError):
    """Spectral data and state (or operator) dimensions disagree."""


class DegeneracyLeak(ScatentropyError):
    """A perturbation-theory denominator fell inside the degeneracy tolerance,
    signalling misgrouped eigenvalue classes."""


class IllConditionedSpectrum(ScatentropyError):
    """A reduced eigenvalue sits between the kernel threshold and 1e-6, where
    the logarithmic entropy weights are unreliable."""


class PreconditionViolated(ScatentropyError):
    """A perturbative formula was invoked outside its regime of validity."""


class EnergyViolation(ScatentropyError):
    """A T-matrix element couples states that do not conserve energy."""


class NonUnitary(ScatentropyError):
    """An evolution operator is not unitary within tolerance."""


class IllConditionedFit(ScatentropyError):
    """The sweep-fit basis is too collinear on the supplied grid."""


class ConfigError(ScatentropyError):
    """A scenario file or configuration value is malformed."""
