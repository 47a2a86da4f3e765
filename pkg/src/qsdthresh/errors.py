"""Exception hierarchy for the qsdthresh package."""


class QsdThreshError(Exception):
    """Base class for all package errors."""


class InvalidInput(QsdThreshError):
    """Malformed numerical input (non-finite entries, shape mismatch, bad norm)."""


class NotDefinite(QsdThreshError):
    """A matrix required to be positive definite is not (within tolerance)."""


class SingularConjugation(QsdThreshError):
    """Congruence transform requested with a (numerically) singular matrix."""


class EmptyThreshold(QsdThreshError):
    """No eigenvalue of the overlap matrix exceeds the truncation level."""


class TooLarge(QsdThreshError):
    """Requested lattice exceeds the dense desk-scale size caps."""


class BadSector(QsdThreshError):
    """Invalid particle-number sector for the requested lattice."""


class UnknownSynthetic(QsdThreshError):
    """Unknown synthetic test-instance name."""


class ShapeError(QsdThreshError):
    """Operator/vector dimension mismatch."""


class NotToeplitz(QsdThreshError):
    """Toeplitz imputation requested for a non-equispaced time grid."""


class BoundViolation(QsdThreshError):
    """Sampled quantity exceeds the estimator's hard bound."""


class NotDefinitePair(QsdThreshError):
    """The Hermitian pair is not definite (Crawford number is nonpositive)."""


class BoundVacuous(QsdThreshError):
    """Perturbation size exceeds the Crawford number; the bound says nothing."""


class HypothesisViolated(QsdThreshError):
    """An explicit hypothesis of a bound does not hold for the given data."""


class BadAngle(QsdThreshError):
    """Opening angle of the minimax problem outside (0, pi)."""


class ConditionTooPoor(QsdThreshError):
    """Eigenangle conditioning too poor for the interval brackets to apply."""


class GapTooSmall(QsdThreshError):
    """Eigenangle gap smaller than the perturbation admits."""


class OverlapTooSmall(QsdThreshError):
    """Initial-state overlap too small for the convergence bound denominator."""


class SectorMismatch(QsdThreshError):
    """Clean and perturbed overlap matrices keep different subspace dimensions."""


class ParseError(QsdThreshError):
    """Malformed pair file or config document."""


class ValidationError(QsdThreshError):
    """Structurally valid document with semantically inconsistent content."""


class ConfigError(QsdThreshError):
    """Invalid experiment configuration."""
