"""Exception and warning types shared across the package."""


class InvariantForgeError(Exception):
    """Base class for every error raised by this package."""


class NotSymmetric(InvariantForgeError):
    """Matrix fails the relative symmetry tolerance."""


class NotPositiveDefinite(InvariantForgeError):
    """Cholesky pivot fell at or below the relative floor."""


class NoConvergence(InvariantForgeError):
    """Iterative eigensolver hit its sweep cap before the off-diagonal target."""


class DegenerateVariance(InvariantForgeError):
    """A projected variance is too close to zero to divide by."""


class InsufficientData(InvariantForgeError):
    """Fewer samples than needed for a full-rank covariance estimate."""


class SingularCovariance(InvariantForgeError):
    """Sample covariance is not positive definite."""


class NegativeDiscriminant(InvariantForgeError):
    """Closed-form eigenvalue pair is complex; outside the analyzed regime."""


class NotInSubspace(InvariantForgeError):
    """Start vector has a component along the invariant direction."""


class ConditionsViolated(InvariantForgeError):
    """Variance parameters fall outside the window the prediction requires."""


class StateOutOfRange(InvariantForgeError):
    """Integrator state left the admissible box; the step size failed."""


class RegimeWarning(UserWarning):
    """Parameters lie outside the regime the convergence analysis assumes."""
