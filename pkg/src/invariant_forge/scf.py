"""Variance-ratio minimization by self-consistent-field iteration.

Each step builds the adversarially updated surrogate covariance for the
previous direction estimate and takes the new estimate to be the dominant
eigenvector of Sigma^{-1} Sigma~(theta_prev) - equivalently the minimizer of
the generalized Rayleigh quotient theta' Sigma theta / theta' Sigma~ theta.
By construction the quotient is exactly 1 at theta_prev, so every accepted
step is a descent step.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import gaussmodel, linalg
from .errors import DegenerateVariance, InsufficientData, NotPositiveDefinite, SingularCovariance


class IrasStatus(Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class IrasConfig:
    theta0: np.ndarray
    sigma_bar2: float
    max_iters: int = 100
    conv_tol: float = 1e-9
    record_ratios: bool = True

    def __post_init__(self):
        object.__setattr__(self, "theta0", linalg.as_normalized(self.theta0))
        if self.sigma_bar2 <= 0.0:
            raise ValueError("sigma_bar2 must be positive")
        if self.conv_tol <= 0.0:
            raise ValueError("conv_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IrasTrace:
    """One run: all accepted directions, their ratios, and how it stopped."""

    thetas: list[np.ndarray] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    status: IrasStatus = IrasStatus.MAX_ITERS
    iterations: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.thetas[-1]

    def angle_to(self, reference) -> float:
        return linalg.sign_invariant_angle(self.final, reference)


@dataclass(frozen=True)
class EmpiricalCovariance:
    mean: np.ndarray
    matrix: np.ndarray
    count: int


@dataclass(frozen=True)
class StepResult:
    theta: np.ndarray
    value: float
    gap: float
    degenerate: bool


def rayleigh_ratio(theta, sigma_data, sigma_tilde) -> float:
    """(theta' Sigma theta) / (theta' Sigma~ theta); scale invariant in theta."""
    num = gaussmodel.projected_variance(theta, sigma_data)
    den = gaussmodel.projected_variance(theta, sigma_tilde)
    if den == 0.0:
        raise DegenerateVariance("zero denominator in variance ratio")
    return num / den


def iras_step(theta_prev, sigma_data, sigma_bar) -> StepResult:
    """One iteration: adversarial surrogate update, then the eigenproblem."""
    tilde = gaussmodel.tilde_sigma(theta_prev, sigma_data, sigma_bar)
    dom = linalg.dominant_pencil_eigvec(sigma_data, tilde)
    return StepResult(dom.vector, dom.value, dom.gap, dom.degenerate)


def run_iras(sigma_data, sigma_bar, config: IrasConfig) -> IrasTrace:
    """Iterate until the sign-invariant step distance drops below conv_tol.

    ``sigma_bar`` may be None, in which case the isotropic surrogate
    ``config.sigma_bar2 * I`` is used. The sign-invariant distance
    min(||a - b||, ||a + b||) is the right metric here: a negative
    contraction factor makes the transverse component alternate sign, which
    a plain difference would never see converge. A vanishing spectral gap
    stops the run with DEGENERATE rather than accepting an arbitrary vector
    from the dominant eigenspace.
    """
    sigma_data = linalg.check_symmetric(sigma_data)
    n = sigma_data.shape[0]
    if sigma_bar is None:
        sigma_bar = config.sigma_bar2 * np.eye(n)
    else:
        sigma_bar = linalg.check_symmetric(sigma_bar)

    theta = config.theta0.copy()
    trace = IrasTrace(thetas=[theta])
    for i in range(config.max_iters):
        tilde = gaussmodel.tilde_sigma(theta, sigma_data, sigma_bar)
        if config.record_ratios and i == 0:
            trace.ratios.append(rayleigh_ratio(theta, sigma_data, tilde))
        dom = linalg.dominant_pencil_eigvec(sigma_data, tilde)
        if dom.degenerate:
            trace.status = IrasStatus.DEGENERATE
            return trace
        new = dom.vector
        trace.iterations += 1
        trace.thetas.append(new)
        if config.record_ratios:
            trace.ratios.append(rayleigh_ratio(new, sigma_data, tilde))
        if linalg.sign_invariant_distance(new, theta) < config.conv_tol:
            trace.status = IrasStatus.CONVERGED
            return trace
        theta = new
    trace.status = IrasStatus.MAX_ITERS
    return trace


def empirical_covariance(samples) -> EmpiricalCovariance:
    """Sample mean and unbiased (N-1) covariance, verified positive definite."""
    z = np.asarray(samples, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("samples must be a 2-D array, one row per draw")
    count, n = z.shape
    if count <= n:
        raise InsufficientData(f"need more than {n} samples, got {count}")
    mean = z.mean(axis=0)
    centered = z - mean
    cov = centered.T @ centered / (count - 1)
    cov = 0.5 * (cov + cov.T)
    try:
        linalg.cholesky(cov)
    except NotPositiveDefinite as exc:
        raise SingularCovariance("sample covariance is not positive definite") from exc
    return EmpiricalCovariance(mean, cov, count)


def run_iras_empirical(samples, config: IrasConfig) -> IrasTrace:
    """Data path: centered sample covariance as Sigma, isotropic surrogate.

    The surrogate covariance is never re-estimated from data; it is always
    the configured sigma_bar^2 * I in the centered coordinates.
    """
    emp = empirical_covariance(samples)
    return run_iras(emp.matrix, config.sigma_bar2 * np.eye(emp.matrix.shape[0]), config)
