"""Gaussian signal+noise measurement model and the adversarial surrogate.

Measurements decompose over an orthonormal basis (v1, ..., vn): the
coefficient along v1 is N(0, sigma^2) noise, the coefficients inside the
invariant hyperplane are N(0, 1). The signal covariance is therefore

    Sigma = sigma^2 v1 v1' + sum_{i>=2} vi vi' = I + (sigma^2 - 1) v1 v1'.

The surrogate starts isotropic (sigma_bar^2 I) and each adversarial update
reshapes it so that its variance projected on the current direction theta
matches the data's:

    Sigma~(theta) = Sigma_bar
        - (s_bar(theta)^{-1} - s_bar(theta)^{-2} s(theta)) Sigma_bar theta theta' Sigma_bar,

with s(theta) = theta' Sigma theta and s_bar(theta) = theta' Sigma_bar theta.
The update is always applied to the ORIGINAL surrogate covariance, never
composed with earlier updates.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _rng, linalg
from .errors import DegenerateVariance, RegimeWarning

VARIANCE_FLOOR = 1e-300
BASIS_ORTHO_RTOL = 1e-10


def _warn_regime(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        warnings.warn(
            f"{name}={value:g} outside (0, 1); the convergence analysis assumes "
            "noise variance below the unit signal variance",
            RegimeWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class MeasurementModel:
    """Invariant direction v1, orthonormal basis (first column v1), noise variance."""

    v1: np.ndarray
    basis: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "v1", linalg.as_normalized(self.v1))
        object.__setattr__(self, "basis", linalg.as_square(self.basis))
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        gram = self.basis.T @ self.basis
        if np.max(np.abs(gram - np.eye(self.n))) > BASIS_ORTHO_RTOL:
            raise ValueError("basis columns are not orthonormal to 1e-10")
        if np.max(np.abs(self.basis[:, 0] - self.v1)) > linalg.NORMALIZED_ATOL:
            raise ValueError("first basis column must equal v1")
        _warn_regime("sigma2", self.sigma2)

    @property
    def n(self) -> int:
        return self.v1.size

    @classmethod
    def from_direction(cls, v1, sigma2: float) -> "MeasurementModel":
        v = linalg.as_normalized(v1)
        return cls(v, linalg.complete_orthonormal_basis(v), float(sigma2))

    @classmethod
    def canonical(cls, n: int, sigma2: float) -> "MeasurementModel":
        """Model with v1 = e1 and the standard basis."""
        e1 = np.zeros(n)
        e1[0] = 1.0
        return cls(e1, np.eye(n), float(sigma2))


@dataclass(frozen=True)
class SurrogateModel:
    """Isotropic surrogate: covariance sigma_bar^2 I around ``mean`` (default 0)."""

    sigma_bar2: float
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma_bar2 <= 0.0:
            raise ValueError("sigma_bar2 must be positive")
        if self.mean is not None:
            object.__setattr__(self, "mean", linalg.as_vector(self.mean))
        _warn_regime("sigma_bar2", self.sigma_bar2)

    def covariance(self, n: int) -> np.ndarray:
        return self.sigma_bar2 * np.eye(n)


@dataclass(frozen=True)
class CovarianceTriple:
    """Sigma, Sigma_bar and the adversarial Sigma~(theta) for one direction."""

    sigma: np.ndarray
    sigma_bar: np.ndarray
    sigma_tilde: np.ndarray
    theta: np.ndarray

    @property
    def s(self) -> float:
        return projected_variance(self.theta, self.sigma)

    @property
    def s_bar(self) -> float:
        return projected_variance(self.theta, self.sigma_bar)


def signal_covariance(model: MeasurementModel) -> np.ndarray:
    """Sigma = I + (sigma^2 - 1) v1 v1'; depends on v1 and sigma^2 only."""
    v1 = model.v1
    return np.eye(model.n) + (model.sigma2 - 1.0) * np.outer(v1, v1)


def sample_measurements(model: MeasurementModel, count: int, seed: int) -> np.ndarray:
    """Rows are draws z = sum_i c_i v^i, c_1 ~ N(0, sigma^2), c_i ~ N(0, 1).

    Bit-identical for a fixed seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _rng.generator(seed)
    coeffs = _rng.standard_normals(rng, count * model.n).reshape(count, model.n)
    coeffs[:, 0] *= math.sqrt(model.sigma2)
    return coeffs @ model.basis.T


def projected_variance(theta, matrix) -> float:
    """theta' M theta."""
    t = np.asarray(theta, dtype=np.float64)
    return float(t @ np.asarray(matrix, dtype=np.float64) @ t)


def zeta(x, s: float, s_bar: float):
    """Density ratio of the two projected Gaussians at x.

    zeta(x) = sqrt(s_bar/s) * exp(-x^2 (1/s - 1/s_bar) / 2); reweighting the
    surrogate by it matches the projected variance along the current theta.
    For s > s_bar the ratio grows without bound in x and saturates to inf
    once it leaves float range.
    """
    if s <= VARIANCE_FLOOR or s_bar <= VARIANCE_FLOOR:
        raise DegenerateVariance("projected variances must exceed 1e-300")
    xx = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = math.sqrt(s_bar / s) * np.exp(-0.5 * xx * xx * (1.0 / s - 1.0 / s_bar))
    if np.isscalar(x) or xx.ndim == 0:
        return float(out)
    return out


def tilde_sigma(theta, sigma, sigma_bar) -> np.ndarray:
    """Adversarially updated surrogate covariance for direction theta.

    For an isotropic surrogate this reduces to
    sigma_bar^2 I - (sigma_bar^2 - theta' Sigma theta) theta theta'.
    """
    t = linalg.as_normalized(theta)
    sig = linalg.check_symmetric(sigma)
    bar = linalg.check_symmetric(sigma_bar)
    s = projected_variance(t, sig)
    s_bar = projected_variance(t, bar)
    if s_bar <= VARIANCE_FLOOR:
        raise DegenerateVariance("theta' Sigma_bar theta must exceed 1e-300")
    bt = bar @ t
    return bar - (1.0 / s_bar - s / (s_bar * s_bar)) * np.outer(bt, bt)


def covariance_triple(model: MeasurementModel, surrogate: SurrogateModel, theta) -> CovarianceTriple:
    sig = signal_covariance(model)
    bar = surrogate.covariance(model.n)
    return CovarianceTriple(sig, bar, tilde_sigma(theta, sig, bar), linalg.as_normalized(theta))


def gaussian_pdf(x: float, variance: float) -> float:
    return math.exp(-0.5 * x * x / variance) / math.sqrt(2.0 * math.pi * variance)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with the classic 1/15 error estimate."""

    def _simpson(lo, flo, hi, fhi, fmid):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def _recurse(lo, mid, hi, flo, fmid, fhi, whole, tol_here, depth):
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm = f(lmid)
        frm = f(rmid)
        left = _simpson(lo, flo, mid, fmid, flm)
        right = _simpson(mid, fmid, hi, fhi, frm)
        err = left + right - whole
        # a non-finite estimate cannot be improved by splitting
        if depth >= max_depth or not math.isfinite(err) or abs(err) <= 15.0 * tol_here:
            return left + right + err / 15.0
        return _recurse(lo, lmid, mid, flo, flm, fmid, left, 0.5 * tol_here, depth + 1) + _recurse(
            mid, rmid, hi, fmid, frm, fhi, right, 0.5 * tol_here, depth + 1
        )

    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = _simpson(a, fa, b, fb, fm)
    return _recurse(a, mid, b, fa, fm, fb, whole, tol, 0)


def zeta_normalization(s: float, s_bar: float, tol: float = 1e-10) -> float:
    """Quadrature of zeta(x) * pdf of the projected surrogate; equals 1.

    The domain is +/- 12 standard deviations of the wider of the two
    Gaussians (tails below 1e-30 outside). The product is assembled in log
    space: for s > s_bar the ratio factor alone overflows where the
    surrogate pdf underflows, and inf * 0 would poison the quadrature.
    """
    if s <= VARIANCE_FLOOR or s_bar <= VARIANCE_FLOOR:
        raise DegenerateVariance("projected variances must exceed 1e-300")
    half = 12.0 * math.sqrt(max(s, s_bar))
    log_ratio_scale = 0.5 * math.log(s_bar / s)
    log_pdf_scale = -0.5 * math.log(2.0 * math.pi * s_bar)
    rate = 0.5 * (1.0 / s - 1.0 / s_bar)

    def integrand(x: float) -> float:
        log_zeta = log_ratio_scale - x * x * rate
        log_pdf = log_pdf_scale - 0.5 * x * x / s_bar
        return math.exp(log_zeta + log_pdf)

    return adaptive_simpson(integrand, -half, half, tol)
