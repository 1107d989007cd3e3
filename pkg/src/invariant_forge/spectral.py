"""Closed-form spectral analysis of the iteration matrix Sigma^{-1} Sigma~(theta).

For a normalized theta the iteration matrix acts as

    M(theta) theta        = s(theta) Sigma^{-1} theta,
    M(theta) theta_perp   = sigma_bar^2 Sigma^{-1} theta_perp,

so at theta = v1 the spectrum is {1, sigma_bar^2 x (n-1)}: v1 is a fixed
point of the iteration exactly when sigma_bar < 1. For a start tilted off v1
by epsilon along a basis vector v_k, the two eigenvalues outside the
sigma_bar^2 eigenspace solve

    a1 L^2 + a2 L + a3 = 0,
    a1 = (1 + e^2)^2,
    a2 = -(s^2 + e^2) (e^2 + 1/s^2 + (1 + e^2) sb^2 / s^2),
    a3 = (s^2 + e^2) (1 + e^2) sb^2 / s^2,

(s = sigma, sb = sigma_bar, e = epsilon), and the dominant eigenvector is
w = (theta0 + c(L1) theta0_perp) / ||.|| with

    c(L) = ((s^2 + e^2)/s^2 - L (1 + e^2)) / (e (1 + e^2) (L - sb^2/s^2)).

Its first-order expansion w = v1 + r e v_k + o(e) exposes the contraction
factor r = (sb^2 - s^2) / (sb^2 - 1); |r| < 1 inside the condition window.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import gaussmodel, linalg, scf
from .errors import ConditionsViolated, NegativeDiscriminant, NotInSubspace

SUBSPACE_ATOL = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    """Convergence-window flags and the contraction factor.

    cond_a: sigma^2 < sigma_bar^2 < 1 (one-step window)
    cond_b: 2 sigma_bar^2 < 1 + sigma^2 (local-contraction window)
    equilibrium: sigma_bar < 1 (v1 is a fixed point)
    r: (sigma_bar^2 - sigma^2) / (sigma_bar^2 - 1); NaN when sigma_bar^2 = 1
    """

    cond_a: bool
    cond_b: bool
    equilibrium: bool
    r: float
    r_defined: bool


@dataclass(frozen=True)
class ActionResiduals:
    """Max residuals of the two spectral-action identities."""

    on_theta: float
    on_complement: float


@dataclass(frozen=True)
class EquilibriumSpectrum:
    """Analytic vs numerical spectrum of the iteration matrix at v1."""

    analytic: np.ndarray
    numerical: np.ndarray
    max_abs_diff: float
    asymmetry: float
    equilibrium: bool


@dataclass(frozen=True)
class PerturbedSpectrum:
    """Closed-form eigenstructure for a start tilted by epsilon along v_k."""

    lambda1: float
    lambda2: float
    lambda_rest: float
    delta: float
    c_of_lambda1: float
    w: np.ndarray
    a1: float
    a2: float
    a3: float
    k: int


@dataclass(frozen=True)
class OrthogonalStartSpectrum:
    """Predicted eigenpairs when the start lies inside the invariant hyperplane."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dominant_value: float
    dominant_vector: np.ndarray


def check_conditions(sigma2: float, sigma_bar2: float) -> ConditionReport:
    if sigma2 <= 0.0 or sigma_bar2 <= 0.0:
        raise ValueError("variances must be positive")
    cond_a = sigma2 < sigma_bar2 < 1.0
    cond_b = 2.0 * sigma_bar2 < 1.0 + sigma2
    equilibrium = sigma_bar2 < 1.0
    if sigma_bar2 == 1.0:
        return ConditionReport(cond_a, cond_b, equilibrium, math.nan, False)
    r = (sigma_bar2 - sigma2) / (sigma_bar2 - 1.0)
    return ConditionReport(cond_a, cond_b, equilibrium, r, True)


def iteration_matrix(sigma, sigma_bar, theta) -> np.ndarray:
    """Assemble Sigma^{-1} Sigma~(theta) numerically (Cholesky solves)."""
    tilde = gaussmodel.tilde_sigma(theta, sigma, sigma_bar)
    return linalg.spd_solve(sigma, tilde)


def spectral_action_residuals(theta, sigma, sigma_bar2: float) -> ActionResiduals:
    """Verify the action identities on theta and a full orthonormal complement.

    Returns max over the complement of ||M theta_perp - sigma_bar^2
    Sigma^{-1} theta_perp|| alongside ||M theta - s(theta) Sigma^{-1} theta||.
    """
    t = linalg.as_normalized(theta)
    sig = linalg.check_symmetric(sigma)
    n = sig.shape[0]
    bar = sigma_bar2 * np.eye(n)
    m = iteration_matrix(sig, bar, t)
    s = gaussmodel.projected_variance(t, sig)
    on_theta = float(np.linalg.norm(m @ t - s * linalg.spd_solve(sig, t)))
    complement = linalg.complete_orthonormal_basis(t)[:, 1:]
    on_complement = 0.0
    for j in range(complement.shape[1]):
        perp = complement[:, j]
        resid = np.linalg.norm(m @ perp - sigma_bar2 * linalg.spd_solve(sig, perp))
        on_complement = max(on_complement, float(resid))
    return ActionResiduals(on_theta, on_complement)


def equilibrium_spectrum(model: gaussmodel.MeasurementModel, sigma_bar2: float) -> EquilibriumSpectrum:
    """Spectrum of the iteration matrix at theta = v1, both routes.

    Analytically it is {1, sigma_bar^2 x (n-1)}; the numerical route runs the
    pencil eigensolver on the assembled covariances. The assembled matrix is
    symmetric at v1 (and only there, in general); its relative asymmetry is
    reported as a cross-check.
    """
    if sigma_bar2 <= 0.0:
        raise ValueError("sigma_bar2 must be positive")
    n = model.n
    sigma = gaussmodel.signal_covariance(model)
    bar = sigma_bar2 * np.eye(n)
    analytic = np.sort(np.concatenate(([1.0], np.full(n - 1, sigma_bar2))))[::-1]
    tilde = gaussmodel.tilde_sigma(model.v1, sigma, bar)
    numerical = linalg.pencil_eig(sigma, tilde).eigenvalues
    asym = linalg.asymmetry(linalg.spd_solve(sigma, tilde))
    diff = float(np.max(np.abs(analytic - numerical)))
    return EquilibriumSpectrum(analytic, numerical, diff, asym, sigma_bar2 < 1.0)


def perturbed_spectrum(epsilon: float, sigma2: float, sigma_bar2: float, n: int,
                       k: int = 2) -> PerturbedSpectrum:
    """Closed-form eigenstructure for theta0 ~ v1 + epsilon v_k.

    Coordinates are the model basis (component 0 along v1, component k-1
    along v_k). The quadratic is solved in the cancellation-safe form
    q = -(a2 + sign(a2) sqrt(delta))/2, roots q/a1 and a3/q, which stays
    accurate with variances down to 1e-5. epsilon = 0 makes c(L) a 0/0; the
    analytic limit (lambda1, w) = (1, v1) is returned instead of evaluating
    it. A negative discriminant (complex pair, outside the analyzed regime)
    raises NegativeDiscriminant.
    """
    if sigma2 <= 0.0 or sigma_bar2 <= 0.0:
        raise ValueError("variances must be positive")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 2 <= k <= n:
        raise ValueError("k must be in 2..n")
    e2 = epsilon * epsilon
    inv_s2 = 1.0 / sigma2
    a1 = (1.0 + e2) ** 2
    a2 = -(sigma2 + e2) * (e2 + inv_s2 + (1.0 + e2) * sigma_bar2 * inv_s2)
    a3 = (sigma2 + e2) * (1.0 + e2) * inv_s2 * sigma_bar2
    delta = a2 * a2 - 4.0 * a1 * a3
    if delta < 0.0:
        raise NegativeDiscriminant(f"discriminant {delta:.3e} < 0: complex eigenvalue pair")
    q = -0.5 * (a2 + math.copysign(math.sqrt(delta), a2))
    roots = (q / a1, a3 / q)
    lambda1, lambda2 = max(roots), min(roots)

    w = np.zeros(n)
    if epsilon == 0.0:
        c1 = 0.0
        w[0] = 1.0
    else:
        c1 = ((sigma2 + e2) * inv_s2 - lambda1 * (1.0 + e2)) / (
            epsilon * (1.0 + e2) * (lambda1 - sigma_bar2 * inv_s2)
        )
        scale = math.sqrt((1.0 + epsilon * c1) ** 2 + (epsilon - c1) ** 2)
        w[0] = (1.0 + epsilon * c1) / scale
        w[k - 1] = (epsilon - c1) / scale
    return PerturbedSpectrum(lambda1, lambda2, sigma_bar2, delta, c1, w, a1, a2, a3, k)


def orthogonal_start_spectrum(theta0, model: gaussmodel.MeasurementModel,
                              sigma_bar2: float) -> OrthogonalStartSpectrum:
    """Predicted eigenpairs for a start inside the invariant hyperplane.

    They are (sigma_bar^2 / sigma^2, v1), (1, theta0) and sigma_bar^2 on the
    rest of the hyperplane, so inside the one-step window v1 dominates and a
    single iteration lands on it.
    """
    t = linalg.as_normalized(theta0)
    if abs(float(np.dot(model.v1, t))) > SUBSPACE_ATOL:
        raise NotInSubspace("theta0 has a component along v1")
    sigma2 = model.sigma2
    if not sigma2 < sigma_bar2 < 1.0:
        raise ConditionsViolated(
            f"need sigma^2 < sigma_bar^2 < 1, got {sigma2:g}, {sigma_bar2:g}"
        )
    n = model.n
    values = [sigma_bar2 / sigma2, 1.0]
    vectors = [model.v1, t]
    if n > 2:
        # remaining eigenvectors span the hyperplane minus theta0: build them
        # in hyperplane coordinates so they stay exactly orthonormal
        plane = model.basis[:, 1:]
        d = plane.T @ t
        d /= np.linalg.norm(d)
        rest = plane @ linalg.complete_orthonormal_basis(d)[:, 1:]
        for j in range(rest.shape[1]):
            values.append(sigma_bar2)
            vectors.append(rest[:, j])
    eigenvalues = np.array(values)
    eigenvectors = np.column_stack(vectors)
    return OrthogonalStartSpectrum(eigenvalues, eigenvectors, eigenvalues[0], model.v1)


def empirical_eta(sigma2: float, sigma_bar2: float, n: int = 3, k: int = 2,
                  bisection_steps: int = 20, angle_tol: float = 1e-6,
                  max_iters: int = 200) -> float:
    """Bisection estimate of the largest tilt that still converges to v1.

    Purely empirical: the local-convergence result guarantees SOME positive
    radius but does not quantify it, so this probes epsilon by running the
    full iteration on the canonical model and bisecting 20 times between the
    largest convergent and smallest non-convergent tilt seen.
    """
    report = check_conditions(sigma2, sigma_bar2)
    if not (report.cond_a and report.cond_b):
        raise ConditionsViolated("empirical_eta requires both condition flags")
    model = gaussmodel.MeasurementModel.canonical(n, sigma2)
    sigma = gaussmodel.signal_covariance(model)

    def converges(eps: float) -> bool:
        theta0 = np.zeros(n)
        theta0[0] = 1.0
        theta0[k - 1] = eps
        theta0 /= np.linalg.norm(theta0)
        config = scf.IrasConfig(theta0, sigma_bar2, max_iters=max_iters)
        trace = scf.run_iras(sigma, None, config)
        return (
            trace.status is scf.IrasStatus.CONVERGED
            and trace.angle_to(model.v1) < angle_tol
        )

    lo, hi = 0.0, 1.0
    if converges(hi):
        return hi
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return lo
