"""Built-in acceptance suite: one function per criterion, frozen tolerances.

Each criterion returns (passed, details). ``tol_scale`` exists as a test
hook: it multiplies the criterion's tolerances so the CLI verify command can
demonstrate its failure path without touching the real thresholds.

Run via ``invariant-forge verify`` or through tests/test_acceptance.py.
"""

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import _rng, gaussmodel, linalg, rfmr, scf, spectral

RING_RATES = np.array([2.0, 5.0, 5.0, 0.0, 1.0])
RING_X0 = np.array([0.71, 0.9, 0.28, 0.8, 0.76])
RING_DT = 1e-3
RING_STEPS = 2000
RING_NOISE_VAR = 1e-5
RING_SURROGATE_VAR = 2e-5
RING_THETA0 = np.array([-0.12, 0.20, 0.41, 0.76, 0.45])
RING_THETA2_REFERENCE = np.array([0.46, 0.44, 0.44, 0.45, 0.44])
RING_SEEDS = (11, 23, 37, 59, 71)


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    passed: bool
    runtime: float
    details: str


def _ring_system() -> rfmr.RfmrSystem:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return rfmr.RfmrSystem(RING_RATES)


def _quiet_model(v1, sigma2) -> gaussmodel.MeasurementModel:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return gaussmodel.MeasurementModel.from_direction(v1, sigma2)


def ring_dataset_recovery(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Two-iteration recovery of the conserved direction from noisy ring data.

    KNOWN RED. The second-smallest eigenvalue of this dataset's covariance
    (~3.3e-5) sits just above the surrogate variance 2e-5, so the local
    contraction factor is r ~ -0.76 per step and two iterations stop around
    3-5 degrees from the conserved direction, outside the 3-degree /
    0.03-per-component budget. Running the same configuration to convergence
    passes both bounds with a wide margin (~0.3 degrees, ~0.014); see the
    details string. The criterion is kept at its stated iteration count.
    """
    comp_tol = 0.03 * tol_scale
    angle_tol = math.radians(3.0) * tol_scale
    budget_s = 5.0 * tol_scale
    reference = np.ones(5) / math.sqrt(5.0)
    theta0 = RING_THETA0 / np.linalg.norm(RING_THETA0)

    start = time.perf_counter()
    trajectory = rfmr.integrate_rk4(_ring_system(), RING_X0, RING_DT, RING_STEPS)
    per_seed = []
    worst_dev = 0.0
    worst_angle = 0.0
    converged_note = ""
    for seed in RING_SEEDS:
        dataset = rfmr.add_noise(trajectory, RING_NOISE_VAR, seed)
        config = scf.IrasConfig(theta0, RING_SURROGATE_VAR, max_iters=2, conv_tol=1e-15)
        trace = scf.run_iras_empirical(dataset.samples, config)
        theta2 = trace.thetas[2]
        dev = float(np.max(np.abs(theta2 - RING_THETA2_REFERENCE)))
        angle = linalg.sign_invariant_angle(theta2, reference)
        worst_dev = max(worst_dev, dev)
        worst_angle = max(worst_angle, angle)
        per_seed.append(f"seed {seed}: dev {dev:.3f}, angle {math.degrees(angle):.2f} deg")
        if seed == RING_SEEDS[0]:
            full = scf.run_iras_empirical(
                dataset.samples, scf.IrasConfig(theta0, RING_SURROGATE_VAR, max_iters=100)
            )
            converged_note = (
                f"; at convergence ({full.iterations} iters): dev "
                f"{float(np.max(np.abs(full.final - RING_THETA2_REFERENCE))):.3f}, angle "
                f"{math.degrees(full.angle_to(reference)):.2f} deg"
            )
    elapsed = time.perf_counter() - start
    passed = worst_dev <= comp_tol and worst_angle <= angle_tol and elapsed < budget_s
    details = (
        f"worst dev {worst_dev:.3f} (tol {comp_tol:.3f}), worst angle "
        f"{math.degrees(worst_angle):.2f} deg (tol {math.degrees(angle_tol):.2f}), "
        f"{elapsed:.2f}s ({'; '.join(per_seed)}){converged_note}"
    )
    return passed, details


def equilibrium_iff_bound(tol_scale: float = 1.0) -> tuple[bool, str]:
    """v1 is a one-step fixed point exactly when the surrogate std is below 1."""
    angle_tol = 1e-10 * tol_scale
    spec_tol = 1e-10 * tol_scale
    model = _quiet_model(_rng.unit_sphere_vector(_rng.generator(2024), 4), 0.01)
    sigma = gaussmodel.signal_covariance(model)
    worst_fixed = 0.0
    worst_spec = 0.0
    lost = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for sigma_bar in (0.1, 0.5, 0.9, 0.99):
            sb2 = sigma_bar * sigma_bar
            step = scf.iras_step(model.v1, sigma, sb2 * np.eye(4))
            worst_fixed = max(worst_fixed, linalg.sign_invariant_angle(step.theta, model.v1))
            report = spectral.equilibrium_spectrum(model, sb2)
            expected = np.sort(np.concatenate(([1.0], np.full(3, sb2))))[::-1]
            worst_spec = max(
                worst_spec,
                report.max_abs_diff,
                float(np.max(np.abs(report.analytic - expected))),
            )
            if not report.equilibrium:
                lost.append(f"flag wrong at {sigma_bar}")
        for sigma_bar in (1.01, 1.5):
            step = scf.iras_step(model.v1, sigma, sigma_bar**2 * np.eye(4))
            angle = linalg.sign_invariant_angle(step.theta, model.v1)
            if angle < 1.0:
                lost.append(f"fixed point survived at {sigma_bar} (angle {angle:.3f})")
            if spectral.equilibrium_spectrum(model, sigma_bar**2).equilibrium:
                lost.append(f"equilibrium flag set at {sigma_bar}")
    passed = worst_fixed <= angle_tol and worst_spec <= spec_tol and not lost
    details = (
        f"fixed-point angle {worst_fixed:.2e} (tol {angle_tol:.0e}), spectrum diff "
        f"{worst_spec:.2e} (tol {spec_tol:.0e})" + (f"; {lost}" if lost else "")
    )
    return passed, details


def one_step_from_subspace(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Starts inside the invariant hyperplane reach v1 in a single step."""
    angle_tol = 1e-9 * tol_scale
    rng = _rng.generator(3)
    model = _quiet_model(_rng.unit_sphere_vector(rng, 4), 0.01)
    sigma = gaussmodel.signal_covariance(model)
    plane = model.basis[:, 1:]
    worst = 0.0
    for _ in range(20):
        theta0 = plane @ _rng.unit_sphere_vector(rng, 3)
        theta0 /= np.linalg.norm(theta0)
        step = scf.iras_step(theta0, sigma, 0.04 * np.eye(4))
        worst = max(worst, linalg.sign_invariant_angle(step.theta, model.v1))
    return worst <= angle_tol, f"worst one-step angle {worst:.2e} (tol {angle_tol:.0e})"


def taylor_contraction(tol_scale: float = 1.0) -> tuple[bool, str]:
    """First-order tilt response matches the contraction factor r = -0.03125."""
    slope_min = 0.9 / tol_scale
    angle_tol = 1e-8 * tol_scale
    sigma2, sigma_bar2 = 0.01, 0.04
    r = spectral.check_conditions(sigma2, sigma_bar2).r
    eps_values = (1e-2, 1e-3, 1e-4)
    errors = []
    for eps in eps_values:
        w2 = spectral.perturbed_spectrum(eps, sigma2, sigma_bar2, 3).w[1]
        errors.append(abs(w2 / eps - r))
    decreasing = errors[0] > errors[1] > errors[2]
    slope = float(np.polyfit(np.log10(eps_values), np.log10(errors), 1)[0])

    model = gaussmodel.MeasurementModel.canonical(3, sigma2)
    sigma = gaussmodel.signal_covariance(model)
    worst_angle = 0.0
    all_converged = True
    for eps in eps_values:
        theta0 = np.array([1.0, eps, 0.0]) / math.sqrt(1.0 + eps * eps)
        trace = scf.run_iras(sigma, None, scf.IrasConfig(theta0, sigma_bar2))
        all_converged &= trace.status is scf.IrasStatus.CONVERGED
        worst_angle = max(worst_angle, trace.angle_to(model.v1))
    passed = decreasing and slope >= slope_min and all_converged and worst_angle <= angle_tol
    details = (
        f"r {r:.5f}, errors {[f'{e:.2e}' for e in errors]}, slope {slope:.2f} "
        f"(min {slope_min:.2f}), full-run angle {worst_angle:.2e} (tol {angle_tol:.0e})"
    )
    return passed, details


def closed_form_vs_numerical(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Closed-form eigenvalues/eigenvector match the pencil eigensolver."""
    tol = 1e-9 * tol_scale
    rng = _rng.generator(5500)
    worst_val = 0.0
    worst_vec = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(100):
            n = (3, 5, 8)[int(rng.integers(0, 3))]
            sigma = float(rng.uniform(0.0, 1.0))
            sigma2 = sigma * sigma
            sigma_bar2 = float(rng.uniform(sigma2, min(1.0, 0.5 * (1.0 + sigma2))))
            eps = float(rng.uniform(-0.3, 0.3))
            model = gaussmodel.MeasurementModel.from_direction(
                _rng.unit_sphere_vector(rng, n), sigma2
            )
            sig = gaussmodel.signal_covariance(model)
            theta0 = (model.v1 + eps * model.basis[:, 1]) / math.sqrt(1.0 + eps * eps)
            closed = spectral.perturbed_spectrum(eps, sigma2, sigma_bar2, n)
            tilde = gaussmodel.tilde_sigma(theta0, sig, sigma_bar2 * np.eye(n))
            numeric = linalg.pencil_eig(sig, tilde)
            analytic = np.sort(
                np.concatenate(([closed.lambda1, closed.lambda2], np.full(n - 2, sigma_bar2)))
            )[::-1]
            worst_val = max(worst_val, float(np.max(np.abs(analytic - numeric.eigenvalues))))
            idx = int(np.argmin(np.abs(numeric.eigenvalues - closed.lambda1)))
            worst_vec = max(
                worst_vec,
                linalg.sign_invariant_distance(
                    model.basis @ closed.w, numeric.eigenvectors[:, idx]
                ),
            )
    passed = worst_val <= tol and worst_vec <= tol
    return passed, f"worst eigenvalue diff {worst_val:.2e}, eigenvector dist {worst_vec:.2e} (tol {tol:.0e})"


def surrogate_identities(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Matching projection, determinant product, density-ratio normalization,
    and symmetry of the iteration matrix at v1, over 1000 random draws."""
    match_tol = 1e-12 * tol_scale
    det_tol = 1e-10 * tol_scale
    quad_tol = 1e-8 * tol_scale
    sym_tol = 1e-10 * tol_scale
    rng = _rng.generator(66)
    worst_match = worst_det = worst_quad = worst_sym = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(1000):
            n = int(rng.integers(2, 7))
            sigma = float(rng.uniform(0.05, 1.2))
            sigma_bar = float(rng.uniform(0.05, 1.2))
            model = gaussmodel.MeasurementModel.from_direction(
                _rng.unit_sphere_vector(rng, n), sigma * sigma
            )
            sig = gaussmodel.signal_covariance(model)
            bar = sigma_bar**2 * np.eye(n)
            theta = _rng.unit_sphere_vector(rng, n)
            tilde = gaussmodel.tilde_sigma(theta, sig, bar)
            s = gaussmodel.projected_variance(theta, sig)
            worst_match = max(
                worst_match, abs(gaussmodel.projected_variance(theta, tilde) - s)
            )
            det_expected = s * sigma_bar ** (2 * (n - 1))
            worst_det = max(
                worst_det, abs(np.linalg.det(tilde) - det_expected) / abs(det_expected)
            )
            worst_quad = max(
                worst_quad, abs(gaussmodel.zeta_normalization(s, sigma_bar**2) - 1.0)
            )
            at_v1 = gaussmodel.tilde_sigma(model.v1, sig, bar)
            worst_sym = max(worst_sym, linalg.asymmetry(linalg.spd_solve(sig, at_v1)))
    passed = (
        worst_match <= match_tol
        and worst_det <= det_tol
        and worst_quad <= quad_tol
        and worst_sym <= sym_tol
    )
    details = (
        f"projection match {worst_match:.2e} (tol {match_tol:.0e}), det rel "
        f"{worst_det:.2e} (tol {det_tol:.0e}), quadrature {worst_quad:.2e} "
        f"(tol {quad_tol:.0e}), asymmetry {worst_sym:.2e} (tol {sym_tol:.0e})"
    )
    return passed, details


def descent_and_reset(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Every recorded step resets the ratio to 1 and never increases it."""
    tol = 1e-12 * tol_scale
    runs = []
    rng = _rng.generator(7)
    model = _quiet_model(_rng.unit_sphere_vector(rng, 4), 0.01)
    sigma = gaussmodel.signal_covariance(model)
    theta0 = _rng.unit_sphere_vector(rng, 4)
    runs.append((sigma, 0.04, scf.run_iras(sigma, None, scf.IrasConfig(theta0, 0.04))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        slow = scf.run_iras(sigma, None, scf.IrasConfig(theta0, 0.81, max_iters=30))
    runs.append((sigma, 0.81, slow))

    trajectory = rfmr.integrate_rk4(_ring_system(), RING_X0, RING_DT, RING_STEPS)
    dataset = rfmr.add_noise(trajectory, RING_NOISE_VAR, RING_SEEDS[0])
    emp = scf.empirical_covariance(dataset.samples)
    theta_ring = RING_THETA0 / np.linalg.norm(RING_THETA0)
    ring_trace = scf.run_iras(
        emp.matrix, None, scf.IrasConfig(theta_ring, RING_SURROGATE_VAR, max_iters=10, conv_tol=1e-15)
    )
    runs.append((emp.matrix, RING_SURROGATE_VAR, ring_trace))

    worst_reset = 0.0
    worst_ascent = 0.0
    steps = 0
    for sigma_data, sb2, trace in runs:
        bar = sb2 * np.eye(sigma_data.shape[0])
        for prev, new in zip(trace.thetas, trace.thetas[1:]):
            tilde = gaussmodel.tilde_sigma(prev, sigma_data, bar)
            worst_reset = max(
                worst_reset, abs(scf.rayleigh_ratio(prev, sigma_data, tilde) - 1.0)
            )
            worst_ascent = max(
                worst_ascent, scf.rayleigh_ratio(new, sigma_data, tilde) - 1.0
            )
            steps += 1
    passed = worst_reset <= tol and worst_ascent <= tol
    details = (
        f"{steps} steps; reset offset {worst_reset:.2e}, max ratio excess "
        f"{worst_ascent:.2e} (tol {tol:.0e})"
    )
    return passed, details


def ring_ode_physics(tol_scale: float = 1.0) -> tuple[bool, str]:
    """Density conservation, unit-cube invariance, and 4th-order step scaling."""
    drift_tol = 1e-8 * tol_scale
    cube_tol = 1e-6 * tol_scale
    ratio_lo, ratio_hi = 8.0 * tol_scale, 32.0 * tol_scale
    system = _ring_system()
    trajectory = rfmr.integrate_rk4(system, RING_X0, RING_DT, RING_STEPS)
    totals = trajectory.states.sum(axis=1)
    drift = float(np.max(np.abs(totals - totals[0])))
    low = float(trajectory.states.min())
    high = float(trajectory.states.max())
    cube_ok = low >= -cube_tol and high <= 1.0 + cube_tol

    coarse = rfmr.integrate_rk4(system, RING_X0, 2.0, 1, substeps=40).states[-1]
    halved = rfmr.integrate_rk4(system, RING_X0, 2.0, 1, substeps=80).states[-1]
    reference = rfmr.integrate_rk4(system, RING_X0, 2.0, 1, substeps=320).states[-1]
    ratio = float(
        np.linalg.norm(coarse - reference) / np.linalg.norm(halved - reference)
    )
    passed = drift <= drift_tol and cube_ok and ratio_lo <= ratio <= ratio_hi
    details = (
        f"drift {drift:.2e} (tol {drift_tol:.0e}), range [{low:.2e}, {high:.8f}], "
        f"refinement ratio {ratio:.1f} (window [{ratio_lo:.0f}, {ratio_hi:.0f}])"
    )
    return passed, details


def empirical_consistency(tol_scale: float = 1.0) -> tuple[bool, str]:
    """1e5 samples from the analytic model: the data path finds v1 within 1 degree."""
    angle_tol = math.radians(1.0) * tol_scale
    model = _quiet_model(_rng.unit_sphere_vector(_rng.generator(99), 4), 0.01)
    samples = gaussmodel.sample_measurements(model, 100_000, seed=1234)
    theta0 = _rng.unit_sphere_vector(_rng.generator(4321), 4)
    trace = scf.run_iras_empirical(samples, scf.IrasConfig(theta0, 0.04))
    angle = trace.angle_to(model.v1)
    passed = trace.status is scf.IrasStatus.CONVERGED and angle <= angle_tol
    details = (
        f"status {trace.status.value}, {trace.iterations} iters, angle "
        f"{math.degrees(angle):.3f} deg (tol {math.degrees(angle_tol):.1f})"
    )
    return passed, details


CRITERIA = {
    "ring-dataset-recovery": ring_dataset_recovery,
    "equilibrium-iff-bound": equilibrium_iff_bound,
    "one-step-from-subspace": one_step_from_subspace,
    "taylor-contraction": taylor_contraction,
    "closed-form-vs-numerical": closed_form_vs_numerical,
    "surrogate-identities": surrogate_identities,
    "descent-and-reset": descent_and_reset,
    "ring-ode-physics": ring_ode_physics,
    "empirical-consistency": empirical_consistency,
}

CRITERION_IDS = tuple(CRITERIA)

# Documented-red criterion; see ring_dataset_recovery's docstring.
EXPECTED_FAILURES = ("ring-dataset-recovery",)


def run_criterion(cid: str, tol_scale: float = 1.0) -> CriterionResult:
    fn = CRITERIA[cid]
    start = time.perf_counter()
    try:
        passed, details = fn(tol_scale)
    except Exception as exc:
        passed, details = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(cid, passed, time.perf_counter() - start, details)


def run_all(only=None, tamper=None) -> list[CriterionResult]:
    tamper = tamper or {}
    selected = CRITERION_IDS if not only else tuple(c for c in CRITERION_IDS if c in set(only))
    return [run_criterion(cid, tamper.get(cid, 1.0)) for cid in selected]
