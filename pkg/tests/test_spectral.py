import math
import warnings

import numpy as np
import pytest

from invariant_forge import gaussmodel, linalg, scf, spectral
from invariant_forge._rng import generator, unit_sphere_vector
from invariant_forge.errors import ConditionsViolated, NegativeDiscriminant, NotInSubspace


class TestCheckConditions:
    def test_reference_point(self):
        report = spectral.check_conditions(0.01, 0.04)
        assert report.cond_a and report.cond_b and report.equilibrium
        assert report.r == pytest.approx(-0.03125, abs=0)
        assert report.r_defined

    def test_strict_lower_boundary(self):
        assert not spectral.check_conditions(0.04, 0.04).cond_a

    def test_tiny_variances(self):
        report = spectral.check_conditions(1e-5, 2e-5)
        assert report.cond_a and report.cond_b and report.equilibrium

    def test_undefined_r_at_unit_surrogate(self):
        report = spectral.check_conditions(0.5, 1.0)
        assert not report.r_defined
        assert math.isnan(report.r)
        assert not report.equilibrium

    def test_cond_b_implies_upper_bound(self):
        rng = generator(1)
        for _ in range(200):
            sigma2 = float(rng.uniform(0.0, 1.0))
            sigma_bar2 = float(rng.uniform(sigma2, 1.0))
            report = spectral.check_conditions(sigma2, sigma_bar2)
            if report.cond_b:
                assert sigma_bar2 < 0.5 * (1.0 + sigma2) < 1.0
                assert report.cond_a  # sigma < sigma_bar here by construction

    def test_contraction_inside_window(self):
        rng = generator(2)
        for _ in range(200):
            sigma2 = float(rng.uniform(0.0, 1.0))
            sigma_bar2 = float(rng.uniform(sigma2, min(1.0, 0.5 * (1.0 + sigma2))))
            report = spectral.check_conditions(sigma2, sigma_bar2)
            if report.cond_a and report.cond_b:
                assert abs(report.r) < 1.0


class TestSpectralAction:
    def test_residuals_random_direction(self):
        model = gaussmodel.MeasurementModel.from_direction(
            unit_sphere_vector(generator(3), 4), 0.09
        )
        sigma = gaussmodel.signal_covariance(model)
        theta = unit_sphere_vector(generator(4), 4)
        residuals = spectral.spectral_action_residuals(theta, sigma, 0.25)
        assert residuals.on_theta <= 1e-10
        assert residuals.on_complement <= 1e-10

    def test_hyperplane_member_is_exact_eigenvector(self):
        # theta in span(v1, v2): v3 lies in the hyperplane and orthogonal to it
        model = gaussmodel.MeasurementModel.canonical(4, 0.09)
        sigma = gaussmodel.signal_covariance(model)
        theta = (model.basis[:, 0] + model.basis[:, 1]) / np.sqrt(2.0)
        m = spectral.iteration_matrix(sigma, 0.25 * np.eye(4), theta)
        v3 = model.basis[:, 2]
        assert np.linalg.norm(m @ v3 - 0.25 * v3) < 1e-14

    def test_action_at_v1_is_identity(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.04)
        sigma = gaussmodel.signal_covariance(model)
        m = spectral.iteration_matrix(sigma, 0.25 * np.eye(3), model.v1)
        assert np.linalg.norm(m @ model.v1 - model.v1) < 1e-13


class TestEquilibriumSpectrum:
    def test_reference_spectrum(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        report = spectral.equilibrium_spectrum(model, 0.04)
        assert np.allclose(report.analytic, [1.0, 0.04, 0.04], atol=0)
        assert report.max_abs_diff < 1e-10
        assert report.equilibrium

    def test_unit_surrogate_boundary(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = spectral.equilibrium_spectrum(model, 1.0)
        assert np.allclose(report.analytic, [1.0, 1.0, 1.0], atol=0)
        assert report.max_abs_diff < 1e-10
        assert not report.equilibrium

    def test_conjugation_and_symmetry(self):
        model = gaussmodel.MeasurementModel.from_direction(
            unit_sphere_vector(generator(5), 4), 0.01
        )
        sigma = gaussmodel.signal_covariance(model)
        m = spectral.iteration_matrix(sigma, 0.04 * np.eye(4), model.v1)
        conjugated = model.basis.T @ m @ model.basis
        assert np.max(np.abs(conjugated - np.diag([1.0, 0.04, 0.04, 0.04]))) < 1e-10
        assert spectral.equilibrium_spectrum(model, 0.04).asymmetry < 1e-10


class TestPerturbedSpectrum:
    def test_zero_tilt_base_case(self):
        ps = spectral.perturbed_spectrum(0.0, 0.01, 0.04, 3)
        assert ps.a2 == pytest.approx(-(1.0 + 0.04), abs=1e-15)
        assert ps.delta == pytest.approx((1.0 - 0.04) ** 2, abs=1e-14)
        assert ps.lambda1 == pytest.approx(1.0, abs=1e-14)
        assert ps.lambda2 == pytest.approx(0.04, abs=1e-14)
        assert ps.c_of_lambda1 == 0.0
        assert np.array_equal(ps.w, [1.0, 0.0, 0.0])

    def test_matches_numerical_eigensolver(self):
        sigma2, sb2, eps, n = 0.01, 0.04, 0.1, 3
        ps = spectral.perturbed_spectrum(eps, sigma2, sb2, n)
        model = gaussmodel.MeasurementModel.canonical(n, sigma2)
        sigma = gaussmodel.signal_covariance(model)
        theta0 = np.array([1.0, eps, 0.0]) / math.sqrt(1.0 + eps * eps)
        tilde = gaussmodel.tilde_sigma(theta0, sigma, sb2 * np.eye(n))
        eig = linalg.pencil_eig(sigma, tilde)
        analytic = np.sort([ps.lambda1, ps.lambda2, sb2])[::-1]
        assert np.max(np.abs(analytic - eig.eigenvalues)) < 1e-10
        idx = int(np.argmin(np.abs(eig.eigenvalues - ps.lambda1)))
        assert linalg.sign_invariant_distance(ps.w, eig.eigenvectors[:, idx]) < 1e-10

    def test_first_order_taylor_slope(self):
        r = spectral.check_conditions(0.01, 0.04).r
        eps_values = (1e-2, 1e-3, 1e-4)
        errors = [
            abs(spectral.perturbed_spectrum(e, 0.01, 0.04, 3).w[1] / e - r)
            for e in eps_values
        ]
        assert errors[0] > errors[1] > errors[2]
        slope = np.polyfit(np.log10(eps_values), np.log10(errors), 1)[0]
        assert slope >= 1.0

    def test_vieta_consistency(self):
        rng = generator(6)
        for _ in range(100):
            sigma2 = float(rng.uniform(0.005, 0.9))
            sb2 = float(rng.uniform(sigma2, min(1.0, 0.5 * (1.0 + sigma2))))
            eps = float(rng.uniform(-0.3, 0.3))
            ps = spectral.perturbed_spectrum(eps, sigma2, sb2, 4)
            assert ps.lambda1 * ps.lambda2 == pytest.approx(ps.a3 / ps.a1, rel=1e-12)
            assert ps.lambda1 + ps.lambda2 == pytest.approx(-ps.a2 / ps.a1, rel=1e-12)

    def test_w_confined_to_tilt_plane(self):
        ps = spectral.perturbed_spectrum(0.2, 0.01, 0.04, 6, k=4)
        outside = [i for i in range(6) if i not in (0, 3)]
        assert np.array_equal(ps.w[outside], np.zeros(4))
        assert abs(np.linalg.norm(ps.w) - 1.0) < 1e-14

    def test_relabeled_tilt_axis_matches_numerical(self):
        sigma2, sb2, eps, n, k = 0.01, 0.04, 0.15, 4, 3
        ps = spectral.perturbed_spectrum(eps, sigma2, sb2, n, k=k)
        model = gaussmodel.MeasurementModel.canonical(n, sigma2)
        sigma = gaussmodel.signal_covariance(model)
        theta0 = np.zeros(n)
        theta0[0], theta0[k - 1] = 1.0, eps
        theta0 /= np.linalg.norm(theta0)
        tilde = gaussmodel.tilde_sigma(theta0, sigma, sb2 * np.eye(n))
        eig = linalg.pencil_eig(sigma, tilde)
        idx = int(np.argmin(np.abs(eig.eigenvalues - ps.lambda1)))
        assert linalg.sign_invariant_distance(ps.w, eig.eigenvectors[:, idx]) < 1e-10

    def test_negative_discriminant_raises(self):
        # push the surrogate variance far above the window until the pair
        # of in-plane eigenvalues turns complex
        found = False
        for sb2 in np.linspace(1.5, 40.0, 200):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    spectral.perturbed_spectrum(1.0, 0.9, float(sb2), 3)
            except NegativeDiscriminant:
                found = True
                break
        assert found

    def test_determinant_of_iteration_matrix(self):
        rng = generator(7)
        for _ in range(50):
            n = int(rng.integers(2, 6))
            sigma2 = float(rng.uniform(0.01, 0.9))
            sb2 = float(rng.uniform(0.01, 0.9))
            model = gaussmodel.MeasurementModel.from_direction(
                unit_sphere_vector(rng, n), sigma2
            )
            sigma = gaussmodel.signal_covariance(model)
            theta = unit_sphere_vector(rng, n)
            m = spectral.iteration_matrix(sigma, sb2 * np.eye(n), theta)
            s = gaussmodel.projected_variance(theta, sigma)
            expected = s * sb2 ** (n - 1) / sigma2
            assert np.linalg.det(m) == pytest.approx(expected, rel=1e-9)


class TestOrthogonalStartSpectrum:
    def test_dominant_pair(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        prediction = spectral.orthogonal_start_spectrum(model.basis[:, 1], model, 0.04)
        assert prediction.dominant_value == pytest.approx(4.0, abs=1e-14)
        assert np.array_equal(prediction.dominant_vector, model.v1)

    def test_direction_inside_hyperplane_irrelevant(self):
        model = gaussmodel.MeasurementModel.canonical(4, 0.01)
        theta0 = (model.basis[:, 1] + model.basis[:, 2]) / np.sqrt(2.0)
        prediction = spectral.orthogonal_start_spectrum(theta0, model, 0.04)
        assert prediction.dominant_value == pytest.approx(4.0, abs=1e-14)

    def test_predicted_pairs_match_numerics(self):
        model = gaussmodel.MeasurementModel.from_direction(
            unit_sphere_vector(generator(8), 5), 0.01
        )
        plane = model.basis[:, 1:]
        theta0 = plane @ unit_sphere_vector(generator(9), 4)
        prediction = spectral.orthogonal_start_spectrum(theta0, model, 0.04)
        sigma = gaussmodel.signal_covariance(model)
        m = spectral.iteration_matrix(sigma, 0.04 * np.eye(5), theta0)
        for value, vector in zip(prediction.eigenvalues, prediction.eigenvectors.T):
            assert np.linalg.norm(m @ vector - value * vector) < 1e-10

    def test_window_guard(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        with pytest.raises(ConditionsViolated):
            spectral.orthogonal_start_spectrum(model.basis[:, 1], model, 0.005)

    def test_subspace_guard(self):
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        tilted = np.array([0.1, 1.0, 0.0])
        tilted /= np.linalg.norm(tilted)
        with pytest.raises(NotInSubspace):
            spectral.orthogonal_start_spectrum(tilted, model, 0.04)


class TestClosedFormVsNumericalSpectrum:
    def test_multiset_agreement(self):
        rng = generator(10)
        for _ in range(50):
            n = (3, 5, 8)[int(rng.integers(0, 3))]
            sigma2 = float(rng.uniform(0.05, 0.95)) ** 2
            sb2 = float(rng.uniform(sigma2, min(1.0, 0.5 * (1.0 + sigma2))))
            eps = float(rng.uniform(-0.3, 0.3))
            model = gaussmodel.MeasurementModel.from_direction(
                unit_sphere_vector(rng, n), sigma2
            )
            sigma = gaussmodel.signal_covariance(model)
            theta0 = (model.v1 + eps * model.basis[:, 1]) / math.sqrt(1.0 + eps * eps)
            ps = spectral.perturbed_spectrum(eps, sigma2, sb2, n)
            tilde = gaussmodel.tilde_sigma(theta0, sigma, sb2 * np.eye(n))
            numeric = linalg.pencil_eig(sigma, tilde)
            analytic = np.sort(
                np.concatenate(([ps.lambda1, ps.lambda2], np.full(n - 2, sb2)))
            )[::-1]
            assert np.max(np.abs(analytic - numeric.eigenvalues)) < 1e-9


class TestEmpiricalEta:
    def test_positive_radius_inside_window(self):
        eta = spectral.empirical_eta(0.01, 0.04)
        assert eta > 0.01

    def test_returned_tilt_converges(self):
        eta = spectral.empirical_eta(0.01, 0.04, bisection_steps=8)
        model = gaussmodel.MeasurementModel.canonical(3, 0.01)
        sigma = gaussmodel.signal_covariance(model)
        theta0 = np.array([1.0, eta, 0.0])
        theta0 /= np.linalg.norm(theta0)
        trace = scf.run_iras(sigma, None, scf.IrasConfig(theta0, 0.04, max_iters=200))
        assert trace.status is scf.IrasStatus.CONVERGED
        assert trace.angle_to(model.v1) < 1e-6

    def test_requires_condition_window(self):
        with pytest.raises(ConditionsViolated):
            spectral.empirical_eta(0.04, 0.01)
