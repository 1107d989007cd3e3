"""invariant-forge: linear conserved-quantity discovery from noisy data.

The estimator alternates an adversarial surrogate-covariance update with a
generalized Rayleigh-quotient minimization (a self-consistent-field
iteration); the spectral module carries the full closed-form analysis of the
iteration matrix, and the rfmr module simulates a ring-lattice flow whose
conserved total density provides an end-to-end benchmark.
"""

from ._kernels import active_backend
from .errors import (
    ConditionsViolated,
    DegenerateVariance,
    InsufficientData,
    InvariantForgeError,
    NegativeDiscriminant,
    NoConvergence,
    NotInSubspace,
    NotPositiveDefinite,
    NotSymmetric,
    RegimeWarning,
    SingularCovariance,
    StateOutOfRange,
)
from .gaussmodel import (
    CovarianceTriple,
    MeasurementModel,
    SurrogateModel,
    adaptive_simpson,
    covariance_triple,
    projected_variance,
    sample_measurements,
    signal_covariance,
    tilde_sigma,
    zeta,
    zeta_normalization,
)
from .linalg import (
    DominantPair,
    EigenDecomposition,
    cholesky,
    complete_orthonormal_basis,
    dominant_pencil_eigvec,
    fix_sign,
    pencil_eig,
    sign_invariant_angle,
    sign_invariant_distance,
    spd_solve,
    sym_eig,
)
from .rfmr import NoisyDataset, RfmrSystem, Trajectory, add_noise, integrate_rk4, rfmr_derivative
from .scf import (
    EmpiricalCovariance,
    IrasConfig,
    IrasStatus,
    IrasTrace,
    empirical_covariance,
    iras_step,
    rayleigh_ratio,
    run_iras,
    run_iras_empirical,
)
from .spectral import (
    ConditionReport,
    EquilibriumSpectrum,
    OrthogonalStartSpectrum,
    PerturbedSpectrum,
    check_conditions,
    empirical_eta,
    equilibrium_spectrum,
    iteration_matrix,
    orthogonal_start_spectrum,
    perturbed_spectrum,
    spectral_action_residuals,
)

__version__ = "0.1.0"
