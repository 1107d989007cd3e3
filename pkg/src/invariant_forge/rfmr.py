"""Ribosome flow model on a ring: ODE, RK4 integration, noisy sampling.

n sites on a circular lattice, density x_i in [0, 1]. The flow from site i
to site i+1 is rates[i] * x_i * (1 - x_{i+1}), indices modulo n, so

    dx_i/dt = rates[i-1] x_{i-1} (1 - x_i) - rates[i] x_i (1 - x_{i+1}).

Nothing enters or leaves the ring: the total density 1' x is a linear first
integral, which makes the model the canonical test bed for the estimator in
this package. Runge-Kutta schemes preserve linear first integrals exactly,
so conservation drift in a trajectory measures pure roundoff.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels, _rng
from .errors import RegimeWarning, StateOutOfRange

STATE_BOUND_SLACK = 1e-6
STORED_STATE_SLACK = 1e-9
CONSERVATION_ATOL = 1e-8
MAX_RATE_PER_STEP = 0.1


@dataclass(frozen=True)
class RfmrSystem:
    """Site transition rates; rates[i] feeds site i+1 (mod n)."""

    rates: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=np.float64)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("need at least 2 sites")
        if np.any(r < 0.0):
            raise ValueError("rates must be nonnegative")
        if np.any(r == 0.0):
            warnings.warn(
                "zero transition rate: site outflow is frozen; the model is "
                "usually stated with strictly positive rates",
                RegimeWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "rates", r)

    @property
    def n(self) -> int:
        return self.rates.size


@dataclass(frozen=True)
class Trajectory:
    """States sampled every ``dt``; row k is x(k * dt), row 0 the start."""

    dt: float
    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("states must be a non-empty 2-D array")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if np.min(s) < -STORED_STATE_SLACK or np.max(s) > 1.0 + STORED_STATE_SLACK:
            raise ValueError("stored states must lie in [-1e-9, 1 + 1e-9]")
        totals = s.sum(axis=1)
        if np.max(np.abs(totals - totals[0])) > CONSERVATION_ATOL:
            raise ValueError("total density drifted by more than 1e-8")
        object.__setattr__(self, "states", s)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.states.shape[0])

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class NoisyDataset:
    """Trajectory samples k = 1..N with additive Gaussian measurement noise."""

    samples: np.ndarray
    sigma2: float
    seed: int


def rfmr_derivative(x, system: RfmrSystem) -> np.ndarray:
    xs = np.asarray(x, dtype=np.float64)
    if xs.shape != (system.n,):
        raise ValueError(f"state must have shape ({system.n},)")
    return _kernels.ring_deriv(system.rates, xs)


def integrate_rk4(system: RfmrSystem, x0, dt: float, steps: int,
                  substeps: int | None = None) -> Trajectory:
    """Integrate and record the state every ``dt``.

    The internal step h = dt / substeps is chosen so h * max(rates) <= 0.1
    unless ``substeps`` overrides it (the override exists for step-size
    studies). Raises StateOutOfRange if a component leaves
    [-1e-6, 1 + 1e-6]: that signals the step size failed, not model behavior,
    since the exact flow keeps the cube invariant.
    """
    x = np.asarray(x0, dtype=np.float64)
    if x.shape != (system.n,):
        raise ValueError(f"x0 must have shape ({system.n},)")
    if np.min(x) < 0.0 or np.max(x) > 1.0:
        raise ValueError("x0 must lie componentwise in [0, 1]")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if substeps is None:
        max_rate = float(np.max(system.rates))
        substeps = max(1, math.ceil(dt * max_rate / MAX_RATE_PER_STEP))
    elif substeps < 1:
        raise ValueError("substeps must be >= 1")
    states, bad = _kernels.rk4_ring(
        system.rates, x, float(dt), int(steps), int(substeps),
        -STATE_BOUND_SLACK, 1.0 + STATE_BOUND_SLACK,
    )
    if bad >= 0:
        raise StateOutOfRange(
            f"state left [-1e-6, 1+1e-6] during interval {bad}; reduce the step size"
        )
    return Trajectory(float(dt), states)


def add_noise(trajectory: Trajectory, sigma2: float, seed: int) -> NoisyDataset:
    """z_k = x(k dt) + noise for k = 1..steps, noise iid N(0, sigma2 I)."""
    if sigma2 < 0.0:
        raise ValueError("sigma2 must be nonnegative")
    clean = trajectory.states[1:]
    if sigma2 == 0.0:
        return NoisyDataset(clean.copy(), 0.0, seed)
    rng = _rng.generator(seed)
    noise = _rng.standard_normals(rng, clean.size).reshape(clean.shape)
    return NoisyDataset(clean + math.sqrt(sigma2) * noise, float(sigma2), seed)
