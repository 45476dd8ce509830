"""Conservative finite-volume time stepping for the density.

The flow is the continuity form df/dt = -Div(f u) with velocity
u = -(1/pi) grad(D log f + phi).  Writing psi = D log f + phi, the face flux
between neighbor cells a and b along axis k is

    harmonic_mean(f/pi at a, f/pi at b) * (psi_b - psi_a) / h,

and the cell update is the conservative face divergence of these fluxes.
Two structural consequences drive everything downstream: the total mass
telescopes to zero at every evaluation (mass is conserved to round-off by
any explicit stage combination), and the sampled equilibrium density makes
psi constant so the scheme is exactly stationary on it.  The harmonic mean
vanishes when either cell vanishes, which helps positivity; steps that still
produce a cell at or below the positivity floor are rejected and retried
with a halved dt rather than clipped (clipping would silently break mass
conservation).

Time stepping is explicit (forward Euler or the classical four-stage
Runge-Kutta).  The mobility is frozen at the step's start time within one
stage group; the O(dt) error this makes for time-dependent mobility is
dominated by the parabolic step restriction dt ~ h^2.

Evaluations are vectorized whole-grid numpy operations; reductions use
numpy's pairwise summation in array order, so results are bitwise
deterministic run to run for a fixed build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSet
from .errors import (
    FpkError,
    MassConservationError,
    NonPositiveDensityError,
    StiffnessError,
)
from .grid import ScalarField, VectorField, gradient_arrays, integrate

INTEGRATORS = ("explicit-euler", "rk4")

#: relative mass defect tolerated at an accepted step
MASS_TOL = 1e-12

#: rejected-step retries before declaring the problem stiff
MAX_RETRIES = 10


@dataclass(frozen=True)
class SolverState:
    """Density snapshot at one accepted time."""

    f: ScalarField
    t: float
    step_index: int


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    cfl_safety: float = 0.4
    positivity_floor: float = 0.0
    integrator: str = "rk4"
    max_steps: int = 1_000_000
    record_every: int = 10

    def __post_init__(self):
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must be in (0, 1]")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


def _potential(f_values: np.ndarray, coeffs: CoefficientSet) -> np.ndarray:
    if f_values.min() <= 0.0:
        raise NonPositiveDensityError("density has a nonpositive cell; log f undefined")
    return coeffs.D.values * np.log(f_values) + coeffs.phi.values


def compute_velocity(f: ScalarField, coeffs: CoefficientSet, t: float) -> VectorField:
    """u = -(1/pi) grad(D log f + phi), centered differences."""
    psi = _potential(f.values, coeffs)
    pi = coeffs.pi_values(t)
    comps = [-g / pi for g in gradient_arrays(psi, f.grid.spacing)]
    return VectorField(f.grid, np.stack(comps))


def _rhs_values(f_values: np.ndarray, coeffs: CoefficientSet, t: float) -> np.ndarray:
    grid = coeffs.grid
    h = grid.spacing
    psi = _potential(f_values, coeffs)
    mobility_density = f_values / coeffs.pi_values(t)
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        m_east = np.roll(mobility_density, -1, axis=k)
        face = 2.0 * mobility_density * m_east / (mobility_density + m_east)
        flux = face * (np.roll(psi, -1, axis=k) - psi) / h
        out += flux - np.roll(flux, 1, axis=k)
    out /= h
    return out


def rhs(f: ScalarField, coeffs: CoefficientSet, t: float) -> ScalarField:
    """Conservative right-hand side Div((f/pi) grad(D log f + phi))."""
    return ScalarField(f.grid, _rhs_values(f.values, coeffs, t))


def stable_dt(f: ScalarField, coeffs: CoefficientSet, t: float, cfl_safety: float) -> float:
    """Parabolic step heuristic cfl_safety * h^2 / (2 n max(D/pi))."""
    if not 0.0 < cfl_safety <= 1.0:
        raise ValueError("cfl_safety must be in (0, 1]")
    grid = coeffs.grid
    diffusivity = float((coeffs.D.values / coeffs.pi_values(t)).max())
    return cfl_safety * grid.spacing**2 / (2.0 * grid.dim * diffusivity)


def _advance(f_values: np.ndarray, coeffs: CoefficientSet, t: float, dt: float, integrator: str) -> np.ndarray:
    # the mobility is sampled at the step's start time for every stage
    if integrator == "explicit-euler":
        return f_values + dt * _rhs_values(f_values, coeffs, t)
    k1 = _rhs_values(f_values, coeffs, t)
    k2 = _rhs_values(f_values + 0.5 * dt * k1, coeffs, t)
    k3 = _rhs_values(f_values + 0.5 * dt * k2, coeffs, t)
    k4 = _rhs_values(f_values + dt * k3, coeffs, t)
    return f_values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: SolverState, coeffs: CoefficientSet, dt: float, config: SolverConfig) -> SolverState:
    """One accepted explicit step; rejects and halves dt at the positivity floor."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    floor = config.positivity_floor
    rejections = 0
    while True:
        try:
            new_values = _advance(state.f.values, coeffs, state.t, dt, config.integrator)
            fmin = float(new_values.min())
            accepted = fmin > floor if floor == 0.0 else fmin >= floor
        except NonPositiveDensityError:
            accepted = False
            fmin = float("nan")
        if accepted:
            break
        rejections += 1
        if rejections >= MAX_RETRIES:
            raise StiffnessError(
                f"{MAX_RETRIES} consecutive step rejections",
                {
                    "t": state.t,
                    "step_index": state.step_index,
                    "last_dt": dt,
                    "min_new_value": fmin,
                    "positivity_floor": floor,
                    "min_current_value": state.f.min(),
                },
            )
        dt *= 0.5

    new_f = ScalarField(state.f.grid, new_values)
    mass = integrate(new_f)
    if abs(mass - 1.0) > MASS_TOL:
        raise MassConservationError(
            f"mass {mass!r} drifted beyond {MASS_TOL:g} at step {state.step_index + 1}"
        )
    return SolverState(f=new_f, t=state.t + dt, step_index=state.step_index + 1)


def run(f0: ScalarField, coeffs: CoefficientSet, config: SolverConfig, recorder=None):
    """March from f0 to t_end (or max_steps), recording diagnostics.

    ``recorder`` maps a SolverState to a DiagnosticsRecord; records are taken
    at the initial state, every ``record_every`` accepted steps, and the
    final state.  Returns the assembled TimeSeries.
    """
    # local import: diagnostics builds on this module for velocities
    from .diagnostics import TimeSeries, make_recorder

    if f0.min() <= 0.0:
        raise NonPositiveDensityError("initial density must be strictly positive")
    mass = integrate(f0)
    if abs(mass - 1.0) > MASS_TOL:
        raise FpkError(f"initial density must have unit mass; got {mass!r}")
    if recorder is None:
        recorder = make_recorder(coeffs)

    state = SolverState(f=f0, t=0.0, step_index=0)
    records = [recorder(state)]
    last_recorded = 0
    while state.t < config.t_end and state.step_index < config.max_steps:
        dt = stable_dt(state.f, coeffs, state.t, config.cfl_safety)
        dt = min(dt, config.t_end - state.t)
        state = step(state, coeffs, dt, config)
        if state.step_index % config.record_every == 0:
            records.append(recorder(state))
            last_recorded = state.step_index
    if state.step_index != last_recorded:
        records.append(recorder(state))
    return TimeSeries(records=records, metadata={"accepted_steps": state.step_index})


__all__ = [
    "SolverState",
    "SolverConfig",
    "compute_velocity",
    "rhs",
    "stable_dt",
    "step",
    "run",
    "INTEGRATORS",
]
