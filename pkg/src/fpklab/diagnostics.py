"""Functionals tracked along trajectories.

Free energy F[f] = int D f (log f - 1) + f phi and its dissipation rate
D_dis = int pi |u|^2 f are the primary pair (dF/dt = -D_dis along solutions).
On top of those this module evaluates:

* pointwise maximum-principle envelopes built from f0, the equilibrium
  density, and D, plus containment margins along a trajectory;
* the pointwise divergence bound |Div u|^2 <= n |grad u|^2;
* the second time derivative of the free energy, broken into named integral
  terms (2 terms when D and pi are constant, 7 with spatial D, 13 with a
  variable mobility), so the identity can be checked against a centered
  time difference of -D_dis;
* empirical density-weighted Sobolev and Poincare ratios, interpolation
  margins for the cubic velocity moment, and exponential decay fits.

All integrals use midpoint quadrature on cell centers, consistent with the
grid module.  Every derivative here is a centered difference; the solver's
face stencil is intentionally different.

The weighted Sobolev/Poincare constants in the decay conditions are not
constructive, so by default the running maxima of the empirical ratios stand
in for them; a user-supplied certified value can replace either.  The
exponent p* is fixed at 6 in all dimensions (one code path), and the
weighted-denominator variant exposes its epsilon with default 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet
from .errors import (
    NonPositiveDensityError,
    TooShortSeriesError,
    UndefinedRatioError,
    WrongRegimeError,
)
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    centered_hessian,
    gradient_arrays,
    integrate,
)
from .solver import SolverState, compute_velocity

MODES = ("homogeneous", "inhomogeneous-D", "full")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    free_energy: float
    dissipation: float
    f_min: float
    f_max: float
    log_f_sup: float
    u_sup: float
    envelope_violation: float
    jensen_margin: float


@dataclass(frozen=True)
class TimeSeries:
    """Ordered diagnostics records with strictly increasing times."""

    records: list[DiagnosticsRecord]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = [r.t for r in self.records]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("record times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class TermBreakdown:
    """Named integrals of the d^2F/dt^2 identity, in textual order."""

    mode: str
    terms: dict[str, float]
    sum: float


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through (t, log dissipation)."""

    rate: float
    log_intercept: float
    window: tuple[float, float]
    residual_rms: float
    n_points: int


def _cell_integral(grid: Grid, integrand: np.ndarray) -> float:
    return grid.cell_volume * float(integrand.sum())


def free_energy(f: ScalarField, coeffs: CoefficientSet) -> float:
    """int D f (log f - 1) + f phi."""
    v = f.values
    if v.min() <= 0.0:
        raise NonPositiveDensityError("density has a nonpositive cell; log f undefined")
    integrand = coeffs.D.values * v * (np.log(v) - 1.0) + v * coeffs.phi.values
    return _cell_integral(f.grid, integrand)


def _dissipation_from_velocity(
    f: ScalarField, coeffs: CoefficientSet, t: float, u: VectorField
) -> float:
    speed_sq = np.sum(u.components**2, axis=0)
    return _cell_integral(f.grid, coeffs.pi_values(t) * speed_sq * f.values)


def dissipation(f: ScalarField, coeffs: CoefficientSet, t: float) -> float:
    """int pi |u|^2 f  (nonnegative; zero exactly at equilibrium)."""
    return _dissipation_from_velocity(f, coeffs, t, compute_velocity(f, coeffs, t))


def energy_law_residual(series: TimeSeries) -> np.ndarray:
    """Centered check of dF/dt = -D_dis at each interior record.

    residual_i = (F(t_{i+1}) - F(t_{i-1})) / (t_{i+1} - t_{i-1}) + D_dis(t_i)
    """
    if len(series) < 3:
        raise TooShortSeriesError("need at least 3 records for the energy-law residual")
    t = series.column("t")
    fe = series.column("free_energy")
    dis = series.column("dissipation")
    return (fe[2:] - fe[:-2]) / (t[2:] - t[:-2]) + dis[1:-1]


def max_principle_envelope(
    f0: ScalarField, feq: ScalarField, coeffs: CoefficientSet
) -> tuple[ScalarField, ScalarField]:
    """Time-independent pointwise bounds exp(m/D) feq <= f <= exp(M/D) feq,

    with m and M the extrema over cells of D log(f0/feq).  By construction
    the initial density sits between the two envelopes.
    """
    ratio = coeffs.D.values * np.log(f0.values / feq.values)
    m = float(ratio.min())
    big_m = float(ratio.max())
    lower = np.exp(m / coeffs.D.values) * feq.values
    upper = np.exp(big_m / coeffs.D.values) * feq.values
    grid = f0.grid
    return ScalarField(grid, lower), ScalarField(grid, upper)


def envelope_margin(f: ScalarField, envelope: tuple[ScalarField, ScalarField]) -> float:
    """Worst signed containment margin min(f - lower, upper - f) over cells."""
    lower, upper = envelope
    return float(np.minimum(f.values - lower.values, upper.values - f.values).min())


def check_envelope(states, envelope: tuple[ScalarField, ScalarField]) -> float:
    """Worst margin over a collection of ScalarFields (pass iff >= -1e-8)."""
    return min(envelope_margin(f, envelope) for f in states)


def _jacobian(u: VectorField) -> np.ndarray:
    """J[k, l] = d u_k / d x_l by centered differences; shape (n, n, ...)."""
    h = u.grid.spacing
    n = u.grid.dim
    rows = [np.stack(gradient_arrays(u.components[k], h)) for k in range(n)]
    return np.stack(rows)


def jensen_check(u: VectorField, grid: Grid | None = None) -> float:
    """min over cells of n |grad u|^2 - |Div u|^2 (nonnegative to round-off)."""
    grid = grid or u.grid
    jac = _jacobian(u)
    grad_sq = np.sum(jac**2, axis=(0, 1))
    div = np.trace(jac, axis1=0, axis2=1)
    return float((grid.dim * grad_sq - div**2).min())


_FULL_TERM_NAMES = (
    "hessian_phi",
    "d_grad_u_sq",
    "logf_gradDu_sq_cross",
    "divu_cross",
    "cubic_logf",
    "gradD_sq_logf_sq",
    "gradD_gradPhi_cross",
    "pi_t",
    "cubic_gradPi",
    "gradPi_gradD",
    "gradPi_gradD_directional",
    "grad_usq_gradPi",
    "jacobian_u_gradPi",
)


def second_derivative_terms(
    f: ScalarField, coeffs: CoefficientSet, t: float, mode: str
) -> TermBreakdown:
    """Evaluate the named integrals of d^2F/dt^2 for the requested regime.

    ``homogeneous`` (constant D and pi) has 2 terms, ``inhomogeneous-D``
    (constant pi) 7, ``full`` 13.  All derivatives are centered differences;
    grad|u|^2 is the centered gradient of the sampled speed-squared field.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "homogeneous" and not (coeffs.d_is_constant and coeffs.pi_is_constant):
        raise WrongRegimeError("homogeneous mode requires constant D and constant pi")
    if mode == "inhomogeneous-D" and not coeffs.pi_is_constant:
        raise WrongRegimeError("inhomogeneous-D mode requires constant pi")

    grid = f.grid
    fv = f.values
    log_f = np.log(fv)
    u = compute_velocity(f, coeffs, t)
    uc = u.components
    jac = _jacobian(u)
    grad_u_sq = np.sum(jac**2, axis=(0, 1))
    div_u = np.trace(jac, axis1=0, axis2=1)
    speed_sq = np.sum(uc**2, axis=0)
    hess_phi = centered_hessian(coeffs.phi)
    hess_u = np.einsum("kl...,l...->k...", hess_phi, uc)
    d = coeffs.D.values

    def quad(x: np.ndarray) -> float:
        return _cell_integral(grid, x * fv)

    terms: dict[str, float] = {}
    terms["hessian_phi"] = 2.0 * quad(np.sum(hess_u * uc, axis=0))
    terms["d_grad_u_sq"] = 2.0 * quad(d * grad_u_sq)

    if mode != "homogeneous":
        grad_d = coeffs.grad_D.components
        grad_phi = coeffs.grad_phi.components
        u_dot_grad_d = np.sum(uc * grad_d, axis=0)
        u_dot_grad_phi = np.sum(uc * grad_phi, axis=0)
        grad_speed_sq = np.stack(gradient_arrays(speed_sq, grid.spacing))
        pi_now = coeffs.pi_values(t)

        terms["logf_gradDu_sq_cross"] = -quad(
            (log_f - 1.0) * np.sum(grad_speed_sq * grad_d, axis=0)
        )
        terms["divu_cross"] = -2.0 * quad((1.0 + log_f) * u_dot_grad_d * div_u)
        # with constant pi the pi/D weight reduces to the constant over D
        terms["cubic_logf"] = 2.0 * quad((pi_now / d) * speed_sq * log_f * u_dot_grad_d)
        terms["gradD_sq_logf_sq"] = 2.0 * quad((log_f**2) * (u_dot_grad_d**2) / d)
        terms["gradD_gradPhi_cross"] = 2.0 * quad(log_f * u_dot_grad_d * u_dot_grad_phi / d)

    if mode == "full":
        grad_pi = coeffs.grad_pi_at(t).components
        pi_t = coeffs.pi_t_values(t)
        u_dot_grad_pi = np.sum(uc * grad_pi, axis=0)
        grad_pi_dot_grad_d = np.sum(grad_pi * grad_d, axis=0)
        jac_u = np.einsum("kl...,l...->k...", jac, uc)

        terms["pi_t"] = quad(pi_t * speed_sq)
        terms["cubic_gradPi"] = quad(speed_sq * u_dot_grad_pi)
        terms["gradPi_gradD"] = -2.0 * quad((log_f - 1.0) * speed_sq * grad_pi_dot_grad_d / pi_now)
        terms["gradPi_gradD_directional"] = 2.0 * quad(
            (log_f - 1.0) * u_dot_grad_pi * u_dot_grad_d / pi_now
        )
        terms["grad_usq_gradPi"] = quad((d / pi_now) * np.sum(grad_speed_sq * grad_pi, axis=0))
        terms["jacobian_u_gradPi"] = -2.0 * quad((d / pi_now) * np.sum(jac_u * grad_pi, axis=0))

    return TermBreakdown(mode=mode, terms=terms, sum=math.fsum(terms.values()))


def empirical_poincare(f: ScalarField, u: VectorField) -> float:
    """Ratio int |u|^2 f / int |grad u|^2 f (empirical constant sample)."""
    grid = f.grid
    num = _cell_integral(grid, np.sum(u.components**2, axis=0) * f.values)
    jac = _jacobian(u)
    den = _cell_integral(grid, np.sum(jac**2, axis=(0, 1)) * f.values)
    if den <= 0.0:
        raise UndefinedRatioError("int |grad u|^2 f vanishes; Poincare ratio undefined")
    return num / den


def empirical_sobolev(
    f: ScalarField,
    u: VectorField,
    p_star: float = 6.0,
    weighted: bool = False,
    eps: float = 2.0,
) -> float:
    """Ratio (int |u|^p* f)^(1/p*) / (int |grad u|^2 f)^(1/2).

    The ``weighted`` variant divides by (int (2|grad u|^2 + eps |u|^2) f)^(1/2)
    instead, matching the form needed when the velocity is not a gradient.
    """
    if not p_star > 2.0:
        raise ValueError("p_star must exceed 2")
    grid = f.grid
    speed = u.magnitude()
    num = _cell_integral(grid, speed**p_star * f.values) ** (1.0 / p_star)
    jac = _jacobian(u)
    grad_sq = np.sum(jac**2, axis=(0, 1))
    if weighted:
        den_sq = _cell_integral(grid, (2.0 * grad_sq + eps * speed**2) * f.values)
    else:
        den_sq = _cell_integral(grid, grad_sq * f.values)
    if den_sq <= 0.0:
        raise UndefinedRatioError("Sobolev-ratio denominator vanishes (u constant)")
    return num / math.sqrt(den_sq)


def interpolation_check(
    f: ScalarField, u: VectorField, sobolev_const: float, mode: str
) -> float:
    """Signed margin RHS - LHS of the cubic-moment interpolation inequality.

    LHS = int |u|^3 f.  With K = sobolev_const, mode ``pi-constant`` uses
    RHS = (3/4) K^{3/2} int |grad u|^2 f + (1/4) K^{3/2} (int |u|^2 f)^3;
    mode ``pi-variable`` uses the weighted variant
    RHS = (3/2) K^{3/2} (int |grad u|^2 f + int |u|^2 f)
          + (1/4) K^{3/2} (int |u|^2 f)^3.
    A nonnegative margin certifies the inequality for this sample.
    """
    if sobolev_const <= 0.0:
        raise ValueError("sobolev_const must be positive")
    if mode not in ("pi-constant", "pi-variable"):
        raise ValueError("mode must be 'pi-constant' or 'pi-variable'")
    grid = f.grid
    speed = u.magnitude()
    lhs = _cell_integral(grid, speed**3 * f.values)
    jac = _jacobian(u)
    grad_term = _cell_integral(grid, np.sum(jac**2, axis=(0, 1)) * f.values)
    speed_sq_term = _cell_integral(grid, speed**2 * f.values)
    k32 = sobolev_const**1.5
    if mode == "pi-constant":
        rhs = 0.75 * k32 * grad_term + 0.25 * k32 * speed_sq_term**3
    else:
        rhs = 1.5 * k32 * (grad_term + speed_sq_term) + 0.25 * k32 * speed_sq_term**3
    return rhs - lhs


def decay_fit(series: TimeSeries, window: tuple[float, float]) -> DecayFit:
    """Fit log dissipation linearly in t over the window; rate = -slope."""
    t_lo, t_hi = window
    t = series.column("t")
    dis = series.column("dissipation")
    mask = (t >= t_lo) & (t <= t_hi) & (dis > 0.0)
    if int(mask.sum()) < 5:
        raise TooShortSeriesError(
            f"need >= 5 records with positive dissipation in [{t_lo}, {t_hi}]; got {int(mask.sum())}"
        )
    ts = t[mask]
    logs = np.log(dis[mask])
    slope, intercept = np.polyfit(ts, logs, 1)
    resid = logs - (slope * ts + intercept)
    return DecayFit(
        rate=float(-slope),
        log_intercept=float(intercept),
        window=(float(t_lo), float(t_hi)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=int(mask.sum()),
    )


def make_recorder(coeffs: CoefficientSet, envelope=None, on_state=None):
    """Build the per-state diagnostics callback used by solver.run.

    ``envelope`` is the (lower, upper) pair from max_principle_envelope;
    without it the containment margin is recorded as NaN.  ``on_state``
    receives each recorded SolverState (for snapshot capture).
    """

    def recorder(state: SolverState) -> DiagnosticsRecord:
        f = state.f
        u = compute_velocity(f, coeffs, state.t)
        log_f = np.log(f.values)
        record = DiagnosticsRecord(
            t=state.t,
            mass=integrate(f),
            free_energy=free_energy(f, coeffs),
            dissipation=_dissipation_from_velocity(f, coeffs, state.t, u),
            f_min=f.min(),
            f_max=f.max(),
            log_f_sup=float(np.abs(log_f).max()),
            u_sup=float(u.magnitude().max()),
            envelope_violation=envelope_margin(f, envelope) if envelope is not None else math.nan,
            jensen_margin=jensen_check(u),
        )
        if on_state is not None:
            on_state(state)
        return record

    return recorder
