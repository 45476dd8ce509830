"""Coefficient sampling, the equilibrium density, and the constants ledger.

Coefficients enter as mini-language expressions: diffusion D(x) and potential
phi(x) are spatial, the mobility pi(x, t) may also depend on t, and f0(x) is
the initial density shape (renormalized here to unit mass).  Spatial
gradients come from centered differences of the sampled fields so they match
the diagnostic stencils; the mobility's time derivative is a centered
difference of the analytic expression with a fixed small step, which avoids
symbolic differentiation while staying exact to O(dt^2).

The constants ledger collects every named bound the decay conditions
consume: initial-density bounds, the diffusion floor, mobility bounds and
derivative bounds, the potential's Hessian floor, sup norms, the equilibrium
normalization shift, and the closed-form log-density bound.  Ledger sups are
discrete maxima over cell samples, hence lower bounds of the true sups; on
smooth coefficients the gap is O(h^2).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .errors import EquilibriumBracketError, ExpressionError, PositivityError
from .expressions import CoefficientExpr, parse_expression
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    centered_gradient,
    centered_hessian,
    integrate,
)

#: time step for the centered difference defining pi_t from the expression
PI_TIME_DELTA = 1e-4

#: bisection iteration cap for the equilibrium normalization shift
SHIFT_MAX_ITERATIONS = 200


def _sample_expression(expr: CoefficientExpr, grid: Grid, name: str, t: float | None = None) -> np.ndarray:
    allowed = {f"x{k + 1}" for k in range(grid.dim)}
    spatial = expr.variables - {"t"}
    if not spatial <= allowed:
        bad = sorted(spatial - allowed)[0]
        raise ExpressionError(
            f"coefficient {name!r} uses {bad!r} on a {grid.dim}-dimensional grid",
            expr.source,
            expr.source.find(bad),
        )
    coords = {f"x{k + 1}": c for k, c in enumerate(grid.coordinates())}
    raw = expr.evaluate(coords, t)
    arr = np.broadcast_to(np.asarray(raw, dtype=np.float64), grid.shape).copy()
    if not np.all(np.isfinite(arr)):
        cell = np.unravel_index(int(np.argmin(np.isfinite(arr))), grid.shape)
        raise ExpressionError(
            f"coefficient {name!r} is not finite at cell {tuple(cell)}", expr.source, 0
        )
    return arr


def _require_positive(name: str, arr: np.ndarray, grid: Grid) -> None:
    idx = int(np.argmin(arr))
    if arr.flat[idx] <= 0.0:
        cell = np.unravel_index(idx, grid.shape)
        raise PositivityError(name, cell, float(arr.flat[idx]))


@dataclass(frozen=True)
class CoefficientSet:
    """Sampled coefficients plus producers for the time-dependent mobility."""

    grid: Grid
    D: ScalarField
    grad_D: VectorField
    phi: ScalarField
    grad_phi: VectorField
    pi_expr: CoefficientExpr
    sources: dict

    def pi_values(self, t: float) -> np.ndarray:
        """Mobility samples at time t (positivity checked)."""
        if not self.pi_expr.uses_t:
            return self._static_pi
        arr = _sample_expression(self.pi_expr, self.grid, "pi", t)
        _require_positive("pi", arr, self.grid)
        return arr

    def pi_at(self, t: float) -> ScalarField:
        return ScalarField(self.grid, self.pi_values(t))

    def pi_t_values(self, t: float) -> np.ndarray:
        if not self.pi_expr.uses_t:
            return np.zeros(self.grid.shape)
        ahead = _sample_expression(self.pi_expr, self.grid, "pi", t + PI_TIME_DELTA)
        behind = _sample_expression(self.pi_expr, self.grid, "pi", t - PI_TIME_DELTA)
        return (ahead - behind) / (2.0 * PI_TIME_DELTA)

    def pi_t_at(self, t: float) -> ScalarField:
        return ScalarField(self.grid, self.pi_t_values(t))

    def grad_pi_at(self, t: float) -> VectorField:
        return centered_gradient(self.pi_at(t))

    @property
    def d_is_constant(self) -> bool:
        return float(np.ptp(self.D.values)) == 0.0

    @property
    def pi_is_constant(self) -> bool:
        return (not self.pi_expr.uses_t) and float(np.ptp(self._static_pi)) == 0.0

    @property
    def _static_pi(self) -> np.ndarray:
        # cached because the solver samples the mobility every stage
        cache = self.__dict__.get("_static_pi_cache")
        if cache is None:
            cache = _sample_expression(self.pi_expr, self.grid, "pi", 0.0)
            _require_positive("pi", cache, self.grid)
            self.__dict__["_static_pi_cache"] = cache
        return cache


def sample_coefficients(
    specs: Mapping[str, str | CoefficientExpr], grid: Grid
) -> tuple[CoefficientSet, ScalarField]:
    """Sample D, phi, pi, f0 at cell centers; f0 is rescaled to unit mass.

    D, phi and f0 are spatial-only; an expression using t in those slots is
    rejected.  D, pi and f0 must be strictly positive at every sample point.
    """
    exprs = {}
    for name in ("D", "phi", "pi", "f0"):
        if name not in specs:
            raise ExpressionError(f"missing coefficient {name!r}", "", 0)
        spec = specs[name]
        exprs[name] = spec if isinstance(spec, CoefficientExpr) else parse_expression(spec)
    for name in ("D", "phi", "f0"):
        if exprs[name].uses_t:
            raise ExpressionError(
                f"coefficient {name!r} is spatial-only but uses t",
                exprs[name].source,
                exprs[name].source.find("t"),
            )

    d_arr = _sample_expression(exprs["D"], grid, "D")
    _require_positive("D", d_arr, grid)
    phi_arr = _sample_expression(exprs["phi"], grid, "phi")
    pi0 = _sample_expression(exprs["pi"], grid, "pi", 0.0)
    _require_positive("pi", pi0, grid)
    f0_arr = _sample_expression(exprs["f0"], grid, "f0")
    _require_positive("f0", f0_arr, grid)

    d_field = ScalarField(grid, d_arr)
    phi_field = ScalarField(grid, phi_arr)
    coeffs = CoefficientSet(
        grid=grid,
        D=d_field,
        grad_D=centered_gradient(d_field),
        phi=phi_field,
        grad_phi=centered_gradient(phi_field),
        pi_expr=exprs["pi"],
        sources={name: exprs[name].source for name in ("D", "phi", "pi", "f0")},
    )
    f0_field = ScalarField(grid, f0_arr)
    f0_normalized = ScalarField(grid, f0_arr / integrate(f0_field))
    return coeffs, f0_normalized


def _equilibrium_field(coeffs: CoefficientSet, shift: float) -> np.ndarray:
    return np.exp(-(coeffs.phi.values - shift) / coeffs.D.values)


def compute_equilibrium(coeffs: CoefficientSet, tol: float = 1e-12) -> tuple[ScalarField, float]:
    """Equilibrium density exp(-(phi - shift)/D) with unit-mass shift.

    The map shift -> mass is strictly increasing and the bracket
    [-sup|phi|, +sup|phi|] always contains the root, so plain bisection on
    the mass residual converges; 200 iterations cap the loop.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    grid = coeffs.grid
    phi_sup = float(np.abs(coeffs.phi.values).max())

    def mass_residual(shift: float) -> float:
        return grid.cell_volume * float(_equilibrium_field(coeffs, shift).sum()) - 1.0

    lo, hi = -phi_sup, phi_sup
    res_lo = mass_residual(lo)
    res_hi = mass_residual(hi)
    if res_lo > 0.0 or res_hi < 0.0:
        raise EquilibriumBracketError(
            f"shift bracket [{lo}, {hi}] does not enclose the unit-mass root"
        )
    shift = 0.5 * (lo + hi)
    for _ in range(SHIFT_MAX_ITERATIONS):
        shift = 0.5 * (lo + hi)
        res = mass_residual(shift)
        if abs(res) <= tol:
            break
        if res < 0.0:
            lo = shift
        else:
            hi = shift
    else:
        raise EquilibriumBracketError(
            f"mass residual {mass_residual(shift):.3e} still above tol={tol:g} "
            f"after {SHIFT_MAX_ITERATIONS} bisection steps"
        )
    return ScalarField(grid, _equilibrium_field(coeffs, shift)), float(shift)


@dataclass(frozen=True)
class ConstantsLedger:
    """Every named coefficient bound the decay conditions consume.

    Sups are discrete maxima over cell samples (and mobility probe times),
    so they are lower bounds of the true sups.  ``log_f_bound`` is defined,
    not estimated: (1 + sqrt(n) grad_d)(log_f0_sup + 2 phi_sup) + 2 phi_sup.
    ``hess_phi_lower`` is the negated minimal Hessian eigenvalue clamped at
    zero for convex potentials, so the Hessian is bounded below by
    -hess_phi_lower * identity.
    """

    dim: int
    init_min: float
    init_max: float
    d_min: float
    pi_min: float
    pi_max: float
    pi_time: float
    grad_pi: float
    grad_d: float
    hess_phi_lower: float
    phi_sup: float
    grad_phi_sup: float
    log_f0_sup: float
    feq_shift: float
    log_f_bound: float
    d_max_bound: float

    def __post_init__(self):
        if not (0.0 < self.init_min <= self.init_max):
            raise ValueError("initial-density bounds must satisfy 0 < init_min <= init_max")
        if self.pi_min > self.pi_max:
            raise ValueError("pi_min must not exceed pi_max")

    def as_dict(self) -> dict:
        return asdict(self)


def log_density_bound(dim: int, grad_d: float, log_f0_sup: float, phi_sup: float) -> float:
    """Closed-form uniform bound on |log f| along the flow (D-floor free)."""
    return (1.0 + math.sqrt(dim) * grad_d) * (log_f0_sup + 2.0 * phi_sup) + 2.0 * phi_sup


def _min_hessian_eigenvalue(phi: ScalarField) -> float:
    hess = centered_hessian(phi)
    n = phi.grid.dim
    if n == 1:
        return float(hess[0, 0].min())
    stacked = np.moveaxis(hess.reshape(n, n, -1), -1, 0)  # (cells, n, n)
    eigs = np.linalg.eigvalsh(stacked)
    return float(eigs[:, 0].min())


def build_constants_ledger(
    coeffs: CoefficientSet,
    f0: ScalarField,
    grid: Grid,
    t_probe_count: int = 9,
    t_horizon: float = 1.0,
    equilibrium_tol: float = 1e-12,
) -> ConstantsLedger:
    """Assemble the ledger from discrete samples.

    Mobility extrema and the |pi_t|, |grad pi| sups are taken over
    ``t_probe_count`` evenly spaced probe times in [0, t_horizon] (a single
    probe at t = 0 when the mobility is time-independent).
    """
    if t_probe_count < 1:
        raise ValueError("t_probe_count must be >= 1")
    if coeffs.pi_expr.uses_t:
        probes = np.linspace(0.0, t_horizon, t_probe_count)
    else:
        probes = np.array([0.0])

    pi_min = math.inf
    pi_max = -math.inf
    pi_time = 0.0
    grad_pi = 0.0
    for t in probes:
        pi_arr = coeffs.pi_values(float(t))
        pi_min = min(pi_min, float(pi_arr.min()))
        pi_max = max(pi_max, float(pi_arr.max()))
        pi_time = max(pi_time, float(np.abs(coeffs.pi_t_values(float(t))).max()))
        grad_pi = max(grad_pi, float(coeffs.grad_pi_at(float(t)).magnitude().max()))

    dim = grid.dim
    grad_d = float(coeffs.grad_D.magnitude().max())
    d_min = coeffs.D.min()
    phi_sup = float(np.abs(coeffs.phi.values).max())
    grad_phi_sup = float(coeffs.grad_phi.magnitude().max())
    log_f0_sup = float(np.abs(np.log(f0.values)).max())
    lam = max(0.0, -_min_hessian_eigenvalue(coeffs.phi))
    _, shift = compute_equilibrium(coeffs, tol=equilibrium_tol)

    return ConstantsLedger(
        dim=dim,
        init_min=f0.min(),
        init_max=f0.max(),
        d_min=d_min,
        pi_min=pi_min,
        pi_max=pi_max,
        pi_time=pi_time,
        grad_pi=grad_pi,
        grad_d=grad_d,
        hess_phi_lower=lam,
        phi_sup=phi_sup,
        grad_phi_sup=grad_phi_sup,
        log_f0_sup=log_f0_sup,
        feq_shift=shift,
        log_f_bound=log_density_bound(dim, grad_d, log_f0_sup, phi_sup),
        d_max_bound=d_min + math.sqrt(dim) * grad_d,
    )
