"""Sufficient-condition checkers and predicted decay envelopes.

Three regimes are covered, each with its own clause set evaluated from the
constants ledger plus weighted Sobolev/Poincare constants:

* homogeneous (constant D, constant pi): a single rate clause
  -2 lambda + 2 d_min / C_poincare >= gamma, plus initial-energy finiteness;
* spatial D, constant pi: a diffusion-floor clause with three competing
  entries, the rate clause -2(lambda + 1) + d_min / C_poincare >= gamma, and
  a saturation threshold g(0) < sqrt(6 gamma) on the initial dissipation;
* variable mobility: six clauses covering the diffusion floor, |pi_t|, a
  four-entry bound on |grad pi|, a Poincare gate, the rate clause against
  gamma * pi_max, and the threshold g(0) < sqrt(12 gamma pi_min^3).

The Sobolev/Poincare constants are non-constructive, so every report records
the numeric value used together with its provenance (empirical running
maximum or a user-certified value).  Division-by-zero entries for grad_d = 0
are treated as infinitely permissive, matching the degeneration of the
derivation when D is constant.

The saturation bound itself comes from the comparison inequality
dg/dt <= -c g + d g^p: below the threshold (c/d)^{1/(p-1)} the closed form
g(t) <= (g(0)^{-p+1} - d/c)^{-1/(p-1)} e^{-ct} holds, and a fixed-step RK4
solution of the saturating ODE cross-checks it numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import ConstantsLedger
from .errors import FpkError, ThresholdError, WrongRegimeError

_REGIME_ATOL = 1e-14


@dataclass(frozen=True)
class GronwallSpec:
    """Constants of the saturating comparison ODE dg/dt = -c g + d g^p."""

    c: float
    d: float
    p: float
    g0: float

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if self.d < 0.0:
            raise ValueError("d must be nonnegative")
        if self.p <= 1.0:
            raise ValueError("p must exceed 1")
        if self.g0 < 0.0:
            raise ValueError("g0 must be nonnegative")


def gronwall_threshold(spec: GronwallSpec) -> float:
    """(c/d)^(1/(p-1)); infinite when the saturating term is absent."""
    if spec.d == 0.0:
        return math.inf
    return (spec.c / spec.d) ** (1.0 / (spec.p - 1.0))


def gronwall_bound(spec: GronwallSpec, t) -> float | np.ndarray:
    """Closed-form decay bound (g0^{-p+1} - d/c)^{-1/(p-1)} e^{-ct}.

    Defined only below the threshold; g0 = 0 gives the zero bound.
    """
    if spec.g0 >= gronwall_threshold(spec):
        raise ThresholdError(
            f"g0={spec.g0!r} is not below the threshold {gronwall_threshold(spec)!r}"
        )
    decay = np.exp(-spec.c * np.asarray(t, dtype=float))
    if spec.g0 == 0.0:
        coefficient = 0.0
    else:
        coefficient = (spec.g0 ** (-spec.p + 1.0) - spec.d / spec.c) ** (-1.0 / (spec.p - 1.0))
    out = coefficient * decay
    return float(out) if np.isscalar(t) or np.ndim(t) == 0 else out


@dataclass(frozen=True)
class GronwallComparison:
    """RK4 solution of the saturating ODE next to the closed-form bound."""

    times: np.ndarray
    values: np.ndarray
    bound: np.ndarray | None
    max_excess: float
    grew: bool


def gronwall_comparison_ode(spec: GronwallSpec, t_end: float, dt: float) -> GronwallComparison:
    """Integrate dg/dt = -c g + d g^p and compare against the bound.

    Below the threshold the closed form must dominate every sample within
    1e-9 (violations raise, being internal-consistency failures).  At or
    above the threshold the solution grows; that is reported via ``grew``,
    not raised, and integration stops early if g exceeds 1e12.
    """
    if dt <= 0.0 or t_end < 0.0:
        raise ValueError("need dt > 0 and t_end >= 0")

    def slope(g: float) -> float:
        try:
            return -spec.c * g + spec.d * g**spec.p
        except OverflowError:
            return math.inf

    times = [0.0]
    values = [spec.g0]
    g = spec.g0
    t = 0.0
    while t < t_end - 1e-15:
        if not math.isfinite(g) or g > 1e12:
            break  # finite-time blow-up above threshold
        h = min(dt, t_end - t)
        k1 = slope(g)
        k2 = slope(g + 0.5 * h * k1)
        k3 = slope(g + 0.5 * h * k2)
        k4 = slope(g + h * k3)
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        times.append(t)
        values.append(g)
    times_arr = np.array(times)
    values_arr = np.array(values)

    below = spec.g0 < gronwall_threshold(spec)
    if below:
        bound = np.asarray(gronwall_bound(spec, times_arr))
        max_excess = float((values_arr - bound).max())
        if max_excess > 1e-9:
            raise FpkError(
                f"saturating-ODE solution exceeds the closed-form bound by {max_excess:.3e}"
            )
        return GronwallComparison(times_arr, values_arr, bound, max_excess, grew=False)
    grew = bool(values_arr[-1] > values_arr[0]) or not math.isfinite(values_arr[-1])
    return GronwallComparison(times_arr, values_arr, None, math.inf, grew=grew)


@dataclass(frozen=True)
class Clause:
    """One recorded comparison; pass is re-derivable from lhs, rhs, op."""

    name: str
    lhs: float
    rhs: float
    op: str  # "<=", ">=", or "<"

    @property
    def passed(self) -> bool:
        if self.op == "<=":
            return self.lhs <= self.rhs
        if self.op == ">=":
            return self.lhs >= self.rhs
        if self.op == "<":
            return self.lhs < self.rhs
        raise ValueError(f"unknown op {self.op!r}")

    @property
    def margin(self) -> float:
        """Positive iff the clause passes (distance to the boundary)."""
        if self.op == ">=":
            return self.lhs - self.rhs
        return self.rhs - self.lhs

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "op": self.op,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ConditionReport:
    theorem: str  # "T2" | "T3" | "T4"
    gamma: float
    g0: float
    ledger: dict
    constants: dict
    clauses: list[Clause] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.clauses)

    def clause(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "gamma": self.gamma,
            "g0": self.g0,
            "ledger": self.ledger,
            "constants": self.constants,
            "clauses": [c.as_dict() for c in self.clauses],
            "overall": self.overall,
        }


def _validate_common(ledger: ConstantsLedger, gamma: float) -> None:
    if gamma <= 0.0:
        raise ValueError("gamma must be positive (the decay results quantify over gamma > 0)")
    if ledger.d_min < 1.0:
        raise WrongRegimeError("decay conditions require the diffusion floor d_min >= 1")
    if ledger.dim not in (1, 2, 3):
        raise WrongRegimeError("decay conditions cover dimensions 1, 2, 3 only")


def _constant(value: float, provenance: str) -> dict:
    return {"value": value, "provenance": provenance}


def check_condition_T2(
    ledger: ConstantsLedger,
    poincare_const: float,
    gamma: float,
    g0: float,
    poincare_provenance: str = "empirical",
) -> ConditionReport:
    """Homogeneous regime: rate clause plus initial-energy finiteness."""
    _validate_common(ledger, gamma)
    if poincare_const <= 0.0:
        raise ValueError("poincare_const must be positive")
    if ledger.grad_d > _REGIME_ATOL or ledger.grad_pi > _REGIME_ATOL or ledger.pi_time > _REGIME_ATOL:
        raise WrongRegimeError("homogeneous check requires constant D and constant pi")
    clauses = [
        Clause("rate", -2.0 * ledger.hess_phi_lower + 2.0 * ledger.d_min / poincare_const, gamma, ">="),
        Clause("initial_energy_finite", g0, math.inf, "<"),
    ]
    return ConditionReport(
        theorem="T2",
        gamma=gamma,
        g0=g0,
        ledger=ledger.as_dict(),
        constants={"poincare": _constant(poincare_const, poincare_provenance)},
        clauses=clauses,
    )


def check_condition_T3(
    ledger: ConstantsLedger,
    sobolev3: float,
    poincare3: float,
    gamma: float,
    g0: float,
    sobolev_provenance: str = "empirical",
    poincare_provenance: str = "empirical",
) -> ConditionReport:
    """Spatial-D regime: diffusion floor, rate clause, saturation threshold."""
    _validate_common(ledger, gamma)
    if sobolev3 <= 0.0 or poincare3 <= 0.0:
        raise ValueError("sobolev3 and poincare3 must be positive")
    if ledger.grad_pi > _REGIME_ATOL or ledger.pi_time > _REGIME_ATOL:
        raise WrongRegimeError("this check requires a constant mobility")
    lf = ledger.log_f_bound
    gd = ledger.grad_d
    n = ledger.dim
    floor_lhs = max(
        3.0 * lf * gd * sobolev3**1.5,
        2.0 * lf * gd * ledger.grad_phi_sup,
        4.0 * (1.0 + n) * (lf + 1.0) ** 2 * gd**2,
    )
    clauses = [
        Clause("diffusion_floor", floor_lhs, ledger.d_min, "<="),
        Clause("rate", -2.0 * (ledger.hess_phi_lower + 1.0) + ledger.d_min / poincare3, gamma, ">="),
        Clause("gronwall_threshold", g0, math.sqrt(6.0 * gamma), "<"),
    ]
    return ConditionReport(
        theorem="T3",
        gamma=gamma,
        g0=g0,
        ledger=ledger.as_dict(),
        constants={
            "sobolev": _constant(sobolev3, sobolev_provenance),
            "poincare": _constant(poincare3, poincare_provenance),
        },
        clauses=clauses,
    )


def check_condition_T4(
    ledger: ConstantsLedger,
    sobolev4: float,
    poincare4: float,
    gamma: float,
    g0: float,
    sobolev_provenance: str = "empirical",
    poincare_provenance: str = "empirical",
) -> ConditionReport:
    """Variable-mobility regime: the full six-clause report."""
    _validate_common(ledger, gamma)
    if sobolev4 <= 0.0 or poincare4 <= 0.0:
        raise ValueError("sobolev4 and poincare4 must be positive")
    lf = ledger.log_f_bound
    gd = ledger.grad_d
    n = ledger.dim
    floor_lhs = max(
        12.0 * lf * ledger.pi_max * gd * sobolev4**1.5,
        12.0 * lf * gd * ledger.grad_phi_sup,
        16.0 * (1.0 + n) * (lf + 1.0) ** 2 * gd**2,
    )
    # grad_d = 0 makes the second entry infinitely permissive
    grad_pi_cap = min(
        1.0 / (6.0 * sobolev4**1.5),
        ledger.pi_min / (24.0 * (lf + 1.0) * gd) if gd > 0.0 else math.inf,
        ledger.pi_min / (4.0 * math.sqrt(2.0 * (math.sqrt(n) * gd + 1.0) * ledger.d_min)),
        ledger.pi_min,
    )
    clauses = [
        Clause("diffusion_floor", floor_lhs, ledger.d_min, "<="),
        Clause("mobility_time", ledger.pi_time, 1.0 / 6.0, "<="),
        Clause("mobility_gradient", ledger.grad_pi, grad_pi_cap, "<="),
        Clause("poincare_gate", ledger.grad_pi, ledger.pi_min / (2.0 * sobolev4), "<="),
        Clause(
            "rate",
            -2.0 * (ledger.hess_phi_lower + 1.0) + ledger.d_min / poincare4,
            gamma * ledger.pi_max,
            ">=",
        ),
        Clause("gronwall_threshold", g0, math.sqrt(12.0 * gamma * ledger.pi_min**3), "<"),
    ]
    return ConditionReport(
        theorem="T4",
        gamma=gamma,
        g0=g0,
        ledger=ledger.as_dict(),
        constants={
            "sobolev": _constant(sobolev4, sobolev_provenance),
            "poincare": _constant(poincare4, poincare_provenance),
        },
        clauses=clauses,
    )


@dataclass(frozen=True)
class Envelope:
    """One-sided decay envelope t -> coefficient * exp(-rate * t)."""

    coefficient: float
    rate: float

    def __call__(self, t):
        return self.coefficient * np.exp(-self.rate * np.asarray(t, dtype=float))


def predicted_envelope(theorem: str, gamma: float, g0: float, pi_min: float | None = None) -> Envelope:
    """Envelope coefficient per regime.

    Homogeneous: coefficient = g0 (the plain exponential estimate).  The
    two saturating regimes inflate it: (g0^{-2} - 1/(6 gamma))^{-1/2} and,
    with mobility bounds, (g0^{-2} - 1/(12 gamma pi_min^3))^{-1/2}; both
    require g0 below the corresponding threshold.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if g0 < 0.0:
        raise ValueError("g0 must be nonnegative")
    if theorem == "T2":
        return Envelope(coefficient=g0, rate=gamma)
    if theorem == "T3":
        saturation = 1.0 / (6.0 * gamma)
    elif theorem == "T4":
        if pi_min is None or pi_min <= 0.0:
            raise ValueError("the variable-mobility envelope needs pi_min > 0")
        saturation = 1.0 / (12.0 * gamma * pi_min**3)
    else:
        raise ValueError(f"unknown theorem {theorem!r}")
    if g0 == 0.0:
        return Envelope(coefficient=0.0, rate=gamma)
    if g0 ** (-2.0) <= saturation:
        raise ThresholdError(
            f"g0={g0!r} is not below the saturation threshold {saturation**-0.5!r}"
        )
    return Envelope(coefficient=(g0 ** (-2.0) - saturation) ** (-0.5), rate=gamma)


def compare_to_envelope(series, envelope: Envelope) -> float:
    """Worst ratio dissipation(t) / envelope(t); domination iff <= 1 + 1e-6.

    Records with zero dissipation contribute ratio 0 even when the envelope
    is identically zero (the stationary start).
    """
    worst = 0.0
    for record in series.records:
        bound = float(envelope(record.t))
        if record.dissipation == 0.0:
            continue
        worst = max(worst, record.dissipation / bound if bound > 0.0 else math.inf)
    return worst
