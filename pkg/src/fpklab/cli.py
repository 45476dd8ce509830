"""Scenario configuration, batch execution, sweeps, and serialization.

A scenario is a JSON file naming the grid, the four coefficient expressions,
solver settings, and optional diagnostics/theory blocks.  ``fpk run`` writes
a time series (series.csv), a full report (report.json), and the normalized
scenario (scenario.normalized.json) into the output directory; ``fpk check``
evaluates the decay conditions without time stepping; ``fpk sweep`` runs a
scenario family along one axis and merges per-row results into sweep.csv;
``fpk equilibrium`` prints equilibrium statistics.

Numbers in CSV files are formatted with 17 significant digits so reruns with
identical inputs are byte-identical.  Sweep rows execute concurrently (up to
--jobs processes) but are merged in input order, so concurrency never
changes the output.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics, solver, theory
from .coefficients import (
    build_constants_ledger,
    compute_equilibrium,
    sample_coefficients,
)
from .errors import (
    FpkError,
    ScenarioError,
    ThresholdError,
    TooShortSeriesError,
    UndefinedRatioError,
)
from .expressions import parse_expression
from .grid import build_grid, integrate
from .solver import SolverConfig

SERIES_COLUMNS = (
    "t",
    "mass",
    "free_energy",
    "dissipation",
    "f_min",
    "f_max",
    "u_sup",
    "envelope_margin",
    "jensen_margin",
)

SWEEP_AXES = ("d_scale", "gamma", "grad_pi_scale", "resolution")

#: clause names per regime theorem, used for stable sweep.csv columns
CLAUSE_NAMES = {
    "T2": ("rate", "initial_energy_finite"),
    "T3": ("diffusion_floor", "rate", "gronwall_threshold"),
    "T4": (
        "diffusion_floor",
        "mobility_time",
        "mobility_gradient",
        "poincare_gate",
        "rate",
        "gronwall_threshold",
    ),
}

#: probe count for the mobility sups in the constants ledger
T_PROBE_COUNT = 9

#: at most this many recorded states get a term breakdown in the report
TERM_SAMPLE_CAP = 5


def _fmt(value) -> str:
    """17-significant-digit formatting; stable across reruns."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass(frozen=True)
class GridSettings:
    dim: int
    cells_per_axis: int


@dataclass(frozen=True)
class TheorySettings:
    gamma: float
    certified_sobolev: float | None = None
    certified_poincare: float | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: GridSettings
    coefficients: dict
    solver: SolverConfig
    fit_window: tuple[float, float] | None = None
    theory: TheorySettings | None = None

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "grid": {"dim": self.grid.dim, "cells_per_axis": self.grid.cells_per_axis},
            "coefficients": dict(self.coefficients),
            "solver": {
                "t_end": self.solver.t_end,
                "cfl_safety": self.solver.cfl_safety,
                "positivity_floor": self.solver.positivity_floor,
                "integrator": self.solver.integrator,
                "max_steps": self.solver.max_steps,
            },
            "diagnostics": {"record_every": self.solver.record_every},
        }
        if self.fit_window is not None:
            data["diagnostics"]["fit_window"] = list(self.fit_window)
        if self.theory is not None:
            block = {"gamma": self.theory.gamma}
            if self.theory.certified_sobolev is not None:
                block["certified_sobolev"] = self.theory.certified_sobolev
            if self.theory.certified_poincare is not None:
                block["certified_poincare"] = self.theory.certified_poincare
            data["theory"] = block
        return data


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioError(f"{context} is missing required key {key!r}")
    return mapping[key]


def build_scenario(data: dict, fallback_name: str = "scenario") -> Scenario:
    """Validate a scenario dict, applying defaults."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    name = str(data.get("name", fallback_name))

    grid_block = _require(data, "grid", "scenario")
    grid = GridSettings(
        dim=int(_require(grid_block, "dim", "grid")),
        cells_per_axis=int(_require(grid_block, "cells_per_axis", "grid")),
    )
    build_grid(grid.dim, grid.cells_per_axis)  # validates ranges

    coeff_block = _require(data, "coefficients", "scenario")
    coefficients = {}
    for key in ("D", "phi", "pi", "f0"):
        source = str(_require(coeff_block, key, "coefficients"))
        try:
            expr = parse_expression(source)
        except FpkError as exc:
            raise ScenarioError(f"coefficient {key!r}: {exc}") from exc
        if key != "pi" and expr.uses_t:
            raise ScenarioError(f"coefficient {key!r} is spatial-only but uses t")
        coefficients[key] = source

    solver_block = dict(data.get("solver", {}))
    diag_block = dict(data.get("diagnostics", {}))
    record_every = int(diag_block.get("record_every", solver_block.pop("record_every", 10)))
    try:
        config = SolverConfig(
            t_end=float(_require(solver_block, "t_end", "solver")),
            cfl_safety=float(solver_block.get("cfl_safety", 0.4)),
            positivity_floor=float(solver_block.get("positivity_floor", 0.0)),
            integrator=str(solver_block.get("integrator", "rk4")),
            max_steps=int(solver_block.get("max_steps", 1_000_000)),
            record_every=record_every,
        )
    except ValueError as exc:
        raise ScenarioError(f"solver: {exc}") from exc

    fit_window = None
    if "fit_window" in diag_block:
        window = diag_block["fit_window"]
        if not (isinstance(window, (list, tuple)) and len(window) == 2):
            raise ScenarioError("diagnostics.fit_window must be [t_lo, t_hi]")
        fit_window = (float(window[0]), float(window[1]))
        if fit_window[1] <= fit_window[0]:
            raise ScenarioError("diagnostics.fit_window must have t_lo < t_hi")

    theory_settings = None
    if "theory" in data:
        theory_block = data["theory"]
        gamma = float(_require(theory_block, "gamma", "theory"))
        if gamma <= 0.0:
            raise ScenarioError("theory.gamma must be positive")
        theory_settings = TheorySettings(
            gamma=gamma,
            certified_sobolev=_optional_float(theory_block, "certified_sobolev"),
            certified_poincare=_optional_float(theory_block, "certified_poincare"),
        )

    return Scenario(
        name=name,
        grid=grid,
        coefficients=coefficients,
        solver=config,
        fit_window=fit_window,
        theory=theory_settings,
    )


def _optional_float(block: dict, key: str) -> float | None:
    value = block.get(key)
    return None if value is None else float(value)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path} is not valid JSON: {exc}") from exc
    return build_scenario(data, fallback_name=path.stem)


def _regime(coeffs) -> str:
    if coeffs.pi_is_constant:
        return "homogeneous" if coeffs.d_is_constant else "inhomogeneous-D"
    return "full"


_REGIME_THEOREM = {"homogeneous": "T2", "inhomogeneous-D": "T3", "full": "T4"}
_REGIME_MODE = {"homogeneous": "homogeneous", "inhomogeneous-D": "inhomogeneous-D", "full": "full"}


def _empirical_constants(snapshots, coeffs) -> dict:
    """Running maxima of the empirical ratios over recorded states."""
    poincare = sobolev = sobolev_weighted = None
    for state in snapshots:
        u = solver.compute_velocity(state.f, coeffs, state.t)
        try:
            poin = diagnostics.empirical_poincare(state.f, u)
            sob = diagnostics.empirical_sobolev(state.f, u, p_star=6.0)
            sob_w = diagnostics.empirical_sobolev(state.f, u, p_star=6.0, weighted=True, eps=2.0)
        except UndefinedRatioError:
            continue
        poincare = poin if poincare is None else max(poincare, poin)
        sobolev = sob if sobolev is None else max(sobolev, sob)
        sobolev_weighted = sob_w if sobolev_weighted is None else max(sobolev_weighted, sob_w)
    return {"poincare": poincare, "sobolev": sobolev, "sobolev_weighted": sobolev_weighted}


def _condition_reports(scenario, regime, ledger, empirical, g0) -> list[dict]:
    """All condition reports applicable to the regime, with provenance."""
    if scenario.theory is None:
        return []
    gamma = scenario.theory.gamma
    certified_sob = scenario.theory.certified_sobolev
    certified_poin = scenario.theory.certified_poincare

    def pick(certified, empirical_value):
        if certified is not None:
            return certified, "certified"
        return empirical_value, "empirical"

    poin, poin_prov = pick(certified_poin, empirical["poincare"])
    sob, sob_prov = pick(certified_sob, empirical["sobolev"])
    sob_w, sob_w_prov = pick(certified_sob, empirical["sobolev_weighted"])

    wanted = {"homogeneous": ("T2", "T3", "T4"), "inhomogeneous-D": ("T3", "T4"), "full": ("T4",)}
    reports = []
    for theorem in wanted[regime]:
        try:
            if theorem == "T2":
                if poin is None:
                    raise FpkError("no Poincare constant available (trajectory had u = 0)")
                report = theory.check_condition_T2(
                    ledger, poin, gamma, g0, poincare_provenance=poin_prov
                )
            elif theorem == "T3":
                if poin is None or sob is None:
                    raise FpkError("no empirical constants available (trajectory had u = 0)")
                report = theory.check_condition_T3(
                    ledger, sob, poin, gamma, g0,
                    sobolev_provenance=sob_prov, poincare_provenance=poin_prov,
                )
            else:
                if poin is None or sob_w is None:
                    raise FpkError("no empirical constants available (trajectory had u = 0)")
                report = theory.check_condition_T4(
                    ledger, sob_w, poin, gamma, g0,
                    sobolev_provenance=sob_w_prov, poincare_provenance=poin_prov,
                )
            reports.append(report.as_dict())
        except FpkError as exc:
            reports.append({"theorem": theorem, "error": str(exc)})
    return reports


def _envelope_block(scenario, regime, ledger, series) -> dict | None:
    if scenario.theory is None:
        return None
    gamma = scenario.theory.gamma
    g0 = series.records[0].dissipation
    theorem = _REGIME_THEOREM[regime]
    block = {"theorem": theorem, "gamma": gamma, "g0": g0}
    try:
        envelope = theory.predicted_envelope(theorem, gamma, g0, pi_min=ledger.pi_min)
    except ThresholdError as exc:
        block["threshold_violated"] = True
        block["error"] = str(exc)
        return block
    worst = theory.compare_to_envelope(series, envelope)
    block.update(
        {
            "threshold_violated": False,
            "coefficient": envelope.coefficient,
            "rate": envelope.rate,
            "worst_ratio": worst,
            "dominates": worst <= 1.0 + 1e-6,
        }
    )
    return block


SOBOLEV_NOTE = (
    "Weighted Sobolev/Poincare constants are not constructive; this report "
    "uses empirical running maxima over recorded states unless a certified "
    "value was supplied (see each condition report's provenance)."
)


def run_scenario_data(scenario: Scenario):
    """Execute a scenario in memory; returns (series, report, snapshots)."""
    grid = build_grid(scenario.grid.dim, scenario.grid.cells_per_axis)
    coeffs, f0 = sample_coefficients(scenario.coefficients, grid)
    feq, shift = compute_equilibrium(coeffs, tol=1e-12)
    ledger = build_constants_ledger(
        coeffs, f0, grid, t_probe_count=T_PROBE_COUNT, t_horizon=max(scenario.solver.t_end, 1e-6)
    )
    envelope = diagnostics.max_principle_envelope(f0, feq, coeffs)

    snapshots: list[solver.SolverState] = []
    recorder = diagnostics.make_recorder(coeffs, envelope=envelope, on_state=snapshots.append)
    series = solver.run(f0, coeffs, scenario.solver, recorder)

    regime = _regime(coeffs)
    fit_window = scenario.fit_window or (scenario.solver.t_end / 4.0, scenario.solver.t_end)
    try:
        fit = diagnostics.decay_fit(series, fit_window)
        fit_dict = {
            "rate": fit.rate,
            "log_intercept": fit.log_intercept,
            "window": list(fit.window),
            "residual_rms": fit.residual_rms,
            "n_points": fit.n_points,
        }
    except TooShortSeriesError as exc:
        fit_dict = {"error": str(exc)}

    empirical = _empirical_constants(snapshots, coeffs)
    g0 = series.records[0].dissipation

    sample_count = min(TERM_SAMPLE_CAP, len(snapshots))
    sample_idx = sorted(set(np.linspace(0, len(snapshots) - 1, sample_count).astype(int)))
    term_samples = []
    for i in sample_idx:
        state = snapshots[i]
        breakdown = diagnostics.second_derivative_terms(
            state.f, coeffs, state.t, mode=_REGIME_MODE[regime]
        )
        term_samples.append(
            {"t": state.t, "mode": breakdown.mode, "terms": breakdown.terms, "sum": breakdown.sum}
        )

    report = {
        "scenario": scenario.to_dict(),
        "regime": regime,
        "equilibrium": {
            "shift": shift,
            "feq_min": feq.min(),
            "feq_max": feq.max(),
            "mass_residual": integrate(feq) - 1.0,
        },
        "constants_ledger": ledger.as_dict(),
        "empirical_constants": empirical,
        "certified_consistency": _certified_consistency(scenario, empirical),
        "term_breakdown_samples": term_samples,
        "decay_fit": fit_dict,
        "condition_reports": _condition_reports(scenario, regime, ledger, empirical, g0),
        "envelope": _envelope_block(scenario, regime, ledger, series),
        "series_rows": len(series),
        "accepted_steps": series.metadata.get("accepted_steps"),
        "sobolev_constant_note": SOBOLEV_NOTE,
    }
    return series, report, snapshots


def _certified_consistency(scenario, empirical) -> dict | None:
    """Whether trajectory ratios stayed below user-certified constants."""
    if scenario.theory is None:
        return None
    checks = {}
    if scenario.theory.certified_poincare is not None and empirical["poincare"] is not None:
        checks["poincare"] = {
            "certified": scenario.theory.certified_poincare,
            "empirical_max": empirical["poincare"],
            "consistent": empirical["poincare"] <= scenario.theory.certified_poincare,
        }
    if scenario.theory.certified_sobolev is not None and empirical["sobolev"] is not None:
        checks["sobolev"] = {
            "certified": scenario.theory.certified_sobolev,
            "empirical_max": empirical["sobolev"],
            "consistent": empirical["sobolev"] <= scenario.theory.certified_sobolev,
        }
    return checks or None


def check_scenario_data(scenario: Scenario) -> dict:
    """Condition checks only: no time stepping.

    Empirical constants come from the initial state alone, so their
    provenance is weaker than a full run's running maxima.
    """
    grid = build_grid(scenario.grid.dim, scenario.grid.cells_per_axis)
    coeffs, f0 = sample_coefficients(scenario.coefficients, grid)
    feq, shift = compute_equilibrium(coeffs, tol=1e-12)
    ledger = build_constants_ledger(
        coeffs, f0, grid, t_probe_count=T_PROBE_COUNT, t_horizon=max(scenario.solver.t_end, 1e-6)
    )
    regime = _regime(coeffs)
    initial = solver.SolverState(f=f0, t=0.0, step_index=0)
    empirical = _empirical_constants([initial], coeffs)
    g0 = diagnostics.dissipation(f0, coeffs, 0.0)
    return {
        "scenario": scenario.to_dict(),
        "regime": regime,
        "equilibrium": {
            "shift": shift,
            "feq_min": feq.min(),
            "feq_max": feq.max(),
            "mass_residual": integrate(feq) - 1.0,
        },
        "constants_ledger": ledger.as_dict(),
        "empirical_constants": empirical,
        "condition_reports": _condition_reports(scenario, regime, ledger, empirical, g0),
        "sobolev_constant_note": SOBOLEV_NOTE
        + " (check mode: empirical values sampled at the initial state only)",
    }


def _series_rows(series) -> list[list[str]]:
    rows = []
    for r in series.records:
        rows.append(
            [
                _fmt(r.t),
                _fmt(r.mass),
                _fmt(r.free_energy),
                _fmt(r.dissipation),
                _fmt(r.f_min),
                _fmt(r.f_max),
                _fmt(r.u_sup),
                _fmt(r.envelope_violation),
                _fmt(r.jensen_margin),
            ]
        )
    return rows


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _prepare_out_dir(out_dir: Path, force: bool) -> Path:
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ScenarioError(f"output directory {out_dir} is not empty; pass --force to overwrite")
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_report(path: Path, report: dict) -> None:
    path.write_text(json.dumps(report, indent=2) + "\n")


def run_scenario(scenario: Scenario, out_dir, force: bool = False) -> dict:
    """Run and serialize; returns the report dict."""
    out = _prepare_out_dir(Path(out_dir), force)
    series, report, _ = run_scenario_data(scenario)
    _write_csv(out / "series.csv", SERIES_COLUMNS, _series_rows(series))
    write_report(out / "report.json", report)
    write_report(out / "scenario.normalized.json", scenario.to_dict())
    return report


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis: str
    values: list

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ScenarioError(f"sweep axis must be one of {SWEEP_AXES}; got {self.axis!r}")
        if not self.values:
            raise ScenarioError("sweep values list must be nonempty")


def parse_sweep(path) -> SweepSpec:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"sweep file not found: {path}")
    data = json.loads(path.read_text())
    base_block = _require(data, "base", "sweep")
    if isinstance(base_block, str):
        base = parse_scenario(path.parent / base_block)
    else:
        base = build_scenario(base_block, fallback_name=path.stem + "-base")
    return SweepSpec(
        base=base,
        axis=str(_require(data, "axis", "sweep")),
        values=list(_require(data, "values", "sweep")),
    )


def apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    """Derive the row scenario for one sweep value."""
    if axis == "d_scale":
        coeffs = dict(scenario.coefficients)
        coeffs["D"] = f"({value!r})*({coeffs['D']})"
        return replace(scenario, name=f"{scenario.name}-d{value}", coefficients=coeffs)
    if axis == "gamma":
        if scenario.theory is None:
            raise ScenarioError("gamma sweep requires a theory block in the base scenario")
        return replace(
            scenario,
            name=f"{scenario.name}-g{value}",
            theory=replace(scenario.theory, gamma=float(value)),
        )
    if axis == "grad_pi_scale":
        # pi -> 1 + s (pi - 1): scales grad(pi) and pi_t by exactly s
        coeffs = dict(scenario.coefficients)
        coeffs["pi"] = f"1 + ({value!r})*(({coeffs['pi']}) - 1)"
        return replace(scenario, name=f"{scenario.name}-p{value}", coefficients=coeffs)
    if axis == "resolution":
        return replace(
            scenario,
            name=f"{scenario.name}-n{value}",
            grid=GridSettings(scenario.grid.dim, int(value)),
        )
    raise ScenarioError(f"unknown sweep axis {axis!r}")


def _base_regime(scenario: Scenario) -> str:
    grid = build_grid(scenario.grid.dim, scenario.grid.cells_per_axis)
    coeffs, _ = sample_coefficients(scenario.coefficients, grid)
    return _regime(coeffs)


def _sweep_row(args) -> dict:
    index, scenario_dict, theorem, out_dir = args
    row = {"error": ""}
    try:
        scenario = build_scenario(scenario_dict, fallback_name=scenario_dict.get("name", "row"))
        report = run_scenario(scenario, Path(out_dir), force=True)
        fit = report.get("decay_fit", {})
        row["measured_rate"] = fit.get("rate", math.nan)
        margins = {name: math.nan for name in CLAUSE_NAMES[theorem]}
        overall = ""
        for cond in report.get("condition_reports", []):
            if cond.get("theorem") != theorem:
                continue
            if "error" in cond:
                row["error"] = cond["error"]
                break
            for clause in cond["clauses"]:
                lhs, rhs, op = clause["lhs"], clause["rhs"], clause["op"]
                margins[clause["name"]] = (lhs - rhs) if op == ">=" else (rhs - lhs)
            overall = cond["overall"]
        row["margins"] = margins
        row["overall_pass"] = overall
    except Exception as exc:  # per-row failures recorded, sweep continues
        row["error"] = str(exc)
        row.setdefault("measured_rate", math.nan)
        row.setdefault("margins", {name: math.nan for name in CLAUSE_NAMES[theorem]})
        row.setdefault("overall_pass", "")
    return row


def run_sweep(spec: SweepSpec, out_dir, force: bool = False, jobs: int | None = None) -> Path:
    """Run every sweep row and merge results, in input order, to sweep.csv."""
    out = _prepare_out_dir(Path(out_dir), force)
    theorem = _REGIME_THEOREM[_base_regime(spec.base)]
    tasks = []
    for index, value in enumerate(spec.values):
        row_scenario = apply_axis(spec.base, spec.axis, value)
        row_dir = out / "rows" / f"{index:03d}_{row_scenario.name}"
        row_dir.mkdir(parents=True, exist_ok=True)
        tasks.append((index, row_scenario.to_dict(), theorem, str(row_dir)))

    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]

    clause_cols = [f"margin_{name}" for name in CLAUSE_NAMES[theorem]]
    header = ["value", "measured_rate", *clause_cols, "overall_pass", "error"]
    csv_rows = []
    for value, row in zip(spec.values, rows):
        csv_rows.append(
            [
                _fmt(value),
                _fmt(row.get("measured_rate", math.nan)),
                *[_fmt(row["margins"][name]) for name in CLAUSE_NAMES[theorem]],
                str(row.get("overall_pass", "")),
                str(row.get("error", "")).replace(",", ";"),
            ]
        )
    path = out / "sweep.csv"
    _write_csv(path, header, csv_rows)
    return path


def _resolve_out(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("FPK_OUT_DIR")
    return Path(env) if env else Path("./out")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fpk",
        description="Fokker-Planck laboratory: run scenarios, check decay conditions, sweep parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="output directory (env FPK_OUT_DIR, default ./out)")
        p.add_argument("--force", action="store_true", help="overwrite a nonempty output directory")

    p_run = sub.add_parser("run", help="time-step a scenario and write series.csv + report.json")
    p_run.add_argument("scenario")
    add_common(p_run)

    p_check = sub.add_parser("check", help="evaluate decay conditions without time stepping")
    p_check.add_argument("scenario")
    add_common(p_check)

    p_sweep = sub.add_parser("sweep", help="run a scenario family along one axis")
    p_sweep.add_argument("sweepspec")
    add_common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=None, help="concurrent rows (default: logical cores)")

    p_eq = sub.add_parser("equilibrium", help="print equilibrium statistics for a scenario")
    p_eq.add_argument("scenario")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            scenario = parse_scenario(args.scenario)
            report = run_scenario(scenario, _resolve_out(args), force=args.force)
            print(f"wrote {_resolve_out(args) / 'series.csv'} ({report['series_rows']} rows)")
        elif args.command == "check":
            scenario = parse_scenario(args.scenario)
            out = _prepare_out_dir(_resolve_out(args), args.force)
            report = check_scenario_data(scenario)
            write_report(out / "report.json", report)
            write_report(out / "scenario.normalized.json", scenario.to_dict())
            for cond in report["condition_reports"]:
                if "error" in cond:
                    print(f"{cond['theorem']}: error: {cond['error']}")
                else:
                    verdict = "PASS" if cond["overall"] else "FAIL"
                    print(f"{cond['theorem']}: {verdict}")
        elif args.command == "sweep":
            spec = parse_sweep(args.sweepspec)
            path = run_sweep(spec, _resolve_out(args), force=args.force, jobs=args.jobs)
            print(f"wrote {path}")
        elif args.command == "equilibrium":
            scenario = parse_scenario(args.scenario)
            grid = build_grid(scenario.grid.dim, scenario.grid.cells_per_axis)
            coeffs, _ = sample_coefficients(scenario.coefficients, grid)
            feq, shift = compute_equilibrium(coeffs, tol=1e-12)
            print(f"shift          = {_fmt(shift)}")
            print(f"feq min        = {_fmt(feq.min())}")
            print(f"feq max        = {_fmt(feq.max())}")
            print(f"mass residual  = {_fmt(integrate(feq) - 1.0)}")
    except FpkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
