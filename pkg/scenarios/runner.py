"""
Orchestrates one scenario: time sweep over the hierarchy solution, the
requested outputs and the invariant checks.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from django.conf import settings

from algebra.exceptions import CorrDynError
from algebra.seqalgebra import d_cluster, exp_star, ln_star
from algebra.tensorspace import trace_norm
from evolution.dynamics import relative_residual
from evolution.hierarchy import (
    bbgky_residual,
    bbgky_solution,
    direct_propagation_oracle,
    grand_canonical_marginals,
    marginal_correlation,
    propagate_densities,
    solve_hierarchy,
    strong_solution_residual,
    truncation_delta,
    ursell_residual,
)
from observables.functionals import (
    average_correlation,
    average_grandcanonical,
    dispersion,
    mean_particle_number,
    particle_number_bound,
)

from .scenario import Scenario

logger = logging.getLogger(__name__)

MODES = ("run", "check", "oracle")


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    t: Optional[float] = None

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": float(self.residual),
            "t": self.t,
            "tolerance": self.tolerance,
        }


def encode(value):
    """JSON form of a computed quantity: matrices and complex numbers as [re, im] pairs."""
    if isinstance(value, dict):
        return {str(key): encode(item) for key, item in value.items()}
    if isinstance(value, np.ndarray):
        return np.stack([value.real, value.imag], axis=-1).tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


@dataclass
class RunReport:
    """Everything one run produced; ``timing`` is kept out of the comparable part."""

    scenario: str
    mode: str
    digest: str
    d: int
    N: int
    statistics: str
    times: List[float] = field(default_factory=list)
    series: Dict[str, List[Any]] = field(default_factory=dict)
    truncation: Dict[str, List[float]] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "checks": [check.to_dict() for check in self.checks],
            "d": self.d,
            "diagnostics": encode(self.diagnostics),
            "digest": self.digest,
            "mode": self.mode,
            "N": self.N,
            "passed": self.passed,
            "scenario": self.scenario,
            "series": {name: [encode(value) for value in values] for name, values in self.series.items()},
            "statistics": self.statistics,
            "times": self.times,
            "truncation": self.truncation,
        }


class ScenarioRunner:
    """
    Runs a scenario in one of the modes ``run``, ``check`` or ``oracle``.

    The dimension budget is enforced on construction, before anything is
    computed.
    """

    def __init__(self, scenario: Scenario, tolerance: float = None):
        scenario.space.dim(scenario.N)
        self.scenario = scenario
        self.system = scenario.system()
        self.tolerances = dict(settings.CORRDYN["TOLERANCES"])
        self.tolerances.update(scenario.tolerances)
        if tolerance is not None:
            self.tolerances["oracle"] = tolerance
        self.g0 = scenario.initial_correlations()
        self._solutions = {}
        self._F0 = None

    def solution(self, t: float):
        if t not in self._solutions:
            self._solutions[t] = solve_hierarchy(self.system, self.g0, t)
        return self._solutions[t]

    @property
    def initial_marginals(self):
        if self._F0 is None:
            self._F0 = grand_canonical_marginals(exp_star(self.g0))
        return self._F0

    def execute(self, mode: str = "run") -> RunReport:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode}, expected one of {MODES}")
        scenario = self.scenario
        report = RunReport(
            scenario=scenario.name,
            mode=mode,
            digest=scenario.digest,
            d=scenario.d,
            N=scenario.N,
            statistics=str(scenario.statistics.value),
            times=list(scenario.time_grid.times),
        )
        logger.info(f"[RUNNER] {mode} {scenario.name} over {len(report.times)} time points")
        self._timed(report, "checks", self._run_checks, report)
        if mode == "oracle" or (mode == "run" and scenario.oracle):
            self._timed(report, "oracle", self._run_oracle, report)
        if mode != "check":
            self._timed(report, "outputs", self._run_outputs, report)
            self._timed(report, "diagnostics", self._run_diagnostics, report)
        for failure in report.failures:
            logger.warning(
                f"[RUNNER] check {failure.name} failed at t={failure.t}: "
                f"{failure.residual:.3e} > {failure.tolerance:.1e}"
            )
        return report

    def run(self) -> RunReport:
        return self.execute("run")

    def check(self) -> RunReport:
        return self.execute("check")

    def oracle(self) -> RunReport:
        return self.execute("oracle")

    @staticmethod
    def _timed(report: RunReport, name: str, step, *args):
        started = time.perf_counter()
        step(*args)
        report.timing[name] = time.perf_counter() - started

    def _scale(self) -> float:
        return max(1.0, max(trace_norm(self.g0[n]) for n in range(len(self.g0))))

    def _run_checks(self, report: RunReport):
        space = self.system.space
        algebraic = self.tolerances["algebraic"]
        finite_difference = self.tolerances["finite_difference"]

        S = space.symmetrizer(self.scenario.N)
        projector = max(trace_norm(S @ S - S), trace_norm(S - S.conj().T)) / max(1.0, trace_norm(S))
        report.checks.append(CheckResult("symmetrizer_projector", projector, algebraic))

        round_trip = ln_star(exp_star(self.g0)).distance(self.g0) / self._scale()
        report.checks.append(CheckResult("exp_ln_round_trip", round_trip, algebraic))

        last = report.times[-1]
        back = solve_hierarchy(self.system, self.solution(last), -last)
        report.checks.append(CheckResult("group_law", back.distance(self.g0) / self._scale(), self.tolerances["oracle"], last))

        for t in report.times:
            strong = strong_solution_residual(self.system, self.g0, t)
            report.checks.append(CheckResult("strong_solution", strong, finite_difference, t))
            bbgky = bbgky_residual(self.system, self.initial_marginals, 1, t)
            report.checks.append(CheckResult("bbgky_first_level", bbgky, finite_difference, t))
            if "residuals" in self.scenario.outputs:
                report.series.setdefault("residuals", []).append({"bbgky_first_level": bbgky, "strong_solution": strong})

    def _run_oracle(self, report: RunReport):
        for t in report.times:
            computed = self.solution(t)
            expected = direct_propagation_oracle(self.system, self.g0, t)
            residual = max(relative_residual(computed[n], expected[n]) for n in range(1, self.scenario.N + 1))
            report.checks.append(CheckResult("direct_propagation", residual, self.tolerances["oracle"], t))
            logger.debug(f"[RUNNER] oracle residual {residual:.3e} at t={t}")

    def _output(self, name: str, t: float):
        scenario = self.scenario
        g = self.solution(t)
        observable = scenario.observable
        if name == "correlations":
            return {n: g[n] for n in range(1, scenario.N + 1)}
        if name == "marginal_densities":
            return {s: bbgky_solution(self.system, self.initial_marginals, s, t) for s in range(1, scenario.N + 1)}
        if name == "marginal_correlations":
            return {s: marginal_correlation(g, s) for s in range(1, scenario.N + 1)}
        if name == "particle_number":
            return mean_particle_number(g)
        if observable is None:
            raise ValueError(f"output {name} needs an observable")
        if name == "averages":
            densities = propagate_densities(self.system, exp_star(self.g0), t)
            return {
                "correlation": average_correlation(observable, d_cluster(g, range(1, observable.order + 1))),
                "grand_canonical": average_grandcanonical(observable, densities),
            }
        if name == "dispersion":
            return dispersion(observable, g)
        raise ValueError(f"unknown output {name}")

    def _run_outputs(self, report: RunReport):
        for name in self.scenario.outputs:
            if name == "residuals":
                continue
            values = []
            for t in report.times:
                try:
                    values.append(self._output(name, t))
                except (CorrDynError, ValueError) as exc:
                    logger.error(f"[RUNNER] output {name} failed at t={t}: {exc}")
                    values.append({"error": str(exc)})
            report.series[name] = values
        if "marginal_correlations" in self.scenario.outputs:
            for s in range(1, self.scenario.N + 1):
                report.truncation[str(s)] = [truncation_delta(self.solution(t), s) for t in report.times]

    def _run_diagnostics(self, report: RunReport):
        scenario = self.scenario
        if scenario.beta is not None:
            report.diagnostics["ursell_residual"] = ursell_residual(self.system, scenario.beta)
        initial = mean_particle_number(self.g0)
        drift = max(abs(mean_particle_number(self.solution(t)) - initial) for t in report.times)
        report.diagnostics["particle_number_drift"] = drift
        if drift > self.tolerances["oracle"] * max(1.0, abs(initial)):
            logger.warning(
                f"[RUNNER] <N> from the correlations drifts by {drift:.3e}; "
                f"with {scenario.statistics.value} statistics exchange terms and the cutoff N={scenario.N} enter it"
            )
        norm = trace_norm(self.g0[1])
        report.diagnostics["initial_one_particle_norm"] = norm
        if scenario.initial.mode == "chaos" and norm * np.e < 1:
            report.diagnostics["particle_number_bound"] = particle_number_bound(norm)
        if scenario.observable is not None:
            report.diagnostics["observable_kind"] = str(scenario.observable.kind.value)
