"""
Scenario documents: the system, the initial data, the time grid and the
requested outputs of one run.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from algebra.exceptions import CorrDynError
from algebra.seqalgebra import OperatorSequence, ln_star
from algebra.tensorspace import Statistics, TensorSpace
from evolution.dynamics import HamiltonianSpec, ManyBodySystem
from observables.functionals import ObservableSequence

logger = logging.getLogger(__name__)


class ScenarioParseError(CorrDynError, ValueError):
    """A scenario file that is not UTF-8 encoded, well-formed JSON."""

    def __init__(self, path, line: int, column: int, message: str):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{self.path}:{line}:{column}: {message}")


@dataclass(frozen=True)
class InitialData:
    mode: str
    density: Optional[np.ndarray] = None
    components: Dict[int, np.ndarray] = field(default_factory=dict)
    normalize: bool = False


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    steps: int

    @property
    def times(self) -> Tuple[float, ...]:
        if self.steps == 1:
            return (float(self.stop),)
        return tuple(float(t) for t in np.linspace(self.start, self.stop, self.steps))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    d: int
    N: int
    hbar: float
    statistics: Statistics
    kinetic: np.ndarray
    potentials: Dict[int, np.ndarray]
    initial: InitialData
    time_grid: TimeGrid
    outputs: Tuple[str, ...] = ()
    observable: Optional[ObservableSequence] = None
    beta: Optional[float] = None
    oracle: bool = False
    tolerances: Dict[str, float] = field(default_factory=dict)
    source: Optional[str] = None
    digest: str = ""

    @classmethod
    def from_validated(cls, data: dict, source=None) -> "Scenario":
        initial = data["initial"]
        observable = data.get("observable")
        return cls(
            name=data["name"],
            d=data["d"],
            N=data["N"],
            hbar=data["hbar"],
            statistics=Statistics(data["statistics"]),
            kinetic=data["kinetic"],
            potentials={potential["order"]: potential["matrix"] for potential in data["potentials"]},
            initial=InitialData(
                mode=initial["mode"],
                density=initial.get("density"),
                components={component["n"]: component["matrix"] for component in initial["components"]},
                normalize=initial["normalize"],
            ),
            time_grid=TimeGrid(**data["time_grid"]),
            outputs=tuple(data["outputs"]),
            observable=None if observable is None else ObservableSequence(observable["matrix"], observable["order"]),
            beta=data.get("beta"),
            oracle=data["oracle"],
            tolerances=dict(data["tolerances"]),
            source=None if source is None else str(source),
            digest=data.get("digest", ""),
        )

    @property
    def space(self) -> TensorSpace:
        return TensorSpace(self.d, self.statistics)

    @property
    def spec(self) -> HamiltonianSpec:
        return HamiltonianSpec(self.kinetic, self.potentials, self.hbar)

    def system(self) -> ManyBodySystem:
        return ManyBodySystem(self.space, self.spec)

    def with_cutoff(self, cutoff: int) -> "Scenario":
        """The same scenario truncated (or padded with zero levels) at a new N."""
        components = {n: op for n, op in self.initial.components.items() if n <= cutoff}
        if len(components) < len(self.initial.components):
            logger.warning(f"[SCENARIO] cutoff {cutoff} drops initial levels above it")
        return replace(self, N=cutoff, initial=replace(self.initial, components=components))

    def initial_correlations(self) -> OperatorSequence:
        """Correlation operators g(0) for the configured initial-data mode."""
        space = self.space
        initial = self.initial
        if initial.mode == "chaos":
            density = initial.density
            if initial.normalize:
                density = density / np.trace(density)
            return OperatorSequence.from_components(space, {1: density}, self.N)
        if initial.mode == "correlations":
            return OperatorSequence.from_components(space, initial.components, self.N)
        return ln_star(OperatorSequence.from_components(space, initial.components, self.N, vacuum=1))


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario document."""
    from .serializers import ScenarioSerializer

    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw.count(b"\n", 0, exc.start) + 1
        column = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
        raise ScenarioParseError(path, line, column, f"invalid UTF-8 at byte {exc.start}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(path, exc.lineno, exc.colno, exc.msg) from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(path, 1, 1, "a scenario is a JSON object")
    serializer = ScenarioSerializer(data=data, context={"path": path})
    serializer.is_valid(raise_exception=True)
    scenario = serializer.save()
    scenario = replace(scenario, digest=hashlib.sha256(raw).hexdigest())
    logger.info(f"[SCENARIO] loaded {scenario.name} from {path} (d={scenario.d}, N={scenario.N})")
    return scenario
