"""
Algebra of graded operator sequences.

A sequence ``f = (f_0, f_1, ..., f_N)`` holds a complex scalar at level 0 and an
n-particle operator at level n. The star product, Exp/Ln with respect to it,
the cluster mappings and the trace series ``e^a`` are implemented here.
"""
import logging
import math
from dataclasses import dataclass
from itertools import chain
from typing import Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigurationMismatch, CutoffExceeded, LabelError, SequenceDomainError
from .partitions import (
    ClusterSet,
    distributions,
    partition_coefficient,
    partitions_of,
    partitions_of_clusterset,
    subsets,
)
from .tensorspace import Component, DenseOperator, TensorSpace, tolerance, trace_norm

logger = logging.getLogger(__name__)


def _freeze(op, expected: int) -> np.ndarray:
    array = np.array(op, dtype=complex)
    if array.shape != (expected, expected):
        raise ConfigurationMismatch(f"component of shape {array.shape}, expected {(expected, expected)}")
    array.setflags(write=False)
    return array


def place_product(space: TensorSpace, n: int, factors: Iterable[Tuple[Component, Sequence[int]]]) -> DenseOperator:
    """
    Product ``f_{|X_1|}(X_1) ... f_{|X_k|}(X_k)`` on n particles.

    Factors with an empty label set are scalars and scale the result.
    """
    scale = 1.0 + 0j
    placed = []
    for component, labels in factors:
        if len(labels) == 0:
            scale *= complex(component)
        else:
            placed.append((component, labels))
    if scale == 0:
        return space.zeros(n)
    product = space.place(placed, n)
    return product if scale == 1 else scale * product


@dataclass(frozen=True, eq=False)
class OperatorSequence:
    """Graded sequence (f_0, ..., f_N); immutable once built."""

    space: TensorSpace
    components: Tuple[Component, ...]
    state_like: bool = False

    def __post_init__(self):
        components = list(self.components)
        if not components:
            raise ConfigurationMismatch("a sequence needs at least the vacuum component")
        components[0] = complex(components[0])
        for n in range(1, len(components)):
            components[n] = _freeze(components[n], self.space.dim(n))
        object.__setattr__(self, "components", tuple(components))
        if self.state_like and not self.is_state_like():
            raise SequenceDomainError("state-like components must be invariant under S_n")

    @classmethod
    def zeros(cls, space: TensorSpace, cutoff: int) -> "OperatorSequence":
        return cls(space, (0j,) + tuple(space.zeros(n) for n in range(1, cutoff + 1)))

    @classmethod
    def unit(cls, space: TensorSpace, cutoff: int) -> "OperatorSequence":
        """The sequence (1, 0, 0, ...)."""
        return cls(space, (1 + 0j,) + tuple(space.zeros(n) for n in range(1, cutoff + 1)), state_like=True)

    @classmethod
    def from_components(
        cls, space: TensorSpace, components: Mapping[int, Component], cutoff: int, vacuum: complex = 0j
    ) -> "OperatorSequence":
        """Missing levels are zero; ``components`` may not reach above ``cutoff``."""
        if any(n > cutoff or n < 1 for n in components):
            raise CutoffExceeded(f"levels {sorted(components)} outside 1..{cutoff}")
        values = [vacuum] + [components.get(n, space.zeros(n)) for n in range(1, cutoff + 1)]
        return cls(space, tuple(values))

    @property
    def cutoff(self) -> int:
        return len(self.components) - 1

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, n: int) -> Component:
        if n < 0 or n > self.cutoff:
            raise CutoffExceeded(f"level {n} outside 0..{self.cutoff}")
        return self.components[n]

    def restrict(self, cutoff: int) -> "OperatorSequence":
        if cutoff > self.cutoff:
            raise CutoffExceeded(f"cannot extend a cutoff-{self.cutoff} sequence to {cutoff}")
        return OperatorSequence(self.space, self.components[: cutoff + 1])

    def with_component(self, n: int, value: Component) -> "OperatorSequence":
        if n < 0 or n > self.cutoff:
            raise CutoffExceeded(f"level {n} outside 0..{self.cutoff}")
        components = list(self.components)
        components[n] = value
        return OperatorSequence(self.space, tuple(components))

    def _compatible(self, other: "OperatorSequence"):
        if self.space != other.space or self.cutoff != other.cutoff:
            raise ConfigurationMismatch(
                f"sequences differ: {self.space}/N={self.cutoff} vs {other.space}/N={other.cutoff}"
            )

    def __add__(self, other: "OperatorSequence") -> "OperatorSequence":
        self._compatible(other)
        return OperatorSequence(self.space, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "OperatorSequence") -> "OperatorSequence":
        self._compatible(other)
        return OperatorSequence(self.space, tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar: complex) -> "OperatorSequence":
        return OperatorSequence(self.space, tuple(scalar * a for a in self.components))

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorSequence":
        return self * -1

    def residuals(self, other: "OperatorSequence") -> List[float]:
        """Trace-norm distance per level."""
        self._compatible(other)
        return [trace_norm(a - b) for a, b in zip(self.components, other.components)]

    def distance(self, other: "OperatorSequence") -> float:
        return max(self.residuals(other))

    def is_state_like(self, tol: float = None) -> bool:
        tol = tolerance("algebraic") if tol is None else tol
        for n in range(2, self.cutoff + 1):
            symmetric = self.space.symmetrizer(n)
            component = self.components[n]
            scale = max(1.0, float(np.max(np.abs(component))))
            if np.max(np.abs(symmetric @ component - component)) > tol * scale:
                return False
            if np.max(np.abs(component @ symmetric - component)) > tol * scale:
                return False
        return True


@dataclass(frozen=True, eq=False)
class ClusterIndexedSequence:
    """
    Sequence attached to a particle cluster {Y}.

    Component n acts on ``len(base) + n`` particles: the cluster occupies the
    leading positions, the n further particles follow it.
    """

    space: TensorSpace
    base: Tuple[int, ...]
    components: Tuple[DenseOperator, ...]

    def __post_init__(self):
        base = tuple(int(label) for label in self.base)
        if not base or len(set(base)) != len(base):
            raise LabelError(f"invalid base cluster {self.base}")
        object.__setattr__(self, "base", base)
        components = tuple(
            _freeze(component, self.space.dim(len(base) + n)) for n, component in enumerate(self.components)
        )
        object.__setattr__(self, "components", components)

    @property
    def size(self) -> int:
        return len(self.base)

    @property
    def cutoff(self) -> int:
        """Largest total particle count carried."""
        return self.size + len(self.components) - 1

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, n: int) -> DenseOperator:
        if n < 0 or n >= len(self.components):
            raise CutoffExceeded(f"level {n} outside 0..{len(self.components) - 1} for cluster {self.base}")
        return self.components[n]

    def residuals(self, other: "ClusterIndexedSequence") -> List[float]:
        if self.space != other.space or len(self) != len(other) or self.size != other.size:
            raise ConfigurationMismatch("cluster sequences differ in space, base size or length")
        return [trace_norm(a - b) for a, b in zip(self.components, other.components)]

    def distance(self, other: "ClusterIndexedSequence") -> float:
        return max(self.residuals(other))


AnySequence = Union[OperatorSequence, ClusterIndexedSequence]


def star_product(f: OperatorSequence, g: OperatorSequence) -> OperatorSequence:
    """(f * g)_n = S_n sum_{Z subset (1..n)} f_{|Z|}(Z) g_{n-|Z|}(complement)."""
    f._compatible(g)
    space = f.space
    components = [f[0] * g[0]]
    for n in range(1, f.cutoff + 1):
        labels = range(1, n + 1)
        total = space.zeros(n)
        for chosen in subsets(labels):
            rest = tuple(label for label in labels if label not in chosen)
            total += place_product(space, n, [(f[len(chosen)], chosen), (g[len(rest)], rest)])
        components.append(space.symmetrize(total, n))
    return OperatorSequence(space, tuple(components))


def exp_star(h: OperatorSequence) -> OperatorSequence:
    """Cluster expansion: level n is S_n sum over partitions of products of h."""
    if abs(h[0]) > tolerance("algebraic"):
        raise SequenceDomainError(f"Exp needs a vanishing vacuum component, got {h[0]}")
    space = h.space
    components = [1 + 0j]
    for n in range(1, h.cutoff + 1):
        total = space.zeros(n)
        for partition in partitions_of(range(1, n + 1)):
            total += place_product(space, n, [(h[len(block)], block) for block in partition])
        components.append(space.symmetrize(total, n))
    logger.debug(f"[SEQALGEBRA] exp_star up to N={h.cutoff}")
    return OperatorSequence(space, tuple(components))


def ln_star(u: OperatorSequence) -> OperatorSequence:
    """Inverse of exp_star: partition sums weighted by (-1)^(k-1) (k-1)!."""
    if abs(u[0] - 1) > tolerance("algebraic"):
        raise SequenceDomainError(f"Ln needs a unit vacuum component, got {u[0]}")
    space = u.space
    components = [0j]
    for n in range(1, u.cutoff + 1):
        total = space.zeros(n)
        for partition in partitions_of(range(1, n + 1)):
            term = place_product(space, n, [(u[len(block)], block) for block in partition])
            total += partition_coefficient(len(partition)) * term
        components.append(space.symmetrize(total, n))
    logger.debug(f"[SEQALGEBRA] ln_star up to N={u.cutoff}")
    return OperatorSequence(space, tuple(components))


def d_set(f: OperatorSequence, labels: Sequence[int]) -> ClusterIndexedSequence:
    """(d_Y f)_n = f_{s+n}(Y, s+1, ..., s+n) for symmetric components."""
    base = tuple(labels)
    s = len(base)
    if s > f.cutoff:
        raise CutoffExceeded(f"cluster of {s} particles above cutoff {f.cutoff}")
    return ClusterIndexedSequence(f.space, base, tuple(f[s + n] for n in range(f.cutoff - s + 1)))


def cluster_correlations(densities: OperatorSequence, labels: Sequence[int]) -> ClusterIndexedSequence:
    """
    Correlations of the particle cluster {Y} and n further particles.

    Inverts the generalized cluster expansion of the densities: the sum runs
    over partitions of ({Y}, s+1, ..., s+n) and every block contributes the
    density of its declasterized labels.
    """
    base = tuple(labels)
    s = len(base)
    if s > densities.cutoff:
        raise CutoffExceeded(f"cluster of {s} particles above cutoff {densities.cutoff}")
    space = densities.space
    cluster = tuple(range(1, s + 1))
    components = []
    for n in range(densities.cutoff - s + 1):
        total_count = s + n
        elements = ClusterSet((cluster,) + tuple((label,) for label in range(s + 1, total_count + 1)))
        total = space.zeros(total_count)
        for blocks in partitions_of_clusterset(elements):
            factors = [(densities[len(block.labels)], block.labels) for block in blocks]
            total += partition_coefficient(len(blocks)) * place_product(space, total_count, factors)
        components.append(space.symmetrize(total, total_count))
    return ClusterIndexedSequence(space, base, tuple(components))


def d_cluster(g: OperatorSequence, labels: Sequence[int]) -> ClusterIndexedSequence:
    """(d_{Y} g)_n = g_{1+n}({Y}, s+1, ..., s+n) for a correlation sequence g."""
    return cluster_correlations(exp_star(g), labels)


def cluster_star(*factors: AnySequence) -> ClusterIndexedSequence:
    """
    Generalized star product of sequences attached to disjoint clusters.

    Plain operator sequences take part with an empty cluster. Level n of the
    result distributes the n further particles over the factors in every way.
    """
    if not factors:
        raise ConfigurationMismatch("cluster_star needs at least one factor")
    space = factors[0].space
    cutoff = factors[0].cutoff
    for factor in factors:
        if factor.space != space or factor.cutoff != cutoff:
            raise ConfigurationMismatch("cluster_star factors differ in space or cutoff")
    bases = [getattr(factor, "base", ()) for factor in factors]
    base = tuple(sorted(chain.from_iterable(bases)))
    if not base:
        raise LabelError("cluster_star needs at least one cluster-indexed factor")
    if len(set(base)) != len(base):
        raise LabelError(f"clusters {bases} overlap")
    position = {label: index + 1 for index, label in enumerate(base)}
    s = len(base)
    components = []
    for n in range(cutoff - s + 1):
        extras = tuple(range(s + 1, s + n + 1))
        total = space.zeros(s + n)
        for assignment in distributions(extras, len(factors)):
            parts = []
            for factor, factor_base, assigned in zip(factors, bases, assignment):
                placed = tuple(position[label] for label in sorted(factor_base)) + assigned
                parts.append((factor[len(assigned)], placed))
            total += place_product(space, s + n, parts)
        components.append(space.symmetrize(total, s + n))
    return ClusterIndexedSequence(space, base, tuple(components))


def annihilation_exp(f: AnySequence, inverse: bool = False) -> AnySequence:
    """
    e^a f, level by level: sum_n (+-1)^n / n! Tr over the last n particles.

    ``inverse`` gives e^{-a}. The series stops at the cutoff.
    """
    space = f.space
    sign = -1 if inverse else 1
    offset = getattr(f, "size", 0)
    levels = len(f)
    components = []
    for m in range(levels):
        total = 0j if offset + m == 0 else space.zeros(offset + m)
        for n in range(levels - m):
            reduced = space.trace_tail(f[m + n], offset + m + n, n)
            total = total + (sign ** n / math.factorial(n)) * reduced
        components.append(total)
    if isinstance(f, ClusterIndexedSequence):
        return ClusterIndexedSequence(space, f.base, tuple(components))
    return OperatorSequence(space, tuple(components))
