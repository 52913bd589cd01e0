"""
Set-partition combinatorics for cluster expansions.

Partitions are generated lazily in restricted-growth-string order, which puts
blocks in canonical form (sorted by their first element in ground order).
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Hashable, Iterable, Iterator, Sequence, Tuple

from sympy import bell as sympy_bell
from sympy.functions.combinatorial.numbers import stirling

from .exceptions import LabelError

logger = logging.getLogger(__name__)

MAX_COUNTING_ORDER = 20

Labels = Tuple[int, ...]


@dataclass(frozen=True)
class SetPartition:
    """A partition of ``ground`` into nonempty, pairwise disjoint ``blocks``."""

    ground: Tuple[Hashable, ...]
    blocks: Tuple[Tuple[Hashable, ...], ...]

    def __post_init__(self):
        seen = []
        for block in self.blocks:
            if not block:
                raise LabelError("partition blocks must be nonempty")
            seen.extend(block)
        if len(seen) != len(set(seen)) or set(seen) != set(self.ground):
            raise LabelError(f"{self.blocks} is not a partition of {self.ground}")

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class ClusterSet:
    """
    An ordered set of disjoint particle clusters ({X_1}, ..., {X_k}).

    Each cluster is an opaque element; ``labels`` is the declasterization theta.
    """

    clusters: Tuple[Labels, ...]

    def __post_init__(self):
        clusters = tuple(tuple(sorted(int(label) for label in cluster)) for cluster in self.clusters)
        flat = [label for cluster in clusters for label in cluster]
        if any(not cluster for cluster in clusters):
            raise LabelError("clusters must be nonempty")
        if len(flat) != len(set(flat)):
            raise LabelError(f"clusters {clusters} overlap")
        object.__setattr__(self, "clusters", clusters)

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    @property
    def labels(self) -> Labels:
        return declasterize(self)


def _growth_strings(size: int) -> Iterator[Tuple[int, ...]]:
    prefix = [0]

    def extend(top: int):
        if len(prefix) == size:
            yield tuple(prefix)
            return
        for value in range(top + 2):
            prefix.append(value)
            yield from extend(max(top, value))
            prefix.pop()

    yield from extend(0)


def _partitions(elements: Tuple[Hashable, ...]) -> Iterator[Tuple[Tuple[Hashable, ...], ...]]:
    for string in _growth_strings(len(elements)):
        blocks = [[] for _ in range(max(string) + 1)]
        for element, block in zip(elements, string):
            blocks[block].append(element)
        yield tuple(tuple(block) for block in blocks)


def partitions_of(labels: Iterable[int]) -> Iterator[SetPartition]:
    """Every partition of the label set, each exactly once."""
    ground = tuple(sorted(labels))
    if not ground:
        raise LabelError("cannot partition an empty label set")
    for blocks in _partitions(ground):
        yield SetPartition(ground, blocks)


def partitions_into_two(labels: Iterable[int]) -> Iterator[Tuple[Labels, Labels]]:
    """Unordered splits (X1, X2) into two nonempty parts; X1 holds the smallest label."""
    ground = tuple(sorted(labels))
    if len(ground) < 2:
        raise LabelError(f"need at least two labels to split, got {ground}")
    first, rest = ground[0], ground[1:]
    for size in range(len(rest)):
        for companions in combinations(rest, size):
            left = (first,) + companions
            yield left, tuple(label for label in rest if label not in companions)


def subsets(labels: Iterable[int]) -> Iterator[Labels]:
    """All subsets including the empty one, by increasing size."""
    ground = tuple(sorted(labels))
    for size in range(len(ground) + 1):
        yield from combinations(ground, size)


def nonempty_subsets(labels: Iterable[int]) -> Iterator[Labels]:
    ground = tuple(sorted(labels))
    for size in range(1, len(ground) + 1):
        yield from combinations(ground, size)


def distributions(labels: Sequence[int], boxes: int) -> Iterator[Tuple[Labels, ...]]:
    """Assignments of ``labels`` to ``boxes`` ordered, possibly empty boxes."""
    labels = tuple(labels)
    for choice in product(range(boxes), repeat=len(labels)):
        yield tuple(
            tuple(label for label, box in zip(labels, choice) if box == target)
            for target in range(boxes)
        )


def _check_counting_order(n: int, k: int = 0):
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n > MAX_COUNTING_ORDER:
        raise OverflowError(f"counting is capped at n={MAX_COUNTING_ORDER}, got n={n}")


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind s(n, k)."""
    _check_counting_order(n, k)
    return int(stirling(n, k))


def bell(n: int) -> int:
    """Number of partitions of an n-element set; bell(0) == 1."""
    _check_counting_order(n)
    return int(sympy_bell(n))


def partition_coefficient(blocks: int) -> int:
    """Partition-lattice coefficient (-1)**(k-1) (k-1)! of a k-block partition."""
    return (-1) ** (blocks - 1) * math.factorial(blocks - 1)


def declasterize(cluster_set: ClusterSet) -> Labels:
    """theta: the union of all labels of the clusters."""
    return tuple(sorted(label for cluster in cluster_set.clusters for label in cluster))


def partitions_of_clusterset(cluster_set: ClusterSet) -> Iterator[Tuple[ClusterSet, ...]]:
    """Partitions of the clusters as opaque elements; each block is a ClusterSet."""
    if not len(cluster_set):
        raise LabelError("cannot partition an empty cluster set")
    for blocks in _partitions(cluster_set.clusters):
        yield tuple(ClusterSet(block) for block in blocks)
