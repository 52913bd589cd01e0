"""
Finite-dimensional tensor-product spaces of identical particles.

The n-particle basis is the lexicographic product basis with particle 1 as the
slowest-varying index. Particle labels are 1-based everywhere, ``(1, ..., n)``.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import permutations
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from django.db import models

from .exceptions import DimensionBudgetExceeded, LabelError

logger = logging.getLogger(__name__)

DenseOperator = np.ndarray
Component = Union[complex, np.ndarray]


class Statistics(models.TextChoices):
    BOSE = "bose", "Bose"
    FERMI = "fermi", "Fermi"
    BOLTZMANN = "boltzmann", "Maxwell-Boltzmann"

    @property
    def sign(self) -> int:
        return -1 if self == Statistics.FERMI else 1


def dimension_budget() -> int:
    return int(settings.CORRDYN["DIMENSION_BUDGET"])


def tolerance(name: str) -> float:
    return float(settings.CORRDYN["TOLERANCES"][name])


def check_budget(d: int, n: int) -> int:
    """Return d**n, raising when it exceeds the configured budget."""
    size = d ** n
    budget = dimension_budget()
    if size > budget:
        raise DimensionBudgetExceeded(
            f"{n}-particle operators need {size} rows with d={d}, budget is {budget}"
        )
    return size


def permutation_parity(pi: Sequence[int]) -> int:
    """
    Transposition parity |pi| = n - (number of cycles).

    Works for 0-based and 1-based permutations alike.
    """
    offset = min(pi) if len(pi) else 0
    seen = set()
    cycles = 0
    for start in range(len(pi)):
        if start in seen:
            continue
        cycles += 1
        k = start
        while k not in seen:
            seen.add(k)
            k = pi[k] - offset
    return len(pi) - cycles


def compose_permutations(pi: Sequence[int], sigma: Sequence[int]) -> Tuple[int, ...]:
    """
    Permutation rho with p_rho == p_pi @ p_sigma for the basis action used here.

    ``rho(k) = sigma(pi(k))`` for 1-based tuples.
    """
    return tuple(sigma[p - 1] for p in pi)


def _basis_indices(n: int, d: int) -> np.ndarray:
    return np.indices((d,) * n).reshape(n, -1)


@lru_cache(maxsize=None)
def _permutation_matrix(pi: Tuple[int, ...], d: int) -> np.ndarray:
    n = len(pi)
    size = d ** n
    indices = _basis_indices(n, d)
    rows = np.ravel_multi_index(tuple(indices[np.asarray(pi) - 1]), (d,) * n)
    matrix = np.zeros((size, size), dtype=complex)
    matrix[rows, np.arange(size)] = 1.0
    matrix.setflags(write=False)
    return matrix


def permutation_operator(pi: Sequence[int], d: int) -> DenseOperator:
    """
    Matrix p_pi on the n-fold product space.

    Maps ``e_{i_1} x ... x e_{i_n}`` to ``e_{i_pi(1)} x ... x e_{i_pi(n)}``, with
    ``pi`` given as a 1-based tuple of images.
    """
    pi = tuple(int(p) for p in pi)
    if sorted(pi) != list(range(1, len(pi) + 1)):
        raise LabelError(f"{pi} is not a permutation of 1..{len(pi)}")
    check_budget(d, len(pi))
    return _permutation_matrix(pi, d)


@lru_cache(maxsize=None)
def _symmetrizer(n: int, d: int, stats: Statistics) -> np.ndarray:
    size = d ** n
    if stats == Statistics.BOLTZMANN or n == 1:
        projector = np.eye(size, dtype=complex)
    else:
        indices = _basis_indices(n, d)
        columns = np.arange(size)
        projector = np.zeros((size, size), dtype=complex)
        for pi in permutations(range(n)):
            rows = np.ravel_multi_index(tuple(indices[list(pi)]), (d,) * n)
            projector[rows, columns] += stats.sign ** permutation_parity(pi)
        projector /= math.factorial(n)
    projector.setflags(write=False)
    return projector


def symmetrizer(n: int, d: int, stats: Statistics) -> DenseOperator:
    """S_n = (1/n!) sum_pi (+-1)^|pi| p_pi; the identity for Maxwell-Boltzmann."""
    if n < 1:
        raise LabelError(f"symmetrizer needs n >= 1, got {n}")
    check_budget(d, n)
    return _symmetrizer(n, d, Statistics(stats))


def trace_norm(x: Component) -> float:
    """Sum of singular values; absolute value for the scalar vacuum component."""
    if np.ndim(x) == 0:
        return float(abs(x))
    return float(np.linalg.norm(x, "nuc"))


def is_hermitian(op: DenseOperator, tol: float = None) -> bool:
    tol = tolerance("projector") if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(op)))) if op.size else 1.0
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol * scale)


@dataclass(frozen=True)
class TensorSpace:
    """One-particle dimension d together with the exchange statistics."""

    d: int
    stats: Statistics = Statistics.BOSE

    def __post_init__(self):
        # particle numbers are read off operator shapes, which d = 1 cannot encode
        if int(self.d) < 2:
            raise ValueError(f"one-particle dimension must be at least 2, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "stats", Statistics(self.stats))

    def dim(self, n: int) -> int:
        return check_budget(self.d, n)

    def identity(self, n: int) -> DenseOperator:
        return np.eye(self.dim(n), dtype=complex)

    def zeros(self, n: int) -> DenseOperator:
        size = self.dim(n)
        return np.zeros((size, size), dtype=complex)

    def particle_count(self, op: DenseOperator) -> int:
        size = op.shape[0]
        n = round(math.log(size, self.d))
        if self.d ** n != size or op.shape != (size, size):
            raise LabelError(f"shape {op.shape} is not an n-particle operator for d={self.d}")
        return n

    def permutation(self, pi: Sequence[int]) -> DenseOperator:
        return permutation_operator(pi, self.d)

    def symmetrizer(self, n: int) -> DenseOperator:
        return symmetrizer(n, self.d, self.stats)

    def symmetrize(self, op: DenseOperator, n: int) -> DenseOperator:
        """Left multiplication by S_n."""
        if self.stats == Statistics.BOLTZMANN or n <= 1:
            return op
        return self.symmetrizer(n) @ op

    def place(self, factors: Iterable[Tuple[DenseOperator, Sequence[int]]], n: int) -> DenseOperator:
        """
        Tensor product of operators sitting on disjoint label sets of 1..n.

        Each factor acts on its labels in increasing order; uncovered labels
        carry the identity.
        """
        size = self.dim(n)
        used = []
        operators = []
        for op, labels in factors:
            labels = tuple(int(label) for label in labels)
            expected = self.d ** len(labels)
            if op.shape != (expected, expected):
                raise LabelError(
                    f"operator of shape {op.shape} cannot act on labels {labels} with d={self.d}"
                )
            used.extend(labels)
            operators.append(op)
        if len(set(used)) != len(used):
            raise LabelError(f"duplicate labels in {used}")
        if any(label < 1 or label > n for label in used):
            raise LabelError(f"labels {used} out of range 1..{n}")
        taken = set(used)
        rest = [label for label in range(1, n + 1) if label not in taken]
        if rest:
            operators.append(np.eye(self.d ** len(rest), dtype=complex))
            used.extend(rest)
        product = reduce(np.kron, operators)
        if used == list(range(1, n + 1)):
            return product
        order = list(np.argsort(used))
        tensor = product.reshape((self.d,) * (2 * n))
        return tensor.transpose(order + [n + axis for axis in order]).reshape(size, size)

    def embed(self, op: DenseOperator, labels: Sequence[int], n: int) -> DenseOperator:
        """op on the factors indexed by ``labels``, identity elsewhere."""
        return self.place([(op, labels)], n)

    def partial_trace(self, op: DenseOperator, keep: Iterable[int], n: int) -> Component:
        """
        Trace over the labels of 1..n outside ``keep``.

        The kept factors stay in increasing label order; an empty ``keep`` gives
        the full trace as a complex scalar.
        """
        keep = sorted(set(int(label) for label in keep))
        if any(label < 1 or label > n for label in keep):
            raise LabelError(f"labels {keep} out of range 1..{n}")
        if len(keep) == n:
            return op
        if not keep:
            return complex(np.trace(op))
        rows = list(range(n))
        columns = list(range(n, 2 * n))
        for label in range(1, n + 1):
            if label not in keep:
                columns[label - 1] = rows[label - 1]
        output = [rows[label - 1] for label in keep] + [columns[label - 1] for label in keep]
        reduced = np.einsum(op.reshape((self.d,) * (2 * n)), rows + columns, output)
        size = self.d ** len(keep)
        return reduced.reshape(size, size)

    def trace_tail(self, op: Component, n: int, count: int) -> Component:
        """Tr over the last ``count`` particles of an n-particle operator."""
        if count == 0:
            return op
        return self.partial_trace(op, range(1, n - count + 1), n)
