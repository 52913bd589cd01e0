"""
Average values and dispersions of observables over the grand-canonical,
correlation and marginal representations of a state.
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np
from django.db import models

from algebra.exceptions import CutoffExceeded, InvalidHamiltonian, SequenceDomainError
from algebra.seqalgebra import ClusterIndexedSequence, OperatorSequence
from algebra.tensorspace import Component, DenseOperator, TensorSpace, is_hermitian, tolerance
from evolution.hierarchy import marginal_correlation, marginal_density

logger = logging.getLogger(__name__)


class ObservableKind(models.TextChoices):
    ADDITIVE = "additive", "Additive"
    S_PARTICLE = "s_particle", "s-particle"


@dataclass(frozen=True, eq=False)
class ObservableSequence:
    """
    A = (0, A_1, A_2, ...) built from one Hermitian s-particle operator a_s:
    A_n is the sum of a_s over all s-element label subsets of (1..n).
    """

    operator: DenseOperator
    order: int = 1

    def __post_init__(self):
        operator = np.array(self.operator, dtype=complex)
        if self.order < 1:
            raise ValueError(f"observable order must be at least 1, got {self.order}")
        if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:
            raise InvalidHamiltonian(f"observable must be a square matrix, got shape {operator.shape}")
        if not is_hermitian(operator):
            raise InvalidHamiltonian("observable operator is not Hermitian")
        operator.setflags(write=False)
        object.__setattr__(self, "operator", operator)

    @property
    def kind(self) -> ObservableKind:
        return ObservableKind.ADDITIVE if self.order == 1 else ObservableKind.S_PARTICLE

    def check(self, space: TensorSpace):
        expected = space.dim(self.order)
        if self.operator.shape != (expected, expected):
            raise InvalidHamiltonian(
                f"{self.order}-particle observable needs shape ({expected}, {expected}), got {self.operator.shape}"
            )
        for pi in permutations(range(1, self.order + 1)):
            p = space.permutation(pi)
            if not np.allclose(p @ self.operator @ p.conj().T, self.operator, atol=tolerance("projector")):
                raise InvalidHamiltonian(f"observable is not symmetric under the relabeling {pi}")

    def component(self, n: int, space: TensorSpace) -> Component:
        if n == 0:
            return 0j
        total = space.zeros(n)
        for labels in combinations(range(1, n + 1), self.order):
            total += space.embed(self.operator, labels, n)
        return total


def _real(value: complex, name: str) -> float:
    if abs(value.imag) > tolerance("algebraic") * max(1.0, abs(value)):
        logger.warning(f"[OBSERVABLES] {name} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def average_grandcanonical(observable: ObservableSequence, densities: OperatorSequence) -> float:
    """<A> = (I, D)^-1 sum_n (1/n!) Tr A_n D_n over the levels kept in D."""
    space = densities.space
    observable.check(space)
    normalizer = complex(densities[0])
    value = 0j
    for n in range(1, densities.cutoff + 1):
        weight = 1.0 / math.factorial(n)
        normalizer += weight * complex(np.trace(densities[n]))
        if n >= observable.order:
            value += weight * complex(np.trace(observable.component(n, space) @ densities[n]))
    if abs(normalizer) < tolerance("algebraic"):
        raise SequenceDomainError("the densities have a vanishing normalizing factor (I, D)")
    return _real(value / normalizer, "grand-canonical average")


def average_marginal(observable: ObservableSequence, marginal: DenseOperator) -> float:
    """<A> = (1/s!) Tr a_s F_s."""
    value = complex(np.trace(observable.operator @ marginal)) / math.factorial(observable.order)
    return _real(value, "marginal average")


def average_correlation(observable: ObservableSequence, g_cluster: ClusterIndexedSequence) -> float:
    """<A> = (1/s!) sum_n (1/n!) Tr a_s g_{1+n}({Y}, s+1, ..., s+n)."""
    if g_cluster.size != observable.order:
        raise CutoffExceeded(f"cluster of {g_cluster.size} particles for a {observable.order}-particle observable")
    observable.check(g_cluster.space)
    return average_marginal(observable, marginal_density(g_cluster))


def mean_particle_number(g: OperatorSequence) -> float:
    """<N> = sum_n (1/n!) Tr g_{1+n}."""
    if g.cutoff < 1:
        return 0.0
    return _real(complex(np.trace(marginal_correlation(g, 1))), "mean particle number")


def particle_number_bound(norm_g1: float) -> float:
    """Bound e x / (1 - e x)^2 on |<N>| for chaos data with ||g_1(0)|| = x < 1/e."""
    scaled = math.e * norm_g1
    if not 0 <= scaled < 1:
        raise ValueError(f"the bound needs 0 <= ||g_1|| < 1/e, got {norm_g1}")
    return scaled / (1.0 - scaled) ** 2


def _check_additive(observable: ObservableSequence):
    if observable.kind != ObservableKind.ADDITIVE:
        raise ValueError("dispersion is defined here for additive observables")


def _dispersion(observable: ObservableSequence, space: TensorSpace, one: DenseOperator, two: DenseOperator, mean: float) -> float:
    a = observable.operator
    value = complex(np.trace((a @ a - mean ** 2 * space.identity(1)) @ one))
    value += complex(np.trace(np.kron(a, a) @ two))
    result = _real(value, "dispersion")
    if result < -tolerance("oracle"):
        logger.warning(f"[OBSERVABLES] dispersion {result:.3e} is negative, the cutoff is too low for this state")
    return result


def dispersion(observable: ObservableSequence, g: OperatorSequence) -> float:
    """
    <(A - <A>)^2> of an additive observable from the particle correlations:
    sum_n (1/n!) Tr (a^2 - <A>^2) g_{1+n} + sum_n (1/n!) Tr a(1) a(2) g_{2+n}.
    """
    _check_additive(observable)
    if g.cutoff < 2:
        raise CutoffExceeded("dispersion needs correlations up to at least two particles")
    observable.check(g.space)
    one = marginal_correlation(g, 1)
    mean = _real(complex(np.trace(observable.operator @ one)), "additive average")
    return _dispersion(observable, g.space, one, marginal_correlation(g, 2), mean)


def dispersion_marginal(observable: ObservableSequence, space: TensorSpace, F1: DenseOperator, F2: DenseOperator) -> float:
    """Tr (a^2 - <A>^2) F_1 + Tr a(1) a(2) (F_2 - S_2 F_1 F_1)."""
    _check_additive(observable)
    observable.check(space)
    mean = average_marginal(observable, F1)
    connected = F2 - space.symmetrize(np.kron(F1, F1), 2)
    return _dispersion(observable, space, F1, connected, mean)
