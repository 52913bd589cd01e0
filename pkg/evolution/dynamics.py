"""
Hamiltonians, von Neumann groups, Liouvillians and cumulants of groups.

Sign conventions: ``N f = -(i/hbar)(f H - H f)``, the von Neumann flow is
``dD/dt = -N D`` and ``G(-t) f = exp(-itH/hbar) f exp(itH/hbar)``. Interaction
Liouvillians follow ``N_int f = -(i/hbar)[f, Phi]``.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from scipy import linalg
from scipy.special import roots_legendre

from algebra.exceptions import ConfigurationMismatch, InvalidHamiltonian, LabelError
from algebra.partitions import ClusterSet, nonempty_subsets, partition_coefficient, partitions_of_clusterset
from algebra.tensorspace import DenseOperator, TensorSpace, is_hermitian, permutation_operator, tolerance, trace_norm

logger = logging.getLogger(__name__)


def _as_matrix(value, name: str) -> np.ndarray:
    matrix = np.array(value, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidHamiltonian(f"{name} must be a square matrix, got shape {matrix.shape}")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """
    One-body kinetic matrix K, k-body potentials Phi^(k) (k >= 2) and hbar.

    Potentials must be Hermitian and invariant under permutations of their k
    arguments.
    """

    kinetic: np.ndarray
    potentials: Mapping[int, np.ndarray] = field(default_factory=dict)
    hbar: float = 1.0

    def __post_init__(self):
        kinetic = _as_matrix(self.kinetic, "kinetic")
        d = kinetic.shape[0]
        tol = tolerance("projector")
        if not is_hermitian(kinetic, tol):
            raise InvalidHamiltonian("kinetic matrix is not Hermitian")
        potentials = {}
        for order, value in sorted(self.potentials.items()):
            order = int(order)
            potential = _as_matrix(value, f"potential of order {order}")
            if order < 2:
                raise InvalidHamiltonian(f"potential order {order}: one-body terms belong in the kinetic matrix")
            if potential.shape[0] != d ** order:
                raise InvalidHamiltonian(
                    f"potential of order {order} has shape {potential.shape}, expected {d ** order} rows"
                )
            if not is_hermitian(potential, tol):
                raise InvalidHamiltonian(f"potential of order {order} is not Hermitian")
            for i in range(1, order):
                swap = list(range(1, order + 1))
                swap[i - 1], swap[i] = swap[i], swap[i - 1]
                p = permutation_operator(swap, d)
                scale = max(1.0, float(np.max(np.abs(potential))))
                if np.max(np.abs(p @ potential @ p.T - potential)) > tol * scale:
                    raise InvalidHamiltonian(f"potential of order {order} is not permutation symmetric")
            potentials[order] = potential
        if not self.hbar > 0:
            raise InvalidHamiltonian(f"hbar must be positive, got {self.hbar}")
        object.__setattr__(self, "kinetic", kinetic)
        object.__setattr__(self, "potentials", potentials)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def d(self) -> int:
        return self.kinetic.shape[0]

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(sorted(self.potentials))

    def potential(self, order: int) -> Optional[np.ndarray]:
        return self.potentials.get(order)

    def without_interaction(self) -> "HamiltonianSpec":
        return HamiltonianSpec(self.kinetic, {}, self.hbar)


def assemble_hamiltonian(spec: HamiltonianSpec, space: TensorSpace, n: int) -> DenseOperator:
    """H_n = sum_i K(i) + sum_k sum_{i_1<...<i_k} Phi^(k)(i_1, ..., i_k)."""
    if n < 1:
        raise LabelError(f"Hamiltonian needs n >= 1, got {n}")
    if spec.d != space.d:
        raise ConfigurationMismatch(f"Hamiltonian for d={spec.d} on a d={space.d} space")
    hamiltonian = space.zeros(n)
    for label in range(1, n + 1):
        hamiltonian += space.embed(spec.kinetic, (label,), n)
    for order, potential in spec.potentials.items():
        for labels in combinations(range(1, n + 1), order):
            hamiltonian += space.embed(potential, labels, n)
    return hamiltonian


@dataclass(frozen=True, eq=False)
class Propagator:
    """Eigendecomposition of H_n; ``unitary(t)`` is exp(-itH/hbar)."""

    n: int
    eigvals: np.ndarray
    eigvecs: np.ndarray
    hbar: float = 1.0

    @classmethod
    def from_hamiltonian(cls, hamiltonian: DenseOperator, n: int, hbar: float = 1.0) -> "Propagator":
        eigvals, eigvecs = linalg.eigh(hamiltonian)
        return cls(n, eigvals, eigvecs, hbar)

    def unitary(self, t: float) -> DenseOperator:
        phases = np.exp(-1j * t * self.eigvals / self.hbar)
        return (self.eigvecs * phases) @ self.eigvecs.conj().T

    def apply(self, f: DenseOperator, t: float) -> DenseOperator:
        """G_n(-t) f."""
        if f.shape != self.eigvecs.shape:
            raise ConfigurationMismatch(f"operator of shape {f.shape} for a {self.eigvecs.shape} propagator")
        u = self.unitary(t)
        return u @ f @ u.conj().T


def propagate(
    generator: Union[Propagator, DenseOperator], f: DenseOperator, t: float, hbar: float = 1.0, n: int = None
) -> DenseOperator:
    """
    Unitary conjugation G(-t) f from a Propagator or from a Hermitian H_n.

    A bare H needs its particle number ``n``.
    """
    if not isinstance(generator, Propagator):
        if generator.shape != f.shape:
            raise ConfigurationMismatch(f"H of shape {generator.shape} against f of shape {f.shape}")
        if n is None or n < 1:
            raise LabelError(f"propagating with a bare Hamiltonian needs its particle number, got {n}")
        generator = Propagator.from_hamiltonian(generator, n, hbar)
    return generator.apply(f, t)


def liouvillian(hamiltonian: DenseOperator, f: DenseOperator, hbar: float = 1.0) -> DenseOperator:
    """N f = -(i/hbar)(f H - H f)."""
    if hamiltonian.shape != f.shape:
        raise ConfigurationMismatch(f"H of shape {hamiltonian.shape} against f of shape {f.shape}")
    return (-1j / hbar) * (f @ hamiltonian - hamiltonian @ f)


def relative_residual(actual, expected, floor: float = 1e-12) -> float:
    """Trace-norm error relative to the expected value; absolute when that vanishes."""
    difference = trace_norm(actual - expected)
    scale = trace_norm(expected)
    return difference / scale if scale > floor else difference


def richardson_limit(samples: Sequence[Tuple[float, np.ndarray]]) -> np.ndarray:
    """
    Extrapolate q(h) to h -> 0 assuming a power series in h.

    ``samples`` are (h, q(h)) pairs with decreasing h.
    """
    steps = [h for h, _ in samples]
    table = [np.asarray(value) for _, value in samples]
    size = len(samples)
    for order in range(1, size):
        # table[k] holds the order-1 estimate from steps[k + order - 1]
        table = [
            table[i - order + 1] + (table[i - order + 1] - table[i - order]) / (steps[i - order] / steps[i] - 1.0)
            for i in range(order, size)
        ]
    return table[-1]


def gauss_legendre(a: float, b: float, nodes: int = None, panels: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre points and weights on [a, b]."""
    nodes = settings.CORRDYN["QUADRATURE_NODES"] if nodes is None else nodes
    reference, weights = roots_legendre(nodes)
    edges = np.linspace(a, b, panels + 1)
    points = []
    scaled = []
    for left, right in zip(edges[:-1], edges[1:]):
        half = (right - left) / 2.0
        points.append(left + half * (reference + 1.0))
        scaled.append(half * weights)
    return np.concatenate(points), np.concatenate(scaled)


def finite_difference_steps() -> Tuple[float, ...]:
    return tuple(settings.CORRDYN["FINITE_DIFFERENCE_STEPS"])


def cumulant_norm_bound(n: int) -> float:
    """n! e^n, the growth bound of the n-th order cumulant on unit trace norm."""
    return math.factorial(n) * math.e ** n


@dataclass
class GeneratorCheck:
    """Finite-difference estimate of a generator against its analytic form."""

    steps: Tuple[float, ...]
    quotients: List[np.ndarray]
    limit: np.ndarray
    expected: np.ndarray
    relative_error: float

    def passed(self, tol: float = None) -> bool:
        tol = tolerance("generator") if tol is None else tol
        return self.relative_error <= tol


def _conjugate(unitary: DenseOperator, f: DenseOperator) -> DenseOperator:
    return unitary @ f @ unitary.conj().T


class Conjugation:
    """Superoperator f -> W f W^dagger for a fixed unitary W."""

    def __init__(self, unitary: DenseOperator):
        self.unitary = unitary

    def __call__(self, f: DenseOperator) -> DenseOperator:
        return _conjugate(self.unitary, f)


class ManyBodySystem:
    """
    A tensor space together with a Hamiltonian specification.

    Hamiltonians and their eigendecompositions are built on demand per particle
    number and kept for reuse; the object is otherwise stateless.
    """

    def __init__(self, space: TensorSpace, spec: HamiltonianSpec):
        if space.d != spec.d:
            raise ConfigurationMismatch(f"Hamiltonian for d={spec.d} on a d={space.d} space")
        self.space = space
        self.spec = spec
        self._hamiltonians: Dict[int, DenseOperator] = {}
        self._propagators: Dict[int, Propagator] = {}

    def __repr__(self):
        return f"ManyBodySystem(d={self.space.d}, stats={self.space.stats}, orders={self.spec.orders})"

    @property
    def hbar(self) -> float:
        return self.spec.hbar

    def hamiltonian(self, n: int) -> DenseOperator:
        if n not in self._hamiltonians:
            hamiltonian = assemble_hamiltonian(self.spec, self.space, n)
            hamiltonian.setflags(write=False)
            self._hamiltonians[n] = hamiltonian
        return self._hamiltonians[n]

    def propagator(self, n: int) -> Propagator:
        if n not in self._propagators:
            self._propagators[n] = Propagator.from_hamiltonian(self.hamiltonian(n), n, self.hbar)
            logger.debug(f"[DYNAMICS] diagonalized H_{n} ({self.space.dim(n)} rows)")
        return self._propagators[n]

    def block_unitary(self, t: float, blocks: Sequence[Sequence[int]], n: int) -> DenseOperator:
        """Product of exp(-itH_B/hbar) over disjoint label blocks B of 1..n."""
        return self.space.place([(self.propagator(len(block)).unitary(t), block) for block in blocks], n)

    def propagate(self, f: DenseOperator, t: float, labels: Sequence[int] = None) -> DenseOperator:
        """G(-t) on the particles ``labels`` of f (all of them by default)."""
        n = self.space.particle_count(f)
        if labels is None or tuple(sorted(labels)) == tuple(range(1, n + 1)):
            return propagate(self.propagator(n), f, t)
        return _conjugate(self.block_unitary(t, [tuple(sorted(labels))], n), f)

    def liouvillian(self, f: DenseOperator) -> DenseOperator:
        n = self.space.particle_count(f)
        return liouvillian(self.hamiltonian(n), f, self.hbar)

    def interaction_liouvillian(self, f: DenseOperator, *groups: Sequence[int]) -> DenseOperator:
        """
        -(i/hbar)[f, Phi^(k)] with Phi of order k = sum |Z_r| on the union of the groups.

        A missing potential order gives the zero map.
        """
        n = self.space.particle_count(f)
        labels = tuple(sorted(label for group in groups for label in group))
        if len(set(labels)) != len(labels):
            raise LabelError(f"interaction groups {groups} overlap")
        potential = self.spec.potential(len(labels))
        if potential is None:
            return np.zeros_like(f)
        placed = self.space.embed(potential, labels, n)
        return (-1j / self.hbar) * (f @ placed - placed @ f)

    def cluster_interaction_liouvillian(self, f: DenseOperator, clusters: Sequence[Sequence[int]]) -> DenseOperator:
        """
        N^int({X_1}, ..., {X_m}) f: the sum over nonempty Z_r in X_r of N_int(Z_1, ..., Z_m).

        Only potentials touching every cluster contribute.
        """
        n = self.space.particle_count(f)
        clusters = [tuple(cluster) for cluster in clusters]
        minimum = len(clusters)
        maximum = sum(len(cluster) for cluster in clusters)
        total = np.zeros_like(f)
        for order in self.spec.orders:
            if order < minimum or order > maximum:
                continue
            placed_sum = self.space.zeros(n)
            for choice in self._touching_sets(clusters, order):
                placed_sum += self.space.embed(self.spec.potential(order), choice, n)
            total += (-1j / self.hbar) * (f @ placed_sum - placed_sum @ f)
        return total

    @staticmethod
    def _touching_sets(clusters: Sequence[Tuple[int, ...]], order: int):
        def extend(index: int, chosen: Tuple[int, ...]):
            if index == len(clusters):
                if len(chosen) == order:
                    yield tuple(sorted(chosen))
                return
            for part in nonempty_subsets(clusters[index]):
                if len(chosen) + len(part) <= order:
                    yield from extend(index + 1, chosen + part)

        yield from extend(0, ())

    def cumulant(self, t: float, clusters, f: DenseOperator) -> DenseOperator:
        """
        A_{|cs|}(t, cs) f = sum over partitions P' of the clusters of
        (-1)^(|P'|-1) (|P'|-1)! prod_k G(-t, theta(Z_k)) f.
        """
        cluster_set = clusters if isinstance(clusters, ClusterSet) else ClusterSet(tuple(clusters))
        n = self.space.particle_count(f)
        if cluster_set.labels != tuple(range(1, n + 1)):
            raise LabelError(f"clusters {cluster_set.clusters} do not cover the {n} particles of f")
        if len(cluster_set) == 1:
            return self.propagator(n).apply(f, t)
        total = np.zeros_like(f)
        for blocks in partitions_of_clusterset(cluster_set):
            unitary = self.block_unitary(t, [block.labels for block in blocks], n)
            total += partition_coefficient(len(blocks)) * _conjugate(unitary, f)
        return total

    def cumulant_generator(self, clusters, f: DenseOperator) -> DenseOperator:
        """
        Analytic t-derivative of the cumulant at t=0.

        One cluster gives -N f; several give -N^int({X_1}, ..., {X_m}) f.
        """
        cluster_set = clusters if isinstance(clusters, ClusterSet) else ClusterSet(tuple(clusters))
        if len(cluster_set) == 1:
            return -self.liouvillian(f)
        return -self.cluster_interaction_liouvillian(f, cluster_set.clusters)

    def _check(self, quotient: Callable[[float], np.ndarray], expected: np.ndarray, steps) -> GeneratorCheck:
        steps = finite_difference_steps() if steps is None else tuple(sorted(steps, reverse=True))
        quotients = [quotient(h) for h in steps]
        limit = richardson_limit(list(zip(steps, quotients)))
        return GeneratorCheck(steps, quotients, limit, expected, relative_residual(limit, expected))

    def cumulant_generator_check(self, clusters, f: DenseOperator, steps: Sequence[float] = None) -> GeneratorCheck:
        """(1/t) A(t) f at small t, extrapolated, against the interaction Liouvillian."""
        check = self._check(lambda h: self.cumulant(h, clusters, f) / h, self.cumulant_generator(clusters, f), steps)
        logger.debug(f"[DYNAMICS] cumulant generator check, relative error {check.relative_error:.3e}")
        return check

    def liouvillian_check(self, f: DenseOperator, steps: Sequence[float] = None) -> GeneratorCheck:
        """(G(-t) f - f)/t against -N f."""
        return self._check(lambda h: (self.propagate(f, h) - f) / h, -self.liouvillian(f), steps)

    def scattering_unitary(self, t: float, labels: Sequence[int], n: int) -> DenseOperator:
        """W with G_s(-t, Y) prod_k G_1(t, k) f == W f W^dagger."""
        labels = tuple(sorted(labels))
        free = self.space.place([(self.propagator(1).unitary(-t), (label,)) for label in labels], n)
        return self.block_unitary(t, [labels], n) @ free

    def scattering_operator(self, t: float, labels: Sequence[int], n: int = None) -> Conjugation:
        """Scattering operator G_s(-t, Y) prod_{k in Y} G_1(t, k) acting inside n particles."""
        n = len(labels) if n is None else n
        return Conjugation(self.scattering_unitary(t, labels, n))

    def scattering_generator(self, labels: Sequence[int], f: DenseOperator) -> DenseOperator:
        """-sum_{k>=2} sum_{i_1<...<i_k in Y} N_int^(k) f."""
        total = np.zeros_like(f)
        labels = tuple(sorted(labels))
        for order in self.spec.orders:
            for chosen in combinations(labels, order):
                total -= self.interaction_liouvillian(f, chosen)
        return total

    def scattering_generator_check(self, labels: Sequence[int], f: DenseOperator, steps: Sequence[float] = None) -> GeneratorCheck:
        n = self.space.particle_count(f)
        return self._check(
            lambda h: (self.scattering_operator(h, labels, n)(f) - f) / h,
            self.scattering_generator(labels, f),
            steps,
        )

    def scattering_cumulant(self, t: float, clusters, f: DenseOperator) -> DenseOperator:
        """Cumulant built from scattering operators instead of groups."""
        cluster_set = clusters if isinstance(clusters, ClusterSet) else ClusterSet(tuple(clusters))
        n = self.space.particle_count(f)
        total = np.zeros_like(f)
        for blocks in partitions_of_clusterset(cluster_set):
            unitary = reduce(np.matmul, [self.scattering_unitary(t, block.labels, n) for block in blocks])
            total += partition_coefficient(len(blocks)) * _conjugate(unitary, f)
        return total

    def duhamel_second_cumulant(self, f: DenseOperator, t: float, nodes: int = None, panels: int = 1) -> DenseOperator:
        """
        Second-order cumulant as the Duhamel integral
        int_0^t G_2(-t+t1) (-N_int^(2)) G_1(-t1) G_1(-t1) f dt1.
        """
        if self.space.particle_count(f) != 2:
            raise LabelError("the Duhamel form covers two-particle operators")
        points, weights = gauss_legendre(0.0, t, nodes, panels)
        total = np.zeros_like(f)
        for point, weight in zip(points, weights):
            free = _conjugate(self.block_unitary(point, [(1,), (2,)], 2), f)
            kicked = -self.interaction_liouvillian(free, (1,), (2,))
            total += weight * self.propagate(kicked, t - point)
        return total
