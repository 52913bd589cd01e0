"""
Von Neumann hierarchy for correlation operators and the BBGKY series for
marginal operators.

The symmetrizer is applied outermost: after the cumulants of the groups in
the solution, and after the interaction commutators in the generator. With
that placement the solution coincides with ``Ln(G(-t) Exp(g(0)))`` at every
level.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from algebra.exceptions import CutoffExceeded, SequenceDomainError
from algebra.partitions import ClusterSet, nonempty_subsets, partitions_into_two, partitions_of, partitions_of_clusterset
from algebra.seqalgebra import (
    ClusterIndexedSequence,
    OperatorSequence,
    annihilation_exp,
    cluster_correlations,
    d_cluster,
    exp_star,
    ln_star,
    place_product,
)
from algebra.tensorspace import DenseOperator, TensorSpace, tolerance, trace_norm

from .dynamics import ManyBodySystem, finite_difference_steps, relative_residual, richardson_limit

logger = logging.getLogger(__name__)

Marginals = Union[OperatorSequence, Mapping[int, DenseOperator]]


def _require_correlations(g: OperatorSequence):
    if abs(g[0]) > tolerance("algebraic"):
        raise SequenceDomainError(f"correlation sequences have a vanishing vacuum component, got {g[0]}")


def _levels(marginals: Marginals) -> Dict[int, DenseOperator]:
    if isinstance(marginals, OperatorSequence):
        return {n: marginals[n] for n in range(1, marginals.cutoff + 1)}
    return dict(marginals)


def _singletons(first: int, last: int) -> Tuple[Tuple[int], ...]:
    return tuple((label,) for label in range(first, last + 1))


def _cluster_elements(s: int, n: int) -> ClusterSet:
    """({1..s}, s+1, ..., s+n) as a cluster set."""
    return ClusterSet((tuple(range(1, s + 1)),) + _singletons(s + 1, s + n))


def nonlinear_group_apply(system: ManyBodySystem, f: OperatorSequence, t: float) -> OperatorSequence:
    """(A_t(f))_n = S_n sum_P A_{|P|}(t, {X_1}, ..., {X_|P|}) prod f_{|X_i|}(X_i)."""
    _require_correlations(f)
    space = system.space
    components = [0j]
    for n in range(1, f.cutoff + 1):
        total = space.zeros(n)
        for partition in partitions_of(range(1, n + 1)):
            product = place_product(space, n, [(f[len(block)], block) for block in partition])
            if not product.any():
                continue
            total += system.cumulant(t, ClusterSet(partition.blocks), product)
        components.append(space.symmetrize(total, n))
    return OperatorSequence(space, tuple(components))


def solve_hierarchy(system: ManyBodySystem, g0: OperatorSequence, t: float) -> OperatorSequence:
    """Correlation operators g(t) for initial correlations g(0)."""
    _require_correlations(g0)
    logger.info(f"[HIERARCHY] solving N={g0.cutoff} at t={t} for {system}")
    return nonlinear_group_apply(system, g0, t)


def propagate_densities(system: ManyBodySystem, densities: OperatorSequence, t: float) -> OperatorSequence:
    """Level-by-level G_n(-t) D_n."""
    propagated = [densities[0]] + [system.propagate(densities[n], t) for n in range(1, densities.cutoff + 1)]
    return OperatorSequence(system.space, tuple(propagated))


def direct_propagation_oracle(system: ManyBodySystem, g0: OperatorSequence, t: float) -> OperatorSequence:
    """Ln(G(-t) Exp(g(0))): densities propagated by the von Neumann group, then inverted."""
    return ln_star(propagate_densities(system, exp_star(g0), t))


def hierarchy_generator(system: ManyBodySystem, g: OperatorSequence) -> OperatorSequence:
    """
    Right side of the von Neumann hierarchy.

    Level n is -N_n g_n plus, for every partition with more than one block,
    S_n (-N^int({X_1}, ..., {X_|P|})) prod g_{|X_i|}(X_i).
    """
    _require_correlations(g)
    space = system.space
    components = [0j]
    for n in range(1, g.cutoff + 1):
        interaction = space.zeros(n)
        for partition in partitions_of(range(1, n + 1)):
            if len(partition) == 1:
                continue
            product = place_product(space, n, [(g[len(block)], block) for block in partition])
            if not product.any():
                continue
            interaction -= system.cluster_interaction_liouvillian(product, partition.blocks)
        components.append(-system.liouvillian(g[n]) + space.symmetrize(interaction, n))
    return OperatorSequence(space, tuple(components))


def two_body_generator(system: ManyBodySystem, g: OperatorSequence) -> OperatorSequence:
    """
    Hierarchy generator restricted to the pair potential: splits of (1..n) into
    two parts coupled by -N_int^(2)(i1, i2) with i1 and i2 on either side.
    """
    _require_correlations(g)
    space = system.space
    components = [0j]
    for n in range(1, g.cutoff + 1):
        interaction = space.zeros(n)
        if n >= 2 and system.spec.potential(2) is not None:
            for left, right in partitions_into_two(range(1, n + 1)):
                product = place_product(space, n, [(g[len(left)], left), (g[len(right)], right)])
                for i in left:
                    for j in right:
                        interaction -= system.interaction_liouvillian(product, (i,), (j,))
        components.append(-system.liouvillian(g[n]) + space.symmetrize(interaction, n))
    return OperatorSequence(space, tuple(components))


def weak_derivative(system: ManyBodySystem, test: DenseOperator, g: OperatorSequence, s: int) -> complex:
    """
    d/dt Tr(f_s g_s(t)) for a bounded test operator f_s, at the state g(t).

    Equals Tr((N_s f_s) g_s) plus, over partitions with more than one block,
    Tr(N^int({X_1}, ...)(f_s S_s) prod g_{|X_i|}(X_i)).
    """
    space = system.space
    value = complex(np.trace(system.liouvillian(test) @ g[s]))
    symmetrized = test @ space.symmetrizer(s)
    for partition in partitions_of(range(1, s + 1)):
        if len(partition) == 1:
            continue
        product = place_product(space, s, [(g[len(block)], block) for block in partition])
        adjoint = system.cluster_interaction_liouvillian(symmetrized, partition.blocks)
        value += complex(np.trace(adjoint @ product))
    return value


def _derivative_residual(evaluate, expected: Mapping[int, DenseOperator], t: float, steps) -> float:
    """Largest relative gap between extrapolated central differences of ``evaluate`` and ``expected``."""
    steps = finite_difference_steps() if steps is None else tuple(sorted(steps, reverse=True))
    ahead = {h: evaluate(t + h) for h in steps}
    behind = {h: evaluate(t - h) for h in steps}
    residual = 0.0
    for level, value in expected.items():
        samples = [(h, (ahead[h][level] - behind[h][level]) / (2.0 * h)) for h in steps]
        residual = max(residual, relative_residual(richardson_limit(samples), value))
    return residual


def strong_solution_residual(system: ManyBodySystem, g0: OperatorSequence, t: float, steps: Sequence[float] = None) -> float:
    """How far d/dt g(t) is from the hierarchy generator at g(t), over all levels."""
    generated = hierarchy_generator(system, solve_hierarchy(system, g0, t))
    expected = {n: generated[n] for n in range(1, g0.cutoff + 1)}
    residual = _derivative_residual(lambda time: nonlinear_group_apply(system, g0, time), expected, t, steps)
    logger.debug(f"[HIERARCHY] strong solution residual {residual:.3e} at t={t}")
    return residual


def nonlinear_bound(f: OperatorSequence, n: int) -> float:
    """n! e^(3n) c^n with c = max(1, max_k ||f_k||) over the levels 1..n."""
    largest = max(trace_norm(f[k]) for k in range(1, n + 1))
    c = max(largest, 1.0)
    return math.factorial(n) * math.e ** (3 * n) * c ** n


def chaos_correlations(system: ManyBodySystem, g1: DenseOperator, s: int, t: float) -> DenseOperator:
    """g_s(t) = S_s A_s(t, 1, ..., s) prod g_1(0, i) for one-particle initial data."""
    space = system.space
    product = space.place([(g1, (label,)) for label in range(1, s + 1)], s)
    return space.symmetrize(system.cumulant(t, _singletons(1, s), product), s)


def scattering_chaos_correlations(system: ManyBodySystem, g1: DenseOperator, s: int, t: float) -> DenseOperator:
    """The same chaos correlations from scattering cumulants acting on prod g_1(t, i)."""
    space = system.space
    evolved = system.propagate(g1, t)
    product = space.place([(evolved, (label,)) for label in range(1, s + 1)], s)
    return space.symmetrize(system.scattering_cumulant(t, _singletons(1, s), product), s)


def _cluster_factors(blocks, cluster, g_cluster, g):
    factors = []
    for block in blocks:
        labels = block.labels
        if cluster in block.clusters:
            factors.append((g_cluster[len(block) - 1], labels))
        else:
            factors.append((g[len(labels)], labels))
    return factors


def _check_cluster_datum(datum: ClusterIndexedSequence, s: int, cutoff: int):
    if datum.size != s or datum.cutoff != cutoff:
        raise CutoffExceeded(
            f"cluster datum for {datum.size} particles up to {datum.cutoff}, expected {s} up to {cutoff}"
        )


def solve_cluster_hierarchy(
    system: ManyBodySystem,
    g0: OperatorSequence,
    labels: Sequence[int],
    t: float,
    cluster_datum: ClusterIndexedSequence = None,
) -> ClusterIndexedSequence:
    """
    Correlations g_{1+n}(t, {Y}, s+1, ..., s+n) of the particle cluster {Y}.

    Sums over partitions of ({Y}, s+1, ..., s+n) the cumulants of the
    declasterized blocks; the block holding {Y} carries the cluster datum,
    the others the particle correlations g(0). The datum defaults to the
    cluster correlations of g(0); for chaos data it is S_s prod g_1(0, i).
    """
    _require_correlations(g0)
    base = tuple(labels)
    s = len(base)
    if s > g0.cutoff:
        raise CutoffExceeded(f"cluster of {s} particles above cutoff {g0.cutoff}")
    datum = d_cluster(g0, base) if cluster_datum is None else cluster_datum
    _check_cluster_datum(datum, s, g0.cutoff)
    space = system.space
    cluster = tuple(range(1, s + 1))
    components = []
    for n in range(g0.cutoff - s + 1):
        count = s + n
        total = space.zeros(count)
        for blocks in partitions_of_clusterset(_cluster_elements(s, n)):
            product = place_product(space, count, _cluster_factors(blocks, cluster, datum, g0))
            if not product.any():
                continue
            total += system.cumulant(t, ClusterSet(tuple(block.labels for block in blocks)), product)
        components.append(space.symmetrize(total, count))
    logger.info(f"[HIERARCHY] cluster of {s} particles solved at t={t}")
    return ClusterIndexedSequence(space, base, tuple(components))


def cluster_oracle(system: ManyBodySystem, g0: OperatorSequence, labels: Sequence[int], t: float) -> ClusterIndexedSequence:
    """Cluster correlations of the directly propagated densities."""
    return cluster_correlations(propagate_densities(system, exp_star(g0), t), labels)


def cluster_hierarchy_generator(
    system: ManyBodySystem, g_cluster: ClusterIndexedSequence, g: OperatorSequence
) -> ClusterIndexedSequence:
    """Right side of the hierarchy for correlations of a particle cluster."""
    space = system.space
    s = g_cluster.size
    cluster = tuple(range(1, s + 1))
    components = []
    for n in range(len(g_cluster)):
        count = s + n
        interaction = space.zeros(count)
        for blocks in partitions_of_clusterset(_cluster_elements(s, n)):
            if len(blocks) == 1:
                continue
            product = place_product(space, count, _cluster_factors(blocks, cluster, g_cluster, g))
            if not product.any():
                continue
            interaction -= system.cluster_interaction_liouvillian(product, [block.labels for block in blocks])
        components.append(-system.liouvillian(g_cluster[n]) + space.symmetrize(interaction, count))
    return ClusterIndexedSequence(space, g_cluster.base, tuple(components))


def _trace_series(space: TensorSpace, levels: Mapping[int, DenseOperator], s: int, cutoff: int) -> DenseOperator:
    total = space.zeros(s)
    for n in range(cutoff - s + 1):
        total = total + space.trace_tail(levels[s + n], s + n, n) / math.factorial(n)
    return total


def marginal_density(g_cluster: ClusterIndexedSequence) -> DenseOperator:
    """F_s = sum_n (1/n!) Tr_{s+1..s+n} g_{1+n}({Y}, s+1, ..., s+n)."""
    return annihilation_exp(g_cluster)[0]


def marginal_correlation(g: OperatorSequence, s: int) -> DenseOperator:
    """G_s = sum_n (1/n!) Tr_{s+1..s+n} g_{s+n}."""
    if s < 1 or s > g.cutoff:
        raise CutoffExceeded(f"marginal level {s} outside 1..{g.cutoff}")
    return _trace_series(g.space, _levels(g), s, g.cutoff)


def truncation_delta(g: OperatorSequence, s: int) -> float:
    """Change of G_s between cutoffs N-1 and N: the last term of its series."""
    if s < 1 or s > g.cutoff:
        raise CutoffExceeded(f"marginal level {s} outside 1..{g.cutoff}")
    n = g.cutoff - s
    return trace_norm(g.space.trace_tail(g[g.cutoff], g.cutoff, n)) / math.factorial(n)


def marginal_correlations_from_densities(space: TensorSpace, F: Mapping[int, DenseOperator], cutoff: int) -> Dict[int, DenseOperator]:
    """G_s = sum_P (-1)^(|P|-1) (|P|-1)! S_s prod F_{|X_i|}(X_i)."""
    logarithm = ln_star(OperatorSequence.from_components(space, F, cutoff, vacuum=1))
    return {s: logarithm[s] for s in range(1, cutoff + 1)}


def marginal_densities_from_correlations(space: TensorSpace, G: Mapping[int, DenseOperator], cutoff: int) -> Dict[int, DenseOperator]:
    """F = Exp(G) over the marginal levels."""
    exponential = exp_star(OperatorSequence.from_components(space, G, cutoff))
    return {s: exponential[s] for s in range(1, cutoff + 1)}


@dataclass
class MarginalSet:
    """Marginal density operators F_s and marginal correlation operators G_s, s = 1..N."""

    space: TensorSpace
    F: Dict[int, DenseOperator] = field(default_factory=dict)
    G: Dict[int, DenseOperator] = field(default_factory=dict)
    cutoff: int = 0

    @classmethod
    def from_correlations(cls, g: OperatorSequence) -> "MarginalSet":
        """F_s from the cluster correlations of g, G_s from the particle correlations."""
        densities = exp_star(g)
        F = {
            s: marginal_density(cluster_correlations(densities, range(1, s + 1)))
            for s in range(1, g.cutoff + 1)
        }
        G = {s: marginal_correlation(g, s) for s in range(1, g.cutoff + 1)}
        return cls(g.space, F, G, g.cutoff)

    def exp_consistency_residual(self) -> float:
        """max_s ||F_s - (Exp G)_s||."""
        rebuilt = marginal_densities_from_correlations(self.space, self.G, self.cutoff)
        return max(trace_norm(self.F[s] - rebuilt[s]) for s in range(1, self.cutoff + 1))


def grand_canonical_marginals(densities: OperatorSequence) -> Dict[int, DenseOperator]:
    """F_s = (I, D)^-1 sum_n (1/n!) Tr_{s+1..s+n} D_{s+n}."""
    reduced = annihilation_exp(densities)
    normalizer = reduced[0]
    if abs(normalizer) < tolerance("algebraic"):
        raise SequenceDomainError("the densities have a vanishing normalizing factor (I, D)")
    return {s: reduced[s] / normalizer for s in range(1, densities.cutoff + 1)}


def bbgky_solution(system: ManyBodySystem, F0: Marginals, s: int, t: float) -> DenseOperator:
    """F_s(t) = sum_n (1/n!) Tr_{s+1..s+n} A_{1+n}(t, {Y}, s+1, ..., s+n) F_{s+n}(0)."""
    levels = _levels(F0)
    cutoff = max(levels)
    if s < 1 or s > cutoff:
        raise CutoffExceeded(f"marginal level {s} outside 1..{cutoff}")
    space = system.space
    total = space.zeros(s)
    for n in range(cutoff - s + 1):
        evolved = system.cumulant(t, _cluster_elements(s, n), levels[s + n])
        total = total + space.trace_tail(evolved, s + n, n) / math.factorial(n)
    return total


def bbgky_oracle(system: ManyBodySystem, F0: Marginals, t: float) -> Dict[int, DenseOperator]:
    """e^a G(-t) e^-a F(0): marginals carried through the densities they come from."""
    levels = _levels(F0)
    cutoff = max(levels)
    marginals = OperatorSequence.from_components(system.space, levels, cutoff, vacuum=1)
    densities = annihilation_exp(marginals, inverse=True)
    evolved = annihilation_exp(propagate_densities(system, densities, t))
    return {s: evolved[s] for s in range(1, cutoff + 1)}


def bbgky_rhs(system: ManyBodySystem, F: Marginals, s: int) -> DenseOperator:
    """
    Right side of the truncated BBGKY hierarchy at level s:
    -N_s F_s + sum_n (1/n!) Tr_{s+1..s+n} sum_{Z in Y, Z nonempty} (-N_int(Z, s+1, ..., s+n)) F_{s+n}.
    """
    levels = _levels(F)
    cutoff = max(levels)
    space = system.space
    value = -system.liouvillian(levels[s])
    for n in range(1, cutoff - s + 1):
        count = s + n
        extras = tuple(range(s + 1, count + 1))
        commutators = space.zeros(count)
        for chosen in nonempty_subsets(range(1, s + 1)):
            commutators += system.interaction_liouvillian(levels[count], chosen, extras)
        value = value - space.trace_tail(commutators, count, n) / math.factorial(n)
    return value


def bbgky_residual(system: ManyBodySystem, F0: Marginals, s: int, t: float, steps: Sequence[float] = None) -> float:
    """How far d/dt F_s(t) is from the BBGKY right side evaluated on F(t)."""
    levels = _levels(F0)
    cutoff = max(levels)
    current = {k: bbgky_solution(system, levels, k, t) for k in range(s, cutoff + 1)}
    expected = {s: bbgky_rhs(system, current, s)}
    return _derivative_residual(lambda time: {s: bbgky_solution(system, levels, s, time)}, expected, t, steps)


def chaos_marginals(space: TensorSpace, F1: DenseOperator, cutoff: int) -> Dict[int, DenseOperator]:
    """Factorized marginals F_s = S_s prod F_1(i)."""
    return {
        s: space.symmetrize(space.place([(F1, (label,)) for label in range(1, s + 1)], s), s)
        for s in range(1, cutoff + 1)
    }


def chaos_marginal_density(system: ManyBodySystem, F1: DenseOperator, s: int, t: float, cutoff: int) -> DenseOperator:
    """F_s(t) for factorized initial marginals S prod F_1(0, i)."""
    return bbgky_solution(system, chaos_marginals(system.space, F1, cutoff), s, t)


def chaos_marginal_correlation(system: ManyBodySystem, G1: DenseOperator, s: int, t: float, cutoff: int) -> DenseOperator:
    """G_s(t) = sum_n (1/n!) Tr_{s+1..s+n} S A_{s+n}(t, 1, ..., s+n) prod G_1(0, i)."""
    norm = trace_norm(G1)
    if norm > math.exp(-1):
        logger.warning(f"[HIERARCHY] ||G_1(0)|| = {norm:.4f} exceeds 1/e, the untruncated series may diverge")
    space = system.space
    total = space.zeros(s)
    for n in range(cutoff - s + 1):
        total = total + space.trace_tail(chaos_correlations(system, G1, s + n, t), s + n, n) / math.factorial(n)
    return total


def ursell_steady(system: ManyBodySystem, beta: float, s: int) -> DenseOperator:
    """
    Ursell operators: g_1 = exp(-beta K) and
    g_2 = S_2 exp(-beta (K(1) + K(2))) (exp(-beta Phi^(2)) - I).
    """
    if beta < 0:
        raise ValueError(f"inverse temperature must be nonnegative, got {beta}")
    space = system.space
    kinetic = system.spec.kinetic
    if s == 1:
        return linalg.expm(-beta * kinetic)
    if s == 2:
        free = space.embed(kinetic, (1,), 2) + space.embed(kinetic, (2,), 2)
        potential = system.spec.potential(2)
        if potential is None:
            return space.zeros(2)
        excess = linalg.expm(-beta * potential) - space.identity(2)
        return space.symmetrize(linalg.expm(-beta * free) @ excess, 2)
    raise CutoffExceeded(f"Ursell operators are given for s = 1, 2, got {s}")


def ursell_sequence(system: ManyBodySystem, beta: float, cutoff: int = 2) -> OperatorSequence:
    """(0, g_1, g_2, 0, ...) up to the cutoff."""
    if cutoff < 2:
        raise CutoffExceeded("the Ursell sequence needs a cutoff of at least 2")
    levels = {1: ursell_steady(system, beta, 1), 2: ursell_steady(system, beta, 2)}
    return OperatorSequence.from_components(system.space, levels, cutoff)


def ursell_residual(system: ManyBodySystem, beta: float) -> float:
    """Largest trace norm of the hierarchy generator on levels 1 and 2 of the Ursell sequence."""
    generated = hierarchy_generator(system, ursell_sequence(system, beta, 2))
    residual = max(trace_norm(generated[1]), trace_norm(generated[2]))
    if residual > tolerance("algebraic"):
        logger.warning(f"[HIERARCHY] Ursell operators are not steady here, residual {residual:.3e}")
    return residual
