from itertools import permutations

import numpy as np
import pytest

from algebra.seqalgebra import OperatorSequence
from algebra.tensorspace import Statistics, TensorSpace
from evolution.dynamics import HamiltonianSpec, ManyBodySystem

ALL_STATISTICS = [Statistics.BOSE, Statistics.FERMI, Statistics.BOLTZMANN]


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def hermitian(rng):
    """Factory for random Hermitian matrices of a given size and scale."""

    def make(size, scale=1.0):
        x = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        return scale * (x + x.conj().T) / 2

    return make


@pytest.fixture
def density_matrix(rng):
    """Factory for random positive matrices with a prescribed trace."""

    def make(size, trace=1.0):
        x = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
        rho = x @ x.conj().T
        return trace * rho / np.trace(rho).real

    return make


@pytest.fixture
def symmetric_potential(hermitian):
    """Factory for a Hermitian k-body potential invariant under relabeling."""

    def make(space, order=2, scale=0.3):
        raw = hermitian(space.d ** order, scale)
        relabelings = list(permutations(range(1, order + 1)))
        total = sum(space.permutation(pi) @ raw @ space.permutation(pi).conj().T for pi in relabelings)
        return total / len(relabelings)

    return make


@pytest.fixture
def correlation_sequence(symmetric_potential):
    """
    Factory for correlation sequences (0, g_1, ..., g_N) whose components are
    S A S for random relabeling-invariant Hermitian A.
    """

    def make(space, cutoff, scale=0.1):
        components = {}
        for n in range(1, cutoff + 1):
            S = space.symmetrizer(n)
            components[n] = S @ symmetric_potential(space, n, scale) @ S
        return OperatorSequence.from_components(space, components, cutoff)

    return make


@pytest.fixture
def make_system(hermitian, symmetric_potential):
    """Factory for a small interacting system with pair and optional triple potentials."""

    def make(stats=Statistics.BOSE, d=2, orders=(2,), hbar=1.0):
        space = TensorSpace(d, stats)
        potentials = {order: symmetric_potential(space, order) for order in orders}
        return ManyBodySystem(space, HamiltonianSpec(hermitian(d, 0.7), potentials, hbar))

    return make
