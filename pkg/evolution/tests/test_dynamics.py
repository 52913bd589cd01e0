import math

import numpy as np
import pytest

from algebra.exceptions import InvalidHamiltonian, LabelError
from algebra.partitions import ClusterSet
from algebra.tensorspace import Statistics, TensorSpace, trace_norm

from ..dynamics import (
    HamiltonianSpec,
    ManyBodySystem,
    assemble_hamiltonian,
    cumulant_norm_bound,
    gauss_legendre,
    propagate,
    relative_residual,
    richardson_limit,
)


def test_hamiltonian_spec_validation(hermitian, symmetric_potential):
    """test non-Hermitian, misshapen and asymmetric inputs are refused"""
    space = TensorSpace(2)
    with pytest.raises(InvalidHamiltonian):
        HamiltonianSpec(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(InvalidHamiltonian):
        HamiltonianSpec(hermitian(2), {2: hermitian(3)})
    with pytest.raises(InvalidHamiltonian):
        HamiltonianSpec(hermitian(2), {1: hermitian(2)})
    with pytest.raises(InvalidHamiltonian):
        HamiltonianSpec(hermitian(2), hbar=0.0)
    asymmetric = np.diag([0.0, 1.0, 2.0, 3.0]).astype(complex)
    with pytest.raises(InvalidHamiltonian):
        HamiltonianSpec(hermitian(2), {2: asymmetric})
    spec = HamiltonianSpec(hermitian(2), {2: symmetric_potential(space)})
    assert spec.orders == (2,)
    assert spec.without_interaction().orders == ()


def test_assembled_hamiltonian_is_symmetric(make_system):
    """test H_3 is Hermitian and commutes with relabelings"""
    system = make_system(Statistics.BOSE, orders=(2, 3))
    hamiltonian = assemble_hamiltonian(system.spec, system.space, 3)
    assert np.allclose(hamiltonian, hamiltonian.conj().T)
    for pi in [(2, 1, 3), (3, 1, 2)]:
        p = system.space.permutation(pi)
        assert np.allclose(p @ hamiltonian, hamiltonian @ p)


def test_free_hamiltonian_is_a_sum_of_kinetic_terms(hermitian):
    """test H_2 without potentials is K x I + I x K"""
    kinetic = hermitian(3)
    hamiltonian = assemble_hamiltonian(HamiltonianSpec(kinetic), TensorSpace(3), 2)
    assert np.allclose(hamiltonian, np.kron(kinetic, np.eye(3)) + np.kron(np.eye(3), kinetic))


def test_propagation_is_a_trace_preserving_group(make_system, hermitian):
    """test G(0) is the identity, G(-s)G(-t) == G(-s-t) and traces are kept"""
    system = make_system()
    f = hermitian(4)
    assert np.allclose(system.propagate(f, 0.0), f)
    twice = system.propagate(system.propagate(f, 0.3), 0.4)
    assert np.allclose(twice, system.propagate(f, 0.7))
    assert np.trace(system.propagate(f, 1.1)) == pytest.approx(np.trace(f))


@pytest.mark.parametrize("t", [0.4, 2.5])
def test_propagation_is_a_trace_norm_isometry(make_system, hermitian, t):
    """test ||G(-t) f||_1 == ||f||_1"""
    system = make_system(orders=(2, 3))
    f = hermitian(8)
    assert trace_norm(system.propagate(f, t)) == pytest.approx(trace_norm(f), rel=1e-10)


def test_operators_commuting_with_the_hamiltonian_are_stationary(hermitian, symmetric_potential):
    """test G(-t) f == f when [f, H_2] = 0"""
    space = TensorSpace(2)
    spec = HamiltonianSpec(hermitian(2, 0.7), {2: symmetric_potential(space)})
    H = assemble_hamiltonian(spec, space, 2)
    f = H @ H + 2 * H
    assert np.allclose(propagate(H, f, 0.9, n=2), f, atol=1e-10)


def test_module_propagate_matches_the_system(make_system, hermitian):
    """test a bare Hamiltonian with its particle number propagates like the system"""
    system = make_system()
    f = hermitian(4)
    H = assemble_hamiltonian(system.spec, system.space, 2)
    assert np.allclose(propagate(H, f, 0.6, n=2), system.propagate(f, 0.6))
    assert np.allclose(propagate(system.propagator(2), f, 0.6), system.propagate(f, 0.6))
    with pytest.raises(LabelError):
        propagate(H, f, 0.6)


def test_propagation_on_a_subset_of_particles(make_system, hermitian):
    """test propagating particles (1, 2) of a three-particle product"""
    system = make_system()
    space = system.space
    pair, single = hermitian(4), hermitian(2)
    product = space.place([(pair, (1, 2)), (single, (3,))], 3)
    expected = space.place([(system.propagate(pair, 0.5), (1, 2)), (single, (3,))], 3)
    assert np.allclose(system.propagate(product, 0.5, labels=(1, 2)), expected)


def test_liouvillian_is_the_generator(make_system, hermitian):
    """test (G(-t)f - f)/t tends to -N f"""
    system = make_system()
    check = system.liouvillian_check(hermitian(4))
    assert check.passed(1e-6)


def test_single_cluster_cumulant_is_propagation(make_system, hermitian):
    """test A_1(t, {X}) == G(-t, X)"""
    system = make_system()
    f = hermitian(4)
    assert np.allclose(system.cumulant(0.6, [(1, 2)], f), system.propagate(f, 0.6))


@pytest.mark.parametrize(
    "clusters",
    [[(1,), (2, 3)], [(1,), (2,), (3,)], [(1,), (2,), (3,), (4,)], [(1, 2), (3,), (4,)]],
)
def test_cumulants_vanish_without_interaction(hermitian, clusters):
    """test free groups factorize so every multi-cluster cumulant is zero"""
    system = ManyBodySystem(TensorSpace(2), HamiltonianSpec(hermitian(2)))
    n = len(ClusterSet(tuple(clusters)).labels)
    f = hermitian(2 ** n)
    assert trace_norm(system.cumulant(0.9, clusters, f)) < 1e-12 * max(1.0, trace_norm(f))


def test_cumulants_vanish_at_time_zero(make_system, hermitian):
    """test the partition coefficients cancel at t = 0"""
    system = make_system(orders=(2, 3))
    assert trace_norm(system.cumulant(0.0, [(1,), (2,), (3,)], hermitian(8))) < 1e-12


@pytest.mark.parametrize("clusters", [[(1,), (2,)], [(1,), (2, 3)], [(1,), (2,), (3,)]])
def test_cumulant_generator(make_system, hermitian, clusters):
    """test A(t)/t tends to the interaction Liouvillian of the clusters"""
    system = make_system(orders=(2, 3))
    n = len(ClusterSet(tuple(clusters)).labels)
    check = system.cumulant_generator_check(clusters, hermitian(2 ** n))
    assert check.passed(1e-6)


def test_cumulant_norm_bound(make_system, hermitian):
    """test ||A_n(t) f|| <= n! e^n ||f||"""
    system = make_system(orders=(2, 3))
    f = hermitian(8)
    value = trace_norm(system.cumulant(2.0, [(1,), (2,), (3,)], f))
    assert value <= cumulant_norm_bound(3) * trace_norm(f)
    assert cumulant_norm_bound(2) == pytest.approx(2 * math.e ** 2)


def test_scattering_generator(make_system, hermitian):
    """test the scattering operator is generated by the interaction part"""
    system = make_system(orders=(2, 3))
    check = system.scattering_generator_check((1, 2, 3), hermitian(8))
    assert check.passed(1e-6)


def test_scattering_operator_of_one_particle_is_identity(make_system, hermitian):
    """test a lone particle does not scatter"""
    system = make_system()
    f = hermitian(2)
    assert np.allclose(system.scattering_operator(0.8, (1,))(f), f)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_duhamel_form_of_second_cumulant(make_system, hermitian, t):
    """test the integral form matches the partition form of A_2"""
    system = make_system(orders=(2,))
    f = hermitian(4)
    expected = system.cumulant(t, [(1,), (2,)], f)
    assert relative_residual(system.duhamel_second_cumulant(f, t), expected) < 1e-9


def test_richardson_removes_polynomial_error():
    """test extrapolation of 1 + h + h^2 to h = 0"""
    samples = [(h, np.array(1.0 + h + h * h)) for h in (1e-1, 1e-2, 1e-3)]
    assert float(richardson_limit(samples)) == pytest.approx(1.0, abs=1e-12)


def test_gauss_legendre_integrates_polynomials():
    """test 64 nodes integrate x^5 exactly"""
    points, weights = gauss_legendre(0.0, 2.0)
    assert np.sum(weights * points ** 5) == pytest.approx(2 ** 6 / 6)
    points, weights = gauss_legendre(0.0, 2.0, nodes=4, panels=3)
    assert len(points) == 12


def test_relative_residual_falls_back_to_absolute():
    """test the residual against a vanishing expectation"""
    assert relative_residual(np.eye(2), np.zeros((2, 2))) == pytest.approx(2.0)
    assert relative_residual(2 * np.eye(2), np.eye(2)) == pytest.approx(1.0)
