import math

import numpy as np
import pytest

from ..exceptions import DimensionBudgetExceeded, LabelError
from ..tensorspace import (
    Statistics,
    TensorSpace,
    compose_permutations,
    is_hermitian,
    permutation_operator,
    permutation_parity,
    symmetrizer,
    trace_norm,
)

ALL_STATISTICS = [Statistics.BOSE, Statistics.FERMI, Statistics.BOLTZMANN]


@pytest.mark.parametrize("stats", ALL_STATISTICS)
def test_single_particle_symmetrizer_is_identity(stats):
    """test S_1 is the identity for every statistics"""
    assert np.allclose(symmetrizer(1, 3, stats), np.eye(3))


@pytest.mark.parametrize("stats", [Statistics.BOSE, Statistics.FERMI])
def test_symmetrizer_is_orthogonal_projector(stats):
    """test S_3 is idempotent and Hermitian"""
    S = symmetrizer(3, 2, stats)
    assert np.allclose(S @ S, S, atol=1e-12)
    assert np.allclose(S, S.conj().T, atol=1e-12)


def test_symmetrizer_ranks():
    """test the traces count symmetric and antisymmetric states"""
    assert np.trace(symmetrizer(2, 3, Statistics.BOSE)).real == pytest.approx(6)
    assert np.trace(symmetrizer(2, 3, Statistics.FERMI)).real == pytest.approx(3)
    assert np.trace(symmetrizer(3, 2, Statistics.BOSE)).real == pytest.approx(4)


def test_fermi_symmetrizer_vanishes_above_dimension():
    """test three fermions cannot share a two-level space"""
    assert np.allclose(symmetrizer(3, 2, Statistics.FERMI), 0)


def test_boltzmann_symmetrizer_is_identity():
    """test the Maxwell-Boltzmann selector does nothing"""
    assert np.allclose(symmetrizer(3, 2, Statistics.BOLTZMANN), np.eye(8))


def test_statistics_sign():
    """test only fermions carry a negative sign"""
    assert Statistics.FERMI.sign == -1
    assert Statistics.BOSE.sign == 1
    assert Statistics.BOLTZMANN.sign == 1


@pytest.mark.parametrize(
    "pi, parity",
    [((1, 2, 3), 0), ((2, 1, 3), 1), ((2, 3, 1), 2), ((0, 2, 1), 1), ((4, 3, 2, 1), 2)],
)
def test_permutation_parity(pi, parity):
    """test the transposition count for 0- and 1-based permutations"""
    assert permutation_parity(pi) == parity


def test_permutation_operator_moves_basis_vectors():
    """test p_pi sends e_i1 x e_i2 to e_i2 x e_i1 for the swap"""
    p = permutation_operator((2, 1), 2)
    e01 = np.zeros(4)
    e01[1] = 1.0
    e10 = np.zeros(4)
    e10[2] = 1.0
    assert np.allclose(p @ e01, e10)


def test_permutation_operators_compose():
    """test p_pi p_sigma matches the composed permutation"""
    pi, sigma = (2, 3, 1), (1, 3, 2)
    product = permutation_operator(pi, 2) @ permutation_operator(sigma, 2)
    assert np.allclose(product, permutation_operator(compose_permutations(pi, sigma), 2))


def test_permutation_operator_rejects_non_permutation():
    """test a repeated image is rejected"""
    with pytest.raises(LabelError):
        permutation_operator((1, 1, 2), 2)


def test_dimension_budget_is_enforced(settings):
    """test operators above the configured row budget are refused"""
    settings.CORRDYN = {**settings.CORRDYN, "DIMENSION_BUDGET": 8}
    space = TensorSpace(2, Statistics.BOSE)
    assert space.dim(3) == 8
    with pytest.raises(DimensionBudgetExceeded):
        space.dim(4)
    with pytest.raises(DimensionBudgetExceeded):
        space.symmetrizer(4)


def test_place_orders_factors_by_label(hermitian):
    """test an operator placed on label 2 sits in the second tensor slot"""
    space = TensorSpace(2)
    a, b = hermitian(2), hermitian(2)
    assert np.allclose(space.place([(a, (2,)), (b, (1,))], 2), np.kron(b, a))
    assert np.allclose(space.embed(a, (1,), 2), np.kron(a, np.eye(2)))


def test_embed_on_separated_labels(hermitian):
    """test a pair operator on labels (1, 3) is the swap-conjugate of one on (1, 2)"""
    space = TensorSpace(2)
    x = hermitian(4)
    swap = space.permutation((1, 3, 2))
    expected = swap @ np.kron(x, np.eye(2)) @ swap.conj().T
    assert np.allclose(space.embed(x, (1, 3), 3), expected)


def test_place_rejects_overlapping_labels(hermitian):
    """test two factors on the same label"""
    space = TensorSpace(2)
    with pytest.raises(LabelError):
        space.place([(hermitian(2), (1,)), (hermitian(2), (1,))], 2)


def test_partial_trace_of_product(hermitian):
    """test tracing one factor of a product leaves the other times its trace"""
    space = TensorSpace(3)
    a, b = hermitian(3), hermitian(3)
    product = np.kron(a, b)
    assert np.allclose(space.partial_trace(product, (1,), 2), a * np.trace(b))
    assert np.allclose(space.partial_trace(product, (2,), 2), b * np.trace(a))
    assert space.partial_trace(product, (), 2) == pytest.approx(np.trace(a) * np.trace(b))


def test_trace_tail_keeps_leading_particles(hermitian):
    """test trace over the last two of three particles"""
    space = TensorSpace(2)
    a, b, c = hermitian(2), hermitian(2), hermitian(2)
    product = space.place([(a, (1,)), (b, (2,)), (c, (3,))], 3)
    assert np.allclose(space.trace_tail(product, 3, 2), a * np.trace(b) * np.trace(c))
    assert space.trace_tail(product, 3, 0) is product


@pytest.mark.parametrize("stats, sign", [(Statistics.BOSE, 1), (Statistics.FERMI, -1)])
def test_exchange_term_in_symmetrized_trace(hermitian, stats, sign):
    """test Tr S_2 (a x b) = (Tr a Tr b +- Tr ab) / 2"""
    space = TensorSpace(3, stats)
    a, b = hermitian(3), hermitian(3)
    value = np.trace(space.symmetrize(np.kron(a, b), 2))
    assert value == pytest.approx((np.trace(a) * np.trace(b) + sign * np.trace(a @ b)) / 2)


def test_trace_norm():
    """test the nuclear norm and the scalar case"""
    assert trace_norm(-2 + 0j) == 2
    assert trace_norm(np.diag([1.0, -3.0])) == pytest.approx(4.0)


def test_particle_count_and_hermiticity(hermitian):
    """test shape detection and the Hermitian check"""
    space = TensorSpace(2)
    assert space.particle_count(np.eye(8)) == 3
    with pytest.raises(LabelError):
        space.particle_count(np.eye(6))
    assert is_hermitian(hermitian(4))
    assert not is_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_tensor_space_validates_dimension():
    """test a zero-dimensional one-particle space is refused"""
    with pytest.raises(ValueError):
        TensorSpace(0)
    assert TensorSpace(2, "fermi").stats == Statistics.FERMI
    assert math.isclose(TensorSpace(2).identity(2).trace().real, 4)


def test_tensor_space_refuses_one_level_particles():
    """test d = 1 is refused since operator shapes could not encode n"""
    with pytest.raises(ValueError):
        TensorSpace(1)


@pytest.mark.parametrize("stats", [Statistics.BOSE, Statistics.FERMI])
@pytest.mark.parametrize("pi", [(2, 1, 3), (3, 2, 1), (1, 3, 2)])
def test_transposition_acts_on_symmetrizer_by_sign(stats, pi):
    """test p_pi S_n == (+-1) S_n for a transposition pi"""
    S = symmetrizer(3, 3, stats)
    assert permutation_parity(pi) == 1
    assert np.allclose(permutation_operator(pi, 3) @ S, stats.sign * S, atol=1e-12)
    assert np.allclose(S @ permutation_operator(pi, 3), stats.sign * S, atol=1e-12)
