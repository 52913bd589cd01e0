import json
from pathlib import Path

import numpy as np
import pytest
from rest_framework import serializers

from algebra.tensorspace import Statistics

from ..scenario import ScenarioParseError, load_scenario
from ..serializers import ComplexMatrixField, ScenarioSerializer

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

IDENTITY_2 = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]


@pytest.fixture
def document():
    """
    minimal valid scenario
    """
    return {
        "d": 2,
        "N": 2,
        "kinetic": [[[0.5, 0.0], [0.2, 0.1]], [[0.2, -0.1], [-0.3, 0.0]]],
        "initial": {"mode": "chaos", "density": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]},
        "time_grid": {"stop": 1.0, "steps": 2},
    }


def _errors(data):
    serializer = ScenarioSerializer(data=data)
    assert not serializer.is_valid()
    return serializer.errors


def test_complex_matrix_field():
    """test [re, im] pairs become a complex matrix and back"""
    field = ComplexMatrixField()
    matrix = field.to_internal_value([[[1, 0], [0, 2]], [[0, -2], [3, 0]]])
    assert np.allclose(matrix, [[1, 2j], [-2j, 3]])
    assert field.to_representation(matrix) == [[[1.0, 0.0], [0.0, 2.0]], [[0.0, -2.0], [3.0, 0.0]]]
    with pytest.raises(serializers.ValidationError):
        field.to_internal_value([[1, 2], [3, 4]])
    with pytest.raises(serializers.ValidationError):
        field.to_internal_value([[["a", 0]]])


def test_minimal_scenario_defaults(document):
    """test omitted fields fall back to a free Bose system"""
    serializer = ScenarioSerializer(data=document)
    assert serializer.is_valid(), serializer.errors
    scenario = serializer.save()
    assert scenario.statistics == Statistics.BOSE
    assert scenario.potentials == {}
    assert scenario.hbar == 1.0
    assert scenario.time_grid.times == (0.0, 1.0)
    assert scenario.observable is None
    g = scenario.initial_correlations()
    assert g.cutoff == 2
    assert np.allclose(g[1], 0.5 * np.eye(2))


def test_non_hermitian_kinetic(document):
    """test the kinetic matrix must be Hermitian"""
    document["kinetic"] = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
    assert "kinetic" in _errors(document)


def test_one_level_particles_are_refused(document):
    """test d must be at least 2"""
    document["d"] = 1
    assert "d" in _errors(document)


def test_potential_of_the_wrong_dimension(document):
    """test a pair potential must be d^2 x d^2"""
    document["potentials"] = [{"order": 2, "matrix": IDENTITY_2}]
    assert "potentials" in _errors(document)


def test_asymmetric_potential(document):
    """test a pair potential must commute with the exchange"""
    diagonal = [[[float(i == j) * i, 0.0] for j in range(4)] for i in range(4)]
    document["potentials"] = [{"order": 2, "matrix": diagonal}]
    assert "potentials" in _errors(document)


def test_chaos_needs_a_density(document):
    """test chaos initial data without a one-particle density"""
    del document["initial"]["density"]
    assert "initial" in _errors(document)


def test_normalize_is_only_for_chaos(document):
    """test normalize is refused for explicit components"""
    document["initial"] = {"mode": "correlations", "components": [{"n": 1, "matrix": IDENTITY_2}], "normalize": True}
    assert "initial" in _errors(document)


def test_cutoff_over_budget(document, settings):
    """test N with d^N above the dimension budget"""
    settings.CORRDYN = {**settings.CORRDYN, "DIMENSION_BUDGET": 8}
    document["N"] = 4
    assert "N" in _errors(document)


def test_time_grid_order(document):
    """test stop may not precede start"""
    document["time_grid"] = {"start": 1.0, "stop": 0.0, "steps": 2}
    assert "time_grid" in _errors(document)


def test_densities_mode(document):
    """test explicit densities are turned into correlations"""
    document["initial"] = {"mode": "densities", "components": [{"n": 1, "matrix": IDENTITY_2}]}
    serializer = ScenarioSerializer(data=document)
    assert serializer.is_valid(), serializer.errors
    scenario = serializer.save()
    g = scenario.initial_correlations()
    assert np.allclose(g[1], np.eye(2))
    assert np.allclose(g[2], -scenario.space.symmetrizer(2))


def test_load_fixture():
    """test the bundled interacting scenario loads with its digest"""
    scenario = load_scenario(FIXTURES / "interacting_bose.json")
    assert scenario.name == "interacting-bose"
    assert set(scenario.potentials) == {2}
    assert scenario.beta == 0.5
    assert len(scenario.digest) == 64
    assert scenario.source.endswith("interacting_bose.json")


def test_malformed_json(tmp_path):
    """test a syntax error is reported with line and column"""
    path = tmp_path / "broken.json"
    path.write_text('{\n  "d": 2,\n  "N": \n}\n')
    with pytest.raises(ScenarioParseError) as excinfo:
        load_scenario(path)
    assert excinfo.value.line == 4
    assert excinfo.value.column == 1


def test_invalid_document_raises(tmp_path, document):
    """test load_scenario raises the serializer errors"""
    document["d"] = 0
    path = tmp_path / "invalid.json"
    path.write_text(json.dumps(document))
    with pytest.raises(serializers.ValidationError):
        load_scenario(path)


def test_invalid_utf8(tmp_path):
    """test undecodable bytes are reported with line and column"""
    path = tmp_path / "latin.json"
    path.write_bytes(b'{"d": 2,\n  "N": \xff}\n')
    with pytest.raises(ScenarioParseError) as excinfo:
        load_scenario(path)
    assert excinfo.value.line == 2
    assert excinfo.value.column == 8
