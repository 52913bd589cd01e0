import numpy as np
from django.conf import settings
from rest_framework import serializers

from algebra.exceptions import CorrDynError
from algebra.tensorspace import Statistics, TensorSpace, dimension_budget, is_hermitian
from evolution.dynamics import HamiltonianSpec
from observables.functionals import ObservableSequence

from .scenario import Scenario


class ComplexMatrixField(serializers.Field):
    """Square complex matrix written row-major as [re, im] pairs."""

    default_error_messages = {
        "shape": "Expected a square matrix of [re, im] pairs, got shape {shape}.",
        "number": "Matrix entries must be numbers.",
    }

    def to_internal_value(self, data):
        try:
            pairs = np.asarray(data, dtype=float)
        except (TypeError, ValueError):
            self.fail("number")
        if pairs.ndim != 3 or pairs.shape[2] != 2 or pairs.shape[0] != pairs.shape[1]:
            self.fail("shape", shape=list(pairs.shape))
        return pairs[..., 0] + 1j * pairs[..., 1]

    def to_representation(self, value):
        matrix = np.asarray(value, dtype=complex)
        return np.stack([matrix.real, matrix.imag], axis=-1).tolist()


class PotentialSerializer(serializers.Serializer):
    order = serializers.IntegerField(min_value=2)
    matrix = ComplexMatrixField()


class ComponentSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=1)
    matrix = ComplexMatrixField()


class InitialDataSerializer(serializers.Serializer):
    MODES = ["chaos", "correlations", "densities"]

    mode = serializers.ChoiceField(choices=MODES)
    density = ComplexMatrixField(required=False)
    components = ComponentSerializer(many=True, required=False, default=list)
    normalize = serializers.BooleanField(default=False)

    def validate(self, attrs):
        if attrs["mode"] == "chaos" and "density" not in attrs:
            raise serializers.ValidationError({"density": "Chaos initial data need a one-particle density."})
        if attrs["mode"] != "chaos" and not attrs["components"]:
            raise serializers.ValidationError({"components": f"Mode '{attrs['mode']}' needs explicit components."})
        if attrs["mode"] != "chaos" and attrs["normalize"]:
            raise serializers.ValidationError({"normalize": "Only a chaos density can be normalized."})
        levels = [component["n"] for component in attrs["components"]]
        if len(levels) != len(set(levels)):
            raise serializers.ValidationError({"components": "Each level may appear only once."})
        return attrs


class TimeGridSerializer(serializers.Serializer):
    start = serializers.FloatField(default=0.0)
    stop = serializers.FloatField()
    steps = serializers.IntegerField(min_value=1)


class ObservableSerializer(serializers.Serializer):
    order = serializers.IntegerField(min_value=1, default=1)
    matrix = ComplexMatrixField()


class ToleranceSerializer(serializers.Serializer):
    oracle = serializers.FloatField(min_value=0.0, required=False)
    finite_difference = serializers.FloatField(min_value=0.0, required=False)
    algebraic = serializers.FloatField(min_value=0.0, required=False)


class ScenarioSerializer(serializers.Serializer):
    """Validates a scenario document; ``save()`` returns a ``Scenario``."""

    OUTPUTS = [
        "correlations",
        "marginal_densities",
        "marginal_correlations",
        "averages",
        "dispersion",
        "particle_number",
        "residuals",
    ]

    name = serializers.CharField(required=False, default="scenario")
    d = serializers.IntegerField(min_value=2)
    N = serializers.IntegerField(min_value=1)
    hbar = serializers.FloatField(default=lambda: settings.CORRDYN["DEFAULT_HBAR"])
    statistics = serializers.ChoiceField(choices=Statistics.choices, default=Statistics.BOSE)
    kinetic = ComplexMatrixField()
    potentials = PotentialSerializer(many=True, required=False, default=list)
    initial = InitialDataSerializer()
    time_grid = TimeGridSerializer()
    outputs = serializers.ListField(
        child=serializers.ChoiceField(choices=OUTPUTS), required=False, default=list
    )
    observable = ObservableSerializer(required=False, allow_null=True, default=None)
    beta = serializers.FloatField(min_value=0.0, required=False, allow_null=True, default=None)
    oracle = serializers.BooleanField(default=False)
    tolerances = ToleranceSerializer(required=False, default=dict)

    def validate_hbar(self, value):
        if value <= 0:
            raise serializers.ValidationError("hbar must be positive.")
        return value

    def validate(self, attrs):
        d, cutoff = attrs["d"], attrs["N"]
        errors = {}
        if d ** cutoff > dimension_budget():
            errors["N"] = f"{cutoff}-particle operators need {d ** cutoff} rows, budget is {dimension_budget()}."
        kinetic = attrs["kinetic"]
        if kinetic.shape != (d, d):
            errors["kinetic"] = f"Expected a {d}x{d} matrix, got {kinetic.shape[0]}x{kinetic.shape[1]}."
        elif not is_hermitian(kinetic):
            errors["kinetic"] = "Kinetic matrix is not Hermitian."
        orders = [potential["order"] for potential in attrs["potentials"]]
        if len(orders) != len(set(orders)):
            errors["potentials"] = "Each potential order may appear only once."
        for potential in attrs["potentials"]:
            size = d ** potential["order"]
            if potential["matrix"].shape != (size, size):
                errors["potentials"] = f"Order-{potential['order']} potential must be {size}x{size}."
        for component in attrs["initial"]["components"]:
            size = d ** component["n"]
            if component["n"] > cutoff:
                errors["initial"] = f"Component level {component['n']} is above N={cutoff}."
            elif component["matrix"].shape != (size, size):
                errors["initial"] = f"Level-{component['n']} component must be {size}x{size}."
        density = attrs["initial"].get("density")
        if density is not None and density.shape != (d, d):
            errors["initial"] = f"One-particle density must be {d}x{d}."
        observable = attrs["observable"]
        if observable is not None:
            size = d ** observable["order"]
            if observable["matrix"].shape != (size, size):
                errors["observable"] = f"Order-{observable['order']} observable must be {size}x{size}."
            elif observable["order"] > cutoff:
                errors["observable"] = f"Observable order {observable['order']} is above N={cutoff}."
        if attrs["time_grid"]["stop"] < attrs["time_grid"]["start"]:
            errors["time_grid"] = "stop must not precede start."
        if errors:
            raise serializers.ValidationError(errors)
        # shapes are consistent from here on; permutation symmetry is left
        self._check_symmetry(attrs)
        return attrs

    def _check_symmetry(self, attrs):
        space = TensorSpace(attrs["d"], Statistics(attrs["statistics"]))
        potentials = {potential["order"]: potential["matrix"] for potential in attrs["potentials"]}
        try:
            HamiltonianSpec(attrs["kinetic"], potentials, attrs["hbar"])
        except CorrDynError as exc:
            raise serializers.ValidationError({"potentials": str(exc)})
        observable = attrs["observable"]
        if observable is not None:
            try:
                ObservableSequence(observable["matrix"], observable["order"]).check(space)
            except CorrDynError as exc:
                raise serializers.ValidationError({"observable": str(exc)})

    def create(self, validated_data):
        return Scenario.from_validated(validated_data, source=self.context.get("path"))
