"""
Errors raised by the correlation dynamics engine.

Every error is also a ``ValueError`` so callers that only guard against bad
arguments keep working.
"""


class CorrDynError(Exception):
    """Base class for engine errors."""


class DimensionBudgetExceeded(CorrDynError, ValueError):
    """An n-particle operator would exceed the configured row budget."""


class CutoffExceeded(CorrDynError, ValueError):
    """A requested particle level lies above the sequence cutoff."""


class LabelError(CorrDynError, ValueError):
    """Particle labels out of range, duplicated or overlapping."""


class ConfigurationMismatch(CorrDynError, ValueError):
    """Operands built for different spaces, statistics or cutoffs."""


class SequenceDomainError(CorrDynError, ValueError):
    """A sequence lies outside the domain of the requested map."""


class InvalidHamiltonian(CorrDynError, ValueError):
    """Kinetic or potential matrices violate Hermiticity, shape or symmetry."""
