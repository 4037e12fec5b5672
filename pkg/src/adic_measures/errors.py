"""Exception types shared by the library and the CLI."""

from __future__ import annotations


class AdicError(Exception):
    """Base class for every error raised on purpose by this package."""


class SpecError(AdicError):
    """A diagram or subdiagram document is malformed."""


class ValidationError(AdicError):
    """A structural invariant fails; ``violations`` lists the details."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DimensionMismatch(ValidationError):
    pass


class NonIntegerFamilyEntry(ValidationError):
    pass


class LevelOutOfRange(AdicError):
    pass


class InvalidLevelList(AdicError):
    pass


class NotERS(AdicError):
    pass


class NotECS(AdicError):
    pass


class NotRank2(AdicError):
    pass


class NotStationary(AdicError):
    pass


class Reducible(AdicError):
    pass


class NoConvergence(AdicError):
    pass


class IncompatibleMeasure(AdicError):
    pass


class IncompatibleSubMeasure(IncompatibleMeasure):
    pass


class EmptyComplement(AdicError):
    pass


class NotVertexSub(AdicError):
    pass


class NotEdgeSub(AdicError):
    pass


class BudgetExceeded(AdicError):
    def __init__(self, estimated: int, budget: int):
        super().__init__(f"path count {estimated} exceeds budget {budget}")
        self.estimated = estimated
        self.budget = budget


class DepthMismatch(AdicError):
    pass


class IdentityViolation(AdicError):
    """An exact level identity failed; this always indicates a bug."""
