"""Exception types raised across the package."""

from __future__ import annotations


class QLabError(ValueError):
    """Base class for all validation failures."""


class DimensionError(QLabError):
    pass


class NormalizationError(QLabError):
    def __init__(self, norm: float, message: str | None = None):
        self.norm = norm
        super().__init__(message or f"vector is not unit norm (norm={norm:.6g})")


class NotProjectorError(QLabError):
    pass


class NotUnitaryError(QLabError):
    def __init__(self, deviation: float, message: str | None = None):
        self.deviation = deviation
        super().__init__(
            message or f"operator is not unitary (||U U^dag - I||_F = {deviation:.6g})"
        )


class InvalidStateError(QLabError):
    """A density operator failed one of its invariants."""

    def __init__(self, check: str, magnitude: float, message: str | None = None):
        self.check = check
        self.magnitude = magnitude
        super().__init__(message or f"{check} = {magnitude:.6g}")


class DuplicatePowerError(QLabError):
    def __init__(self, pairs: list[tuple[int, int]]):
        self.pairs = pairs
        listed = ", ".join(f"{i}~{j}" for i, j in pairs)
        super().__init__(f"duplicate powers in pool at indices {listed}")


class PoolTooLargeError(QLabError):
    pass


class PotentiaRangeError(QLabError):
    pass


class IncompleteSetError(QLabError):
    """The powers do not span the Hermitian operator space."""

    def __init__(self, rank: int, required: int):
        self.rank = rank
        self.required = required
        super().__init__(
            f"power set is informationally incomplete: rank {rank} < {required}"
        )


class UnverifiedInstanceError(QLabError):
    pass


class SchemaError(QLabError):
    """Input document does not match its schema; ``path`` is a JSON path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
