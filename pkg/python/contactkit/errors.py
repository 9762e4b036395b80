"""
Exception hierarchy shared by every contactkit module.

Errors that come with a concrete witness (a point, a sample index, a
trajectory) keep it as an attribute, so reports can record it next to the
failing check.
"""

from typing import List, Optional, Sequence


class ContactKitError(Exception): ...


class ConfigurationError(ContactKitError, ValueError): ...


class EvaluationError(ContactKitError, ArithmeticError):
    def __init__(self, message: str, witness: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.witness: List[float] = [float(x) for x in witness] if witness is not None else []


class CriticalPointError(EvaluationError): ...


class SingularDenominatorError(EvaluationError): ...


class OffSurfaceError(ContactKitError, ValueError):
    def __init__(self, message: str, witness: Optional[Sequence[float]] = None, residual: float = 0.0):
        super().__init__(message)
        self.witness: List[float] = [float(x) for x in witness] if witness is not None else []
        self.residual = float(residual)


class TransversalityError(ContactKitError, ValueError):
    def __init__(self, message: str, witness: Sequence[float], value: float):
        super().__init__(message)
        self.witness: List[float] = [float(x) for x in witness]
        self.value = float(value)


class StiffnessError(ContactKitError, RuntimeError):
    def __init__(self, message: str, trajectory: Sequence[Sequence[float]] = ()):
        super().__init__(message)
        # rows of (t, coordinates..., |constraint|)
        self.trajectory: List[List[float]] = [list(row) for row in trajectory]


class FlowEscapeError(ContactKitError, RuntimeError):
    def __init__(
        self, message: str, witness: Sequence[float], drift: float, trajectory: Sequence[Sequence[float]] = ()
    ):
        super().__init__(message)
        self.witness: List[float] = [float(x) for x in witness]
        self.drift = float(drift)
        self.trajectory: List[List[float]] = [list(row) for row in trajectory]


class CoorientationError(ContactKitError, ValueError):
    def __init__(self, message: str, witness: Sequence[float], factor: float):
        super().__init__(message)
        self.witness: List[float] = [float(x) for x in witness]
        self.factor = float(factor)


class FamilyInvalidError(ContactKitError, ValueError):
    def __init__(self, message: str, sample: int, residual: float):
        super().__init__(message)
        self.sample = int(sample)
        self.residual = float(residual)


class SingularMatrixError(ContactKitError, ArithmeticError):
    def __init__(self, message: str, sample: int):
        super().__init__(message)
        self.sample = int(sample)


class UndersampledError(ContactKitError, RuntimeError): ...


class WindingInconsistencyError(ContactKitError, RuntimeError): ...
