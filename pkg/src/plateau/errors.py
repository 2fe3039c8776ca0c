"""Exception types raised across the package."""


class PlateauError(Exception):
    """Base class for all package errors."""


class ContainmentViolation(PlateauError):
    pass


class BadCurveSpec(PlateauError):
    pass


class RingMismatch(PlateauError):
    pass


class OutsideC0(PlateauError):
    pass


class NonConformingSpacing(PlateauError):
    pass


class ResolutionTooCoarse(PlateauError):
    pass


class NoConvergence(PlateauError):
    def __init__(self, iters: int, residual: float):
        super().__init__(f"CG did not converge in {iters} iterations (rel. residual {residual:.3e})")
        self.iters = iters
        self.residual = residual


class OutOfDomain(PlateauError):
    pass


class SheetOutsideGrid(PlateauError):
    pass


class LambdaViolation(PlateauError):
    pass


class StepFailure(PlateauError):
    pass


class HypothesisUnmet(PlateauError):
    pass


class BadSequence(PlateauError):
    pass


class ParseError(PlateauError):
    def __init__(self, line: int, msg: str = ""):
        super().__init__(f"line {line}: {msg}" if msg else f"line {line}")
        self.line = line


class ValidationError(PlateauError):
    def __init__(self, field: str, msg: str = ""):
        super().__init__(f"{field}: {msg}" if msg else field)
        self.field = field
