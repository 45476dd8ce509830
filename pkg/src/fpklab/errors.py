"""Exception types shared across the package."""


class FpkError(Exception):
    """Base class for all fpklab errors."""


class UnsupportedDimensionError(FpkError):
    """Spatial dimension outside {1, 2, 3}."""


class GridTooCoarseError(FpkError):
    """Fewer than 4 cells per axis."""


class ShapeError(FpkError):
    """Array shape does not match the grid it claims to live on."""


class NonFiniteFieldError(FpkError):
    """A field value is NaN or infinite."""


class ExpressionError(FpkError):
    """Problem in a coefficient expression; carries the source offset."""

    def __init__(self, message: str, source: str, position: int):
        self.source = source
        self.position = position
        super().__init__(f"{message} at offset {position} in {source!r}")


class UnknownIdentifierError(ExpressionError):
    """Identifier that is neither a variable, the constant pi, nor a known function."""


class PositivityError(FpkError):
    """A coefficient or density sample is not strictly positive."""

    def __init__(self, name: str, cell, value: float):
        self.name = name
        self.cell = tuple(cell)
        self.value = value
        super().__init__(f"{name} must be strictly positive; got {value!r} at cell {self.cell}")


class EquilibriumBracketError(FpkError):
    """Bisection for the equilibrium normalization shift failed (internal consistency)."""


class NonPositiveDensityError(FpkError):
    """Density has a nonpositive cell, so log f is undefined."""


class StiffnessError(FpkError):
    """Ten consecutive step rejections; carries a diagnostic dump."""

    def __init__(self, message: str, dump: dict):
        self.dump = dump
        super().__init__(f"{message}; diagnostics: {dump}")


class MassConservationError(FpkError):
    """Accepted step violated the mass invariant (internal consistency)."""


class WrongRegimeError(FpkError):
    """Coefficients do not match the requested analysis regime."""


class ThresholdError(FpkError):
    """Initial value at or above the saturation threshold; decay bound undefined."""


class UndefinedRatioError(FpkError):
    """Zero denominator in an empirical functional-inequality ratio."""


class TooShortSeriesError(FpkError):
    """Not enough records for the requested time-series operation."""


class ScenarioError(FpkError):
    """Invalid scenario or sweep configuration."""
