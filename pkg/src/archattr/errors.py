"""Exception hierarchy shared by all archattr modules."""


class ArchAttrError(Exception):
    """Base class for every error raised by this package."""


# --- architecture file parsing -------------------------------------------

class ParseError(ArchAttrError):
    """Malformed architecture text. Carries 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}" + (f", col {col}" if col is not None else "") + f": {message}"
        super().__init__(message)


class UnknownLayerKind(ParseError):
    pass


class MissingField(ParseError):
    pass


class UnexpectedField(ParseError):
    pass


class DuplicateLayerName(ParseError):
    pass


class DanglingReference(ParseError):
    pass


# --- graph validation ------------------------------------------------------

class InvalidGraph(ArchAttrError):
    """A NetworkGraph invariant does not hold."""


class CycleError(InvalidGraph):
    pass


class PathExplosion(ArchAttrError):
    """Input-to-output path count exceeds the caller's cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} input-to-output paths exceed cap {cap}")


# --- shape inference --------------------------------------------------------

class ShapeError(ArchAttrError):
    """Base class for activation-grid inference failures."""


class KernelTooLarge(ShapeError):
    pass


class ShapeMismatch(ShapeError):
    pass


class ConvAfterFlatten(ShapeError):
    pass


# --- statistics -------------------------------------------------------------

class StatsError(ArchAttrError):
    pass


class DegenerateSplit(StatsError):
    """Thresholding left one of the two classes empty."""


class NotBinary(StatsError):
    pass


class TooFewSamples(StatsError):
    pass


class NonPositiveValue(StatsError):
    pass


class DegenerateVariance(StatsError):
    pass


class Underdetermined(StatsError):
    pass


class NumericalFailure(StatsError):
    pass


# --- population generation --------------------------------------------------

class GenerationExhausted(ArchAttrError):
    """Rejection sampling failed to produce a shape-valid network."""


class ConfigError(ArchAttrError):
    """Bad key/value configuration input (CLI exit code 2)."""
