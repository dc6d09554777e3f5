"""Exception hierarchy. Every error carries a stable ``code`` used by the CLI."""


class CoastlineError(Exception):
    code = "ERROR"


class DomainError(CoastlineError, ValueError):
    code = "DOMAIN"


class DegenerateInputError(CoastlineError, ValueError):
    code = "DEGENERATE_INPUT"


class GeometryError(CoastlineError):
    """The coastline condition does not hold."""

    code = "GEOMETRY"


class NoIntersectionError(CoastlineError):
    code = "NO_INTERSECTION"


class ArcsinDomainError(DomainError):
    code = "ARCSIN_DOMAIN"


class BlowUpError(CoastlineError):
    code = "BLOW_UP"

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoFeasibleKappaError(CoastlineError):
    code = "NO_FEASIBLE_KAPPA"


class AlignmentError(CoastlineError, ValueError):
    code = "ALIGNMENT"


class ParseError(CoastlineError, ValueError):
    code = "PARSE"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateWindowError(CoastlineError, ValueError):
    code = "DUPLICATE_WINDOW"


class DegenerateReferenceError(CoastlineError, ValueError):
    code = "DEGENERATE_REFERENCE"


class DegenerateFitError(CoastlineError, ValueError):
    code = "DEGENERATE_FIT"


class InsufficientDataError(CoastlineError, ValueError):
    code = "INSUFFICIENT_DATA"
