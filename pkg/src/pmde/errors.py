"""Exception hierarchy shared by all pmde modules."""


class PmdeError(Exception):
    """Base class for every error raised by pmde."""


class NonUnitaryInput(PmdeError, ValueError):
    pass


class ArityMismatch(PmdeError, ValueError):
    """Retarder and section counts violate the N / N+1 layout."""


class GridTooCoarse(PmdeError, ValueError):
    """Frequency step too large for reliable finite differences."""


class DegeneratePmd(PmdeError, ValueError):
    """PMD vector too short for the PSPs to be defined."""


class StepTooLarge(PmdeError, ValueError):
    """Time step lets the output SOP move 0.1 rad or more."""


class InvalidConfig(PmdeError, ValueError):
    pass


class NeutralUnavailable(PmdeError, ValueError):
    """Neutral state requires an even section count with equal DGDs."""


class LengthMismatch(PmdeError, ValueError):
    pass


class ParseError(PmdeError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"{msg} (line {self.line}, column {self.column})"
        return msg


class ValidationError(InvalidConfig):
    """A parsed config violates an invariant; the message names it."""
