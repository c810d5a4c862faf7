"""Exception hierarchy shared by every stage of the pipeline."""


class PolpError(Exception):
    """Base class; ``stage`` names the module that raised it."""

    stage = "polp"

    def __str__(self):
        return f"[{self.stage}] {super().__str__()}"


class ParseError(PolpError):
    stage = "parser"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ResolutionError(ParseError):
    """An expression names an atom the program cannot provide."""


class GroundingError(PolpError):
    stage = "grounder"


class BddError(PolpError):
    stage = "bdd"


class SymbolicError(PolpError):
    stage = "symbolic"


class OracleError(PolpError):
    stage = "oracle"


class ResourceError(PolpError):
    """A configured size cap was exceeded."""

    stage = "resource"


class PhaseTimeout(PolpError):
    stage = "timeout"
