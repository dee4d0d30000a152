"""Exception hierarchy; ``exit_code`` is what the CLI returns for each kind."""


class BergjetError(Exception):
    code = "error"
    exit_code = 3


class ConfigError(BergjetError):
    code = "config"
    exit_code = 2


class ParseError(ConfigError):
    code = "parse"


class DegreeBudgetError(BergjetError):
    """Not enough truncation degree to produce the requested output.

    ``required`` carries the degree that would have sufficed, when known.
    """

    code = "degree_budget"
    exit_code = 4

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class SingularDivisionError(BergjetError, ZeroDivisionError):
    code = "singular"


class StrictPositivityError(BergjetError):
    code = "not_strictly_psh"


class RealityError(BergjetError):
    code = "reality"


class CompositionError(BergjetError, ValueError):
    code = "composition"


class ConsistencyError(BergjetError):
    """An identity that must hold by construction failed (upstream bug)."""

    code = "consistency"


class QuadratureResolutionError(BergjetError):
    code = "quadrature"
