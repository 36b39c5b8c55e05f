"""Exception hierarchy.

Exceptions fall into two groups that the CLI maps to distinct exit codes:
validation problems (bad input, bad configuration) and numerical failures
(singular operators, blow-up).
"""


class AnelasticError(Exception):
    """Base class for all package errors."""


class ValidationError(AnelasticError, ValueError):
    """Input rejected before any numerics ran."""


class NumericalFailure(AnelasticError, ArithmeticError):
    """A solve or time integration failed."""


class BlendNotMonotone(ValidationError):
    pass


class OddParityNonzeroAtOrigin(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class IncompatibleRHS(ValidationError):
    pass


class RealityViolation(ValidationError):
    """Coefficients do not satisfy c(k1, k2) = conj(c(-k1, k2))."""


class DegenerateDenominator(ValidationError):
    pass


class SupportTooWide(ValidationError):
    pass


class ResolutionError(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SingularSystem(NumericalFailure):
    pass


class BlowupDetected(NumericalFailure):
    pass
