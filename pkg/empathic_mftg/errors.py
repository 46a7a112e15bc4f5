# ------------------------------------------------------------------------------
# FILE: errors.py
# ------------------------------------------------------------------------------
# PURPOSE:
# One exception hierarchy for the whole toolkit. The CLI maps these onto exit
# codes: validation-type errors exit with 1, computation failures with 2.
# ------------------------------------------------------------------------------

from __future__ import annotations


class EmpathyToolkitError(Exception):
    """Base class for every error raised by empathic_mftg."""


class StructuralError(EmpathyToolkitError, ValueError):
    """Dimension mismatch, empty action set, malformed profile or simplex query."""


class InvalidParameterError(EmpathyToolkitError, ValueError):
    """A parameter is outside its admissible range."""


class UndefinedRatioError(InvalidParameterError):
    """The payoff-gap ratio is undefined because the material payoffs tie."""


class UndefinedCorrelationError(InvalidParameterError):
    """Pearson correlation is undefined (zero variance or too few points)."""


class IriValidationError(InvalidParameterError):
    """A questionnaire answer is outside the 0-4 range."""

    def __init__(self, item: int, value: object):
        self.item = item
        self.value = value
        super().__init__(f"IRI item q{item}: answer {value!r} is outside 0..4")


class KernelValidityError(StructuralError):
    """A transition kernel row is not a probability vector."""


class ScenarioConfigError(EmpathyToolkitError, ValueError):
    """A scenario file failed validation.

    Args:
        message: Human readable summary.
        fields: Mapping of dotted field path -> diagnostic message.
    """

    def __init__(self, message: str, fields: dict[str, str] | None = None):
        self.fields = dict(fields or {})
        detail = "; ".join(f"{k}: {v}" for k, v in self.fields.items())
        super().__init__(f"{message} ({detail})" if detail else message)


class DegenerateConditioningError(EmpathyToolkitError, ArithmeticError):
    """Conditioning event has (numerically) zero probability, or an equilibrium to condition on is missing."""


class ConvergenceError(EmpathyToolkitError, ArithmeticError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")


class RiccatiSingularityError(EmpathyToolkitError, ArithmeticError):
    """The coupled per-step gain system is singular."""

    def __init__(self, t: int, detail: str):
        self.t = t
        super().__init__(f"coupled gain system singular at t={t}: {detail}")
