"""Exception hierarchy.

Every error raised on purpose by the library derives from ``ZetaflowError``.
The CLI maps the three families below onto its exit codes:

* ``ConfigError`` -> 2 (schema or model definition problems)
* ``RefusedError`` and its subclasses -> 3 (computation declined)
* ``BudgetExceeded`` -> 4
"""

from __future__ import annotations


class ZetaflowError(Exception):
    """Base class for library errors."""


class ConfigError(ZetaflowError, ValueError):
    """Invalid model definition, schema violation or bad argument."""


class MixingError(ConfigError):
    """Transition matrix is not irreducible and aperiodic."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class RefusedError(ZetaflowError):
    """A computation was declined because its preconditions do not hold."""


class ConvergenceError(RefusedError):
    """An iterative method did not reach its tolerance."""


class BracketError(RefusedError):
    """Root bracket could not be established."""


class PoleProximalError(RefusedError):
    """Evaluation point is too close to a pole of the resolvent."""

    def __init__(self, message: str, s: complex | None = None, condition: float | None = None):
        super().__init__(message)
        self.s = s
        self.condition = condition


class DivergenceError(RefusedError):
    """Series requested outside its half-plane of convergence."""


class ExtrapolationError(RefusedError):
    """Richardson extrapolation was unstable."""

    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = samples


class ResolutionError(RefusedError):
    """Collocation grid too coarse for the requested accuracy."""


class BudgetExceeded(ZetaflowError):
    """Enumeration or work budget exceeded.

    ``progress`` carries whatever partial-count information was available
    when the budget tripped.
    """

    def __init__(self, message: str, progress=None):
        super().__init__(message)
        self.progress = progress
