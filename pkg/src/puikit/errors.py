"""Exception types shared across the toolkit."""


class PuiError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpecError(PuiError):
    """A spline, formula, or configuration object is malformed."""


class DesignError(PuiError):
    """Design-matrix construction failed (missing or duplicate columns)."""


class RankDeficiencyError(PuiError):
    """The information matrix is singular."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = list(columns)


class ConvergenceError(PuiError):
    """Newton-Raphson failed to converge."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class TimelineError(PuiError):
    """Treatment intervals do not partition follow-up."""


class DomainError(PuiError):
    """A requested time point lies outside the supported domain."""


class UnresolvedEffectError(PuiError):
    """A causal path contains an edge whose effect is unknown."""


class UnderdeterminedError(PuiError):
    """Fewer independent equations than unknown edge effects."""

    def __init__(self, message, free_unknowns=()):
        super().__init__(message)
        self.free_unknowns = list(free_unknowns)


class InconsistentSystemError(PuiError):
    """Known totals cannot all be satisfied by any edge assignment."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class VariantError(PuiError):
    """A prediction routine was called with the wrong model variant."""


class AnchorError(PuiError):
    """A first-visit anchor is missing or would be overwritten."""
