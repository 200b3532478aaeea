"""Counterfactual survival times under a specified treatment strategy.

The observed follow-up is split at treatment-status change times. Hazard
accumulated in each interval is rescaled by exp(offset) for that interval,
giving the cumulative hazard that the reference strategy would have
produced; inverting the reference cumulative hazard at that value yields
the counterfactual survival time. With absolute offsets the reference
strategy is never-treated; with relative offsets it is the subject's
baseline strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InvalidSpecError


@dataclass
class HazardPath:
    """Subject-level cumulative hazard plus the offset history against it.

    ``cumhaz`` maps time to cumulative hazard on the reference scale; it
    may be any monotone callable. Objects exposing an ``inverse(h)``
    method (e.g. StepCumHaz) are inverted exactly; plain callables are
    inverted numerically. ``offsets[i]`` applies on
    [change_times[i], change_times[i+1]) with the event time closing the
    last interval. Time before the first change time is offset-free.
    """

    cumhaz: object
    change_times: list = field(default_factory=list)
    offsets: list = field(default_factory=list)
    t_event: float = 0.0
    event: bool = False

    def __post_init__(self):
        if len(self.change_times) != len(self.offsets):
            raise InvalidSpecError("one offset required per change time")
        times = list(self.change_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidSpecError(f"change times must be strictly increasing: {times}")
        if times and times[-1] >= self.t_event:
            raise InvalidSpecError("last change time must precede the event time")


def cf_cumhaz_at_event(path: HazardPath) -> float:
    """Reference-scale cumulative hazard matching the observed follow-up."""
    H = path.cumhaz
    if not path.change_times:
        return float(H(path.t_event))
    bounds = list(path.change_times) + [path.t_event]
    total = float(H(bounds[0]))
    for o, a, b in zip(path.offsets, bounds, bounds[1:]):
        total += np.exp(o) * (float(H(b)) - float(H(a)))
    return total


def cf_survival_time(path: HazardPath, max_followup: float | None = None):
    """Counterfactual (time, event) pair under the reference strategy.

    Returns the minimum time at which the reference cumulative hazard
    reaches the rescaled total, capped at ``max_followup`` when given.
    The event indicator is unchanged.
    """
    target = cf_cumhaz_at_event(path)
    H = path.cumhaz
    # when the rescaled total equals the hazard already accumulated at the
    # observed time, the observed time itself is the counterfactual time;
    # returning it directly keeps the offset-free identity exact even where
    # a step-function H is flat around t_event
    if abs(target - float(H(path.t_event))) <= 1e-12 * max(1.0, abs(target)):
        t_cf = float(path.t_event)
        if max_followup is not None:
            t_cf = min(t_cf, float(max_followup))
        return t_cf, path.event
    t_cf = None
    if hasattr(H, "inverse"):
        t_cf = H.inverse(target)
    else:
        if max_followup is None:
            raise DomainError("numerical inversion needs max_followup as a search bound")
        if float(H(max_followup)) >= target:
            if target <= float(H(0.0)):
                t_cf = 0.0
            else:
                t_cf = float(brentq(lambda t: float(H(t)) - target, 0.0, max_followup, xtol=1e-12))
    if t_cf is None:
        if max_followup is None:
            raise DomainError("cumulative hazard never reaches the counterfactual target")
        t_cf = float(max_followup)
    if max_followup is not None:
        t_cf = min(t_cf, float(max_followup))
    return t_cf, path.event
