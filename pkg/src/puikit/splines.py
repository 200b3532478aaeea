"""Restricted cubic spline basis (Harrell parameterization).

The basis for K knots has K-1 columns: the identity term plus K-2
truncated-cubic terms constrained to be linear beyond the boundary knots.
Nonlinear terms are normalized by the squared knot range so coefficients
stay on a comparable scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError

# Quantile positions for automatic knot placement, by knot count.
KNOT_QUANTILES = {
    3: (0.10, 0.50, 0.90),
    4: (0.05, 0.35, 0.65, 0.95),
    5: (0.05, 0.275, 0.50, 0.725, 0.95),
}


@dataclass(frozen=True)
class SplineSpec:
    """A restricted cubic spline term on one variable.

    ``knots`` may be None, in which case they are placed at standard
    quantiles of the observed data when the formula is resolved.
    """

    variable: str
    knots: tuple[float, ...] | None = None
    n_knots: int = 4

    def __post_init__(self):
        if self.knots is not None:
            k = tuple(float(v) for v in self.knots)
            _check_knots(k)
            object.__setattr__(self, "knots", k)
            object.__setattr__(self, "n_knots", len(k))
        elif self.n_knots < 3:
            raise InvalidSpecError(f"spline on {self.variable!r} needs >= 3 knots")

    def resolve(self, x: np.ndarray) -> "SplineSpec":
        """Return a copy with concrete knots, placing them from data if needed."""
        if self.knots is not None:
            return self
        return SplineSpec(self.variable, knots=default_knots(x, self.n_knots))

    @property
    def dim(self) -> int:
        return self.n_knots - 1


def _check_knots(knots):
    if len(knots) < 3:
        raise InvalidSpecError(f"need >= 3 knots, got {len(knots)}")
    if any(b <= a for a, b in zip(knots, knots[1:])):
        raise InvalidSpecError(f"knots must be strictly ascending: {knots}")


def default_knots(x: np.ndarray, n_knots: int = 4) -> tuple[float, ...]:
    """Knots at Harrell's conventional quantiles of the observed values."""
    if n_knots not in KNOT_QUANTILES:
        raise InvalidSpecError(f"no default quantiles for {n_knots} knots")
    knots = tuple(float(q) for q in np.quantile(np.asarray(x, float), KNOT_QUANTILES[n_knots]))
    _check_knots(knots)
    return knots


def rcs_basis(x, knots) -> np.ndarray:
    """Evaluate the restricted cubic spline basis.

    Parameters
    ----------
    x : scalar or array
        Point(s) at which to evaluate.
    knots : ascending sequence of >= 3 floats

    Returns
    -------
    Array of shape ``(..., len(knots) - 1)``; the first column is ``x``
    itself, the rest are the restricted truncated-cubic terms.
    """
    knots = tuple(float(k) for k in knots)
    _check_knots(knots)
    x = np.asarray(x, dtype=float)
    k = np.array(knots)
    t_last, t_pen, t_first = k[-1], k[-2], k[0]
    scale = (t_last - t_first) ** 2

    def trunc3(v):
        return np.maximum(v, 0.0) ** 3

    cols = [x]
    for kj in k[:-2]:
        term = (
            trunc3(x - kj)
            - trunc3(x - t_pen) * (t_last - kj) / (t_last - t_pen)
            + trunc3(x - t_last) * (t_pen - kj) / (t_last - t_pen)
        ) / scale
        cols.append(term)
    return np.stack(cols, axis=-1)
