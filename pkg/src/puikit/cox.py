"""Counting-process Cox proportional-hazards engine.

Handles (tstart, tstop] interval rows with offsets entering the linear
predictor at fixed coefficient 1, Breslow tie handling, and the Breslow
baseline cumulative-hazard estimator. Left truncation is native: a row is
at risk at time t iff tstart < t <= tstop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DesignError,
    DomainError,
    InvalidSpecError,
    RankDeficiencyError,
)
from .splines import SplineSpec, rcs_basis


@dataclass(frozen=True)
class CohortRow:
    """One counting-process interval (tstart, tstop] of one subject."""

    subject_id: str
    tstart: float
    tstop: float
    event: bool
    covariates: dict
    offset: float = 0.0

    def __post_init__(self):
        if not self.tstop > self.tstart:
            raise InvalidSpecError(
                f"subject {self.subject_id}: tstop {self.tstop} <= tstart {self.tstart}"
            )
        if self.tstart < 0:
            raise InvalidSpecError(f"subject {self.subject_id}: negative tstart")


@dataclass(frozen=True)
class FormulaSpec:
    """Right-hand side of a hazard model.

    ``interactions`` are (modifier, term) pairs; the modifier column
    multiplies every expanded column of the named term. ``offsets`` are
    covariate names summed into the offset vector with coefficient 1.
    """

    linear: tuple[str, ...] = ()
    splines: tuple[SplineSpec, ...] = ()
    interactions: tuple[tuple[str, str], ...] = ()
    offsets: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "linear", tuple(self.linear))
        object.__setattr__(self, "splines", tuple(self.splines))
        object.__setattr__(self, "interactions", tuple(tuple(p) for p in self.interactions))
        object.__setattr__(self, "offsets", tuple(self.offsets))
        declared = set(self.linear) | {s.variable for s in self.splines}
        for modifier, term in self.interactions:
            if term not in declared:
                raise InvalidSpecError(f"interaction references undeclared term {term!r}")

    def resolve(self, rows) -> "FormulaSpec":
        """Fill in data-driven knots for any spline without explicit knots."""
        if all(s.knots is not None for s in self.splines):
            return self
        resolved = []
        for s in self.splines:
            x = np.array([r.covariates[s.variable] for r in rows], float)
            resolved.append(s.resolve(x))
        return FormulaSpec(self.linear, tuple(resolved), self.interactions, self.offsets)


def _expanded_columns(formula: FormulaSpec) -> list[str]:
    cols = list(formula.linear)
    for s in formula.splines:
        cols.append(s.variable)
        cols.extend(f"{s.variable}_rcs{j}" for j in range(2, s.dim + 1))
    for modifier, term in formula.interactions:
        base = [term]
        for s in formula.splines:
            if s.variable == term:
                base = [term] + [f"{term}_rcs{j}" for j in range(2, s.dim + 1)]
        cols.extend(f"{modifier}:{c}" for c in base)
    dupes = {c for c in cols if cols.count(c) > 1}
    if dupes:
        raise DesignError(f"duplicate design columns: {sorted(dupes)}")
    return cols


def build_design(rows, formula: FormulaSpec):
    """Expand rows into (X, columns, offset, tstart, tstop, event) arrays.

    Column order is deterministic: linear terms, spline blocks, then
    interaction blocks, in declaration order.
    """
    formula = formula.resolve(rows)
    columns = _expanded_columns(formula)
    n = len(rows)

    def pull(name):
        try:
            return np.array([r.covariates[name] for r in rows], float)
        except KeyError as exc:
            raise DesignError(f"covariate {exc.args[0]!r} missing from cohort rows") from None

    blocks = {}
    for name in formula.linear:
        blocks[name] = pull(name)
    for s in formula.splines:
        basis = rcs_basis(pull(s.variable), s.knots)
        blocks[s.variable] = basis[:, 0]
        for j in range(2, s.dim + 1):
            blocks[f"{s.variable}_rcs{j}"] = basis[:, j - 1]
    for modifier, term in formula.interactions:
        mod = pull(modifier)
        for c in list(blocks):
            if c == term or c.startswith(f"{term}_rcs"):
                blocks[f"{modifier}:{c}"] = mod * blocks[c]

    X = np.column_stack([blocks[c] for c in columns]) if columns else np.empty((n, 0))
    offset = np.array([r.offset for r in rows], float)
    for name in formula.offsets:
        offset = offset + pull(name)
    tstart = np.array([r.tstart for r in rows], float)
    tstop = np.array([r.tstop for r in rows], float)
    event = np.array([r.event for r in rows], bool)
    return X, columns, offset, tstart, tstop, event


class StepCumHaz:
    """Nondecreasing step function through (time, H) points, H(0) = 0."""

    def __init__(self, times, values):
        self.times = np.asarray(times, float)
        self.values = np.asarray(values, float)
        if self.times.size and (np.any(np.diff(self.times) <= 0) or np.any(np.diff(self.values) < -1e-12)):
            raise InvalidSpecError("step function times must ascend and values be nondecreasing")

    def __call__(self, t):
        t = np.asarray(t, float)
        idx = np.searchsorted(self.times, t, side="right")
        vals = np.concatenate([[0.0], self.values])
        out = vals[idx]
        return float(out) if out.ndim == 0 else out

    def inverse(self, h: float):
        """Left-most step time with H(t) >= h; None if never attained."""
        if h <= 0:
            return 0.0
        idx = np.searchsorted(self.values, h - 1e-15, side="left")
        if idx >= len(self.times):
            return None
        return float(self.times[idx])

    @property
    def t_max(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    def pairs(self):
        return [[float(t), float(h)] for t, h in zip(self.times, self.values)]


@dataclass
class CoxFit:
    """A fitted counting-process Cox model."""

    coefficients: dict
    columns: list
    vcov: np.ndarray
    baseline_cumhaz: StepCumHaz
    formula: FormulaSpec
    iterations: int
    gradient_norm: float
    log_likelihood: float
    t_max: float

    @property
    def beta(self) -> np.ndarray:
        return np.array([self.coefficients[c] for c in self.columns], float)

    def linear_predictor(self, covariates: dict) -> float:
        """Evaluate the covariate part of the linear predictor (no offsets)."""
        row = CohortRow("_", 0.0, 1.0, False, covariates)
        stripped = FormulaSpec(self.formula.linear, self.formula.splines, self.formula.interactions)
        X, _, _, _, _, _ = build_design([row], stripped)
        return float(X[0] @ self.beta) if self.columns else 0.0


class _RiskSums:
    """Risk-set sums over counting-process rows at each distinct event time.

    For a per-row quantity f_i, the sum over the risk set at time t
    (tstart < t <= tstop) equals sum over {tstop >= t} minus sum over
    {tstart >= t}; both are suffix sums in sorted order.
    """

    def __init__(self, tstart, tstop, event):
        self.order_stop = np.argsort(tstop, kind="stable")
        self.order_start = np.argsort(tstart, kind="stable")
        self.tstop_sorted = tstop[self.order_stop]
        self.tstart_sorted = tstart[self.order_start]
        # distinct event times, ascending, with multiplicities
        et = tstop[event]
        self.event_times, self.d = np.unique(et, return_counts=True)
        self.idx_stop = np.searchsorted(self.tstop_sorted, self.event_times, side="left")
        self.idx_start = np.searchsorted(self.tstart_sorted, self.event_times, side="left")

    def __call__(self, f):
        """Risk-set sums of f (shape (n,) or (n, k)) at each event time."""
        f = np.asarray(f, float)
        single = f.ndim == 1
        if single:
            f = f[:, None]
        tot_stop = np.concatenate([np.zeros((1, f.shape[1])), np.cumsum(f[self.order_stop], axis=0)])
        tot_start = np.concatenate([np.zeros((1, f.shape[1])), np.cumsum(f[self.order_start], axis=0)])
        suffix_stop = tot_stop[-1] - tot_stop[self.idx_stop]
        suffix_start = tot_start[-1] - tot_start[self.idx_start]
        out = suffix_stop - suffix_start
        return out[:, 0] if single else out


def _loglik_parts(X, offset, event, sums, beta):
    lp = offset + (X @ beta if X.shape[1] else 0.0)
    w = np.exp(lp)
    s0 = sums(w)
    loglik = float(lp[event].sum() - (sums.d * np.log(s0)).sum())
    return lp, w, s0, loglik


def partial_loglik(X, offset, tstart, tstop, event, beta) -> float:
    """Breslow partial log-likelihood at beta (used by tests and traces)."""
    sums = _RiskSums(tstart, tstop, event)
    return _loglik_parts(X, offset, event, sums, beta)[3]


def _score_info(X, event, sums, w, s0):
    p = X.shape[1]
    s1 = sums(w[:, None] * X)  # (E, p)
    score = X[event].sum(axis=0) - (sums.d[:, None] * s1 / s0[:, None]).sum(axis=0)
    # S2 in column chunks to bound memory
    info = np.zeros((p, p))
    sbar = s1 / s0[:, None]
    chunk = max(1, int(4e6 // max(1, X.shape[0])))
    for j0 in range(0, p, chunk):
        j1 = min(p, j0 + chunk)
        xxw = w[:, None, None] * X[:, :, None] * X[:, None, j0:j1]  # (n, p, j1-j0)
        s2 = sums(xxw.reshape(X.shape[0], -1)).reshape(-1, p, j1 - j0)
        info[:, j0:j1] = (
            sums.d[:, None, None] * (s2 / s0[:, None, None] - sbar[:, :, None] * sbar[:, None, j0:j1])
        ).sum(axis=0)
    return score, info


def fit_cox(rows, formula: FormulaSpec, tolerance: float = 1e-8, max_iter: int = 50) -> CoxFit:
    """Maximize the Breslow partial likelihood by Newton-Raphson.

    Offsets enter the linear predictor with fixed coefficient 1. Step
    halving is applied whenever a full Newton step decreases the
    likelihood. Convergence is gradient max-norm < tolerance.
    """
    formula = formula.resolve(rows)
    X, columns, offset, tstart, tstop, event = build_design(rows, formula)
    if not event.any():
        raise InvalidSpecError("no events in cohort; nothing to fit")
    p = X.shape[1]
    sums = _RiskSums(tstart, tstop, event)

    if p == 0:
        _, w, s0, loglik = _loglik_parts(X, offset, event, sums, np.zeros(0))
        baseline = _breslow_from_sums(sums, s0, float(tstop.max()))
        return CoxFit({}, [], np.zeros((0, 0)), baseline, formula, 0, 0.0, loglik, float(tstop.max()))

    variances = X.var(axis=0)
    flat = [c for c, v in zip(columns, variances) if v < 1e-14]
    if flat:
        raise RankDeficiencyError(f"zero-variance design columns: {flat}", columns=flat)

    beta = np.zeros(p)
    lp, w, s0, loglik = _loglik_parts(X, offset, event, sums, beta)
    trace = [loglik]
    grad_norm = np.inf
    for iteration in range(1, max_iter + 1):
        score, info = _score_info(X, event, sums, w, s0)
        grad_norm = float(np.abs(score).max())
        if grad_norm < tolerance:
            break
        cond = np.linalg.cond(info)
        if not np.isfinite(cond) or cond > 1e12:
            _, _, vt = np.linalg.svd(info)
            worst = np.argsort(-np.abs(vt[-1]))[:3]
            bad = [columns[j] for j in worst]
            raise RankDeficiencyError(
                f"singular information matrix; collinear columns likely among {bad}", columns=bad
            )
        step = np.linalg.solve(info, score)
        for _ in range(30):
            cand = beta + step
            lp, w, s0, cand_loglik = _loglik_parts(X, offset, event, sums, cand)
            if cand_loglik >= loglik - 1e-12:
                break
            step = step / 2.0
        else:
            raise ConvergenceError("step halving failed to improve likelihood", trace=trace)
        stalled = abs(cand_loglik - loglik) < 1e-13 * (abs(cand_loglik) + 1.0)
        beta, loglik = cand, cand_loglik
        trace.append(loglik)
        if stalled:
            # likelihood changes are below float resolution; the gradient
            # cannot shrink further at this sample size
            score, info = _score_info(X, event, sums, w, s0)
            grad_norm = float(np.abs(score).max())
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations (|grad| = {grad_norm:.3g})", trace=trace
        )

    score, info = _score_info(X, event, sums, w, s0)
    vcov = np.linalg.inv(info)
    baseline = _breslow_from_sums(sums, s0, float(tstop.max()))
    return CoxFit(
        coefficients=dict(zip(columns, beta.tolist())),
        columns=columns,
        vcov=vcov,
        baseline_cumhaz=baseline,
        formula=formula,
        iterations=iteration,
        gradient_norm=grad_norm,
        log_likelihood=loglik,
        t_max=float(tstop.max()),
    )


def _breslow_from_sums(sums: _RiskSums, s0, t_max: float) -> StepCumHaz:
    times = sums.event_times
    values = np.cumsum(sums.d / s0)
    if times.size and t_max > times[-1]:
        times = np.append(times, t_max)
        values = np.append(values, values[-1])
    return StepCumHaz(times, values)


def breslow_cumhaz(fit: CoxFit, rows) -> StepCumHaz:
    """Recompute the Breslow baseline cumulative hazard on given rows."""
    X, _, offset, tstart, tstop, event = build_design(rows, fit.formula)
    if not event.any():
        return StepCumHaz([float(tstop.max())], [0.0])
    sums = _RiskSums(tstart, tstop, event)
    _, _, s0, _ = _loglik_parts(X, offset, event, sums, fit.beta)
    return _breslow_from_sums(sums, s0, float(tstop.max()))


def predict_survival(fit: CoxFit, covariates: dict, offset: float = 0.0, horizon: float = 3653.0) -> float:
    """Risk of an event within `horizon` days: 1 - exp(-H0(w) exp(lp + offset))."""
    if horizon > fit.t_max + 1e-9:
        raise DomainError(f"horizon {horizon} beyond fitted follow-up {fit.t_max}")
    h0 = float(fit.baseline_cumhaz(horizon))
    lp = fit.linear_predictor(covariates)
    return float(1.0 - np.exp(-h0 * np.exp(lp + offset)))
