"""Point estimators built on frequency tables.

Three groups live here:

* closed forms for two-point tables (exponential rate, normal mean and
  standard deviation) together with the pairwise-weighted aggregation that
  extends them to longer tables;
* numerical estimators: minimum distance in variations (:func:`min_dv`),
  maximum likelihood and moment matching on the auxiliary (renormalized)
  distribution (:func:`new_mle`, :func:`new_moments`);
* classical baselines (:func:`classical_mle`,
  :func:`classical_truncated_mle`) and the perturbation sweep.

Numerical estimators share one search routine working in an unconstrained
coordinate per parameter (log for positive parameters, logit for
probabilities). One free parameter is located by a grid scan followed by
golden-section refinement; two free parameters use restarted Nelder-Mead.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize, special

from .distributions import ParametricModel, family_info, log_density
from .errors import (
    DegenerateError,
    DomainError,
    ParameterError,
    UnsupportedFamilyError,
    ZeroDensityError,
)
from .tables import FrequencyTable, Region
from .vdist import dv_model

__all__ = [
    "EXACT_TOL",
    "EstimationResult",
    "Method",
    "PerturbationSweep",
    "Status",
    "classical_mle",
    "classical_truncated_mle",
    "estimate",
    "exp_rate_classical_two_point",
    "exp_rate_two_point",
    "min_dv",
    "new_mle",
    "new_moments",
    "normal_mean_two_point",
    "normal_sigma_two_point",
    "perturbation_sweep",
    "weighted_pairwise",
]

EXACT_TOL = 1e-9


class Method(str, enum.Enum):
    CLOSED_FORM = "closed-form"
    MIN_DV = "min-dv"
    NEW_MLE = "new-mle"
    NEW_MOMENTS = "new-moments"
    CLASSICAL_MLE = "classical-mle"
    CLASSICAL_TRUNCATED_MLE = "classical-truncated-mle"
    WEIGHTED_PAIRWISE = "weighted-pairwise"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    TOLERANCE_SET = "tolerance-set"
    NO_SOLUTION = "no-solution"
    DEGENERATE = "degenerate"


@dataclass
class EstimationResult:
    """Outcome of any estimator.

    ``params`` is the family's full parameter vector (known parameters
    included); ``free`` names the ones that were estimated. When ``status``
    is NO_SOLUTION or DEGENERATE the estimated entries may be NaN or out of
    range and ``dv_at_optimum`` is NaN.
    """

    family: str
    params: tuple[float, ...]
    free: tuple[str, ...]
    dv_at_optimum: float
    method: Method
    status: Status
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return bool(np.isfinite(self.dv_at_optimum) and self.dv_at_optimum <= EXACT_TOL)

    @property
    def ok(self) -> bool:
        return self.status in (Status.CONVERGED, Status.TOLERANCE_SET)

    @property
    def model(self) -> ParametricModel:
        return ParametricModel(self.family, self.params)

    @property
    def estimate(self) -> np.ndarray:
        """Values of the free parameters only."""
        info = family_info(self.family)
        return np.array([self.params[info.index(n)] for n in self.free])

    def __getitem__(self, name: str) -> float:
        return self.params[family_info(self.family).index(name)]

    def to_dict(self) -> dict:
        info = family_info(self.family)
        return {
            "family": self.family,
            "params": dict(zip(info.param_names, self.params)),
            "free": list(self.free),
            "dv_at_optimum": self.dv_at_optimum,
            "exact": self.exact,
            "method": self.method.value,
            "status": self.status.value,
            "iterations": self.iterations,
            "diagnostics": self.diagnostics,
        }


def _dv_or_nan(table_or_points, model: ParametricModel | None) -> float:
    if model is None:
        return math.nan
    try:
        return dv_model(table_or_points, model)
    except (ZeroDensityError, ParameterError):
        return math.nan


def _two_point_table(x, y, n1, n2) -> FrequencyTable:
    return FrequencyTable(np.array([x, y], dtype=float), np.array([n1, n2], dtype=float))


def _closed_form_result(family, params, free, table, method=Method.CLOSED_FORM, **diag):
    try:
        model = ParametricModel(family, params)
    except ParameterError as exc:
        return EstimationResult(
            family, tuple(params), free, math.nan, method, Status.NO_SOLUTION,
            diagnostics={"reason": str(exc), **diag},
        )
    return EstimationResult(
        family, model.params, free, _dv_or_nan(table, model), method, Status.CONVERGED,
        diagnostics=diag,
    )


# -- closed forms ------------------------------------------------------------

def exp_rate_two_point(x: float, y: float, n1: float, n2: float) -> EstimationResult:
    """Exponential rate matching the ratio ``n1/n2`` exactly.

    The estimate ``(ln n1 - ln n2) / (y - x)`` is the unique zero of the
    distance on a two-point table. A non-positive value means the counts
    increase along the support, which no exponential can produce; it is
    reported as NO_SOLUTION rather than clamped.
    """
    if x == y:
        raise DegenerateError("the two support points coincide")
    if n1 <= 0 or n2 <= 0:
        raise ZeroDensityError("counts must be strictly positive")
    rate = (math.log(n1) - math.log(n2)) / (y - x)
    res = _closed_form_result("exponential", (rate,), ("rate",), _two_point_table(x, y, n1, n2))
    if res.status is Status.NO_SOLUTION:
        res.diagnostics["reason"] = (
            f"rate {rate:.6g} <= 0: counts do not decrease along the support"
        )
    return res


def exp_rate_classical_two_point(x: float, y: float, n1: float, n2: float) -> EstimationResult:
    """Complete-sample exponential MLE ``(n1 + n2) / (n1 x + n2 y)``."""
    denom = n1 * x + n2 * y
    if not denom > 0:
        raise DegenerateError(f"n1*x + n2*y = {denom} must be positive")
    rate = (n1 + n2) / denom
    if x == y:
        # a single support point: no ratio to compare against
        return EstimationResult("exponential", (rate,), ("rate",), math.nan,
                                Method.CLASSICAL_MLE, Status.CONVERGED)
    return _closed_form_result("exponential", (rate,), ("rate",), _two_point_table(x, y, n1, n2),
                               method=Method.CLASSICAL_MLE)


def normal_mean_two_point(x: float, y: float, n1: float, n2: float, sigma: float) -> EstimationResult:
    """Normal mean with known ``sigma`` matching the ratio ``n1/n2`` exactly."""
    if x == y:
        raise DegenerateError("the two support points coincide")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    s2 = sigma * sigma
    m = (-math.log(n1 / n2) - 0.5 * x * x / s2 + 0.5 * y * y / s2) / ((y - x) / s2)
    return _closed_form_result("normal", (m, sigma), ("mean",), _two_point_table(x, y, n1, n2))


def normal_sigma_two_point(x: float, y: float, n1: float, n2: float, m: float) -> EstimationResult:
    """Normal standard deviation with known mean ``m`` matching ``n1/n2``.

    Equal counts leave sigma free when ``x`` and ``y`` are equidistant from
    ``m`` (DEGENERATE) and unsolvable otherwise (NO_SOLUTION). A negative
    radicand means the larger count sits farther from ``m``, also
    NO_SOLUTION.
    """
    if x == y:
        raise DegenerateError("the two support points coincide")
    table = _two_point_table(x, y, n1, n2)
    log_r = math.log(n1 / n2)
    gap = -2 * m * x + 2 * m * y + x * x - y * y
    scale = max(1.0, x * x, y * y, abs(m * x), abs(m * y))
    if log_r == 0.0:
        if abs(gap) <= 1e-12 * scale:
            return EstimationResult(
                "normal", (m, math.nan), ("sd",), math.nan, Method.CLOSED_FORM, Status.DEGENERATE,
                diagnostics={"reason": "equal counts at points equidistant from the mean: any sigma fits"},
            )
        return EstimationResult(
            "normal", (m, math.nan), ("sd",), math.nan, Method.CLOSED_FORM, Status.NO_SOLUTION,
            diagnostics={"reason": "equal counts at points not equidistant from the mean"},
        )
    radicand = log_r * (2 * m * x - 2 * m * y - x * x + y * y)
    if radicand < 0:
        return EstimationResult(
            "normal", (m, math.nan), ("sd",), math.nan, Method.CLOSED_FORM, Status.NO_SOLUTION,
            diagnostics={"reason": "ratio orientation inconsistent with a normal centred at m",
                         "radicand": radicand},
        )
    sigma = abs(math.sqrt(2.0) * math.sqrt(radicand) / (2.0 * log_r))
    return _closed_form_result("normal", (m, sigma), ("sd",), table)


TwoPointSolver = Callable[[float, float, float, float], EstimationResult]


def weighted_pairwise(table: FrequencyTable, solver: TwoPointSolver | str = "exponential") -> EstimationResult:
    """Average two-point closed forms over all pairs of support points.

    Each unordered pair ``(i, j)`` contributes its closed-form estimate with
    weight ``n_i + n_j``. Pairs where the solver has no admissible answer are
    left out of both numerator and denominator and counted in
    ``diagnostics["skipped_pairs"]``.

    ``solver`` is a callable ``(x, y, n1, n2) -> EstimationResult`` such as
    ``functools.partial(normal_mean_two_point, sigma=1.0)``, or the string
    ``"exponential"``.
    """
    if isinstance(solver, str):
        if solver != "exponential":
            raise UnsupportedFamilyError(f"no named two-point solver {solver!r}")
        solver = exp_rate_two_point
    if table.k < 3:
        raise ValueError(f"pairwise aggregation needs at least 3 support points, got {table.k}")
    y, n = table.support, table.counts
    num = None
    den = 0.0
    skipped = []
    template = first = None
    for i in range(table.k):
        for j in range(i + 1, table.k):
            r = solver(y[i], y[j], n[i], n[j])
            first = first or r
            if not r.ok:
                skipped.append([i, j])
                continue
            template = template or r
            w = n[i] + n[j]
            num = w * r.estimate if num is None else num + w * r.estimate
            den += w
    if template is None:
        return EstimationResult(
            first.family, first.params, first.free, math.nan, Method.WEIGHTED_PAIRWISE, Status.NO_SOLUTION,
            diagnostics={"skipped_pairs": skipped, "reason": "no pair admits a solution"},
        )
    est = num / den
    info = family_info(template.family)
    params = list(template.params)
    for name, v in zip(template.free, est):
        params[info.index(name)] = float(v)
    return _closed_form_result(
        template.family, tuple(params), template.free, table, method=Method.WEIGHTED_PAIRWISE,
        skipped_pairs=skipped, pairs_used=table.k * (table.k - 1) // 2 - len(skipped),
    )


# -- parameter handling for numerical estimators -----------------------------

@dataclass
class _Setup:
    family: str
    free: tuple[str, ...]
    full: list[float]           # known values filled, free entries NaN
    free_idx: list[int]
    kinds: list[str]
    lo: np.ndarray              # bounds in transformed coordinates
    hi: np.ndarray
    u0: np.ndarray

    def to_params(self, u) -> tuple[float, ...]:
        p = list(self.full)
        for idx, kind, v in zip(self.free_idx, self.kinds, np.atleast_1d(u)):
            p[idx] = _from_u(kind, v)
        return tuple(p)

    def model(self, u) -> ParametricModel:
        return ParametricModel(self.family, self.to_params(u))


def _to_u(kind, v):
    if kind == "positive":
        return math.log(v)
    if kind == "prob":
        return math.log(v / (1 - v))
    return float(v)


def _from_u(kind, u):
    if kind == "positive":
        return math.exp(u)
    if kind == "prob":
        return float(special.expit(u))
    return float(u)


def _default_init(family: str, table: FrequencyTable, known: Mapping[str, float]) -> dict:
    y, w = table.support, table.probs
    mean = float(w @ y)
    var = float(w @ (y - mean) ** 2) or float(np.ptp(y)) ** 2 / 12
    sd = math.sqrt(var)
    if family == "exponential":
        return {"rate": 1 / mean if mean > 0 else 1.0}
    if family == "normal":
        return {"mean": mean, "sd": sd}
    if family == "poisson":
        return {"rate": max(mean, 0.5)}
    if family == "binomial":
        n = known.get("n", max(y.max(), 1))
        return {"p": min(max(mean / n, 0.05), 0.95)}
    if family == "weibull":
        return {"shape": 1.5, "scale": max(mean, 1e-3)}
    # gamma
    m = max(mean, 1e-3)
    return {"shape": max(m * m / var, 0.1), "rate": max(m / var, 1e-3)}


def _default_bounds(kind: str, table: FrequencyTable) -> tuple[float, float]:
    if kind == "positive":
        return (1e-6, 1e6)
    if kind == "prob":
        return (1e-6, 1 - 1e-6)
    lo, hi = float(table.support.min()), float(table.support.max())
    r = hi - lo
    return (lo - 10 * r, hi + 10 * r)


def _setup(table, family, known=None, init=None, bounds=None) -> _Setup:
    info = family_info(family)
    known = dict(known or {})
    for name in known:
        info.index(name)
    free = tuple(n for n in info.param_names if n not in known)
    if info.name == "binomial" and "n" in free:
        raise ParameterError("binomial estimation requires the number of trials n as a known value")
    if not 1 <= len(free) <= 2:
        raise ParameterError(f"between 1 and 2 free parameters supported, got {free}")
    full = [float(known.get(n, math.nan)) for n in info.param_names]
    free_idx = [info.index(n) for n in free]
    kinds = [info.kinds[i] for i in free_idx]

    if bounds is None:
        bounds = [_default_bounds(k, table) for k in kinds]
    bounds = [tuple(map(float, b)) for b in bounds]
    if len(bounds) != len(free):
        raise DomainError(f"need {len(free)} bound pairs, got {len(bounds)}")
    lo, hi = [], []
    for (a, b), kind, name in zip(bounds, kinds, free):
        if not a < b:
            raise DomainError(f"infeasible bounds for {name}: [{a}, {b}]")
        if kind == "positive" and a <= 0 or kind == "prob" and not (0 < a and b < 1):
            raise DomainError(f"bounds for {name} leave the parameter space: [{a}, {b}]")
        lo.append(_to_u(kind, a))
        hi.append(_to_u(kind, b))
    lo, hi = np.array(lo), np.array(hi)

    if init is None:
        guess = _default_init(info.name, table, known)
        init = [guess[n] for n in free]
    elif isinstance(init, Mapping):
        init = [init[n] for n in free]
    init = list(np.atleast_1d(np.asarray(init, dtype=float)))
    if len(init) != len(free):
        raise ParameterError(f"init must have {len(free)} entries, got {len(init)}")
    u0 = []
    for v, kind, l, h in zip(init, kinds, lo, hi):
        try:
            u = _to_u(kind, v)
        except (ValueError, ZeroDivisionError):
            u = 0.5 * (l + h)
        u0.append(min(max(u, l), h))
    return _Setup(info.name, free, full, free_idx, kinds, lo, hi, np.array(u0))


def _safe(fn):
    @functools.wraps(fn)
    def wrapped(u):
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                v = fn(u)
        except (ParameterError, ZeroDensityError, OverflowError, ValueError):
            return math.inf
        return v if math.isfinite(v) else math.inf
    return wrapped


@dataclass
class _SearchOutcome:
    u: np.ndarray
    value: float
    nfev: int
    at_bound: bool


_GOLD = (math.sqrt(5) - 1) / 2


def _golden(f, a, b, xtol, maxiter=500):
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while abs(b - a) > xtol * (1 + abs(a) + abs(b)) and n < maxiter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
        n += 1
    return (c, fc, n) if fc <= fd else (d, fd, n)


def _derivative_bisection(f, u, lo, hi, width):
    """Locate the zero of f' near ``u`` by bisecting on its sign."""
    h = max(1e-7 * (1 + abs(u)), 1e-9)

    def slope(t):
        return f(t + h) - f(t - h)

    a, b = max(lo, u - width), min(hi, u + width)
    sa, sb = slope(a), slope(b)
    n = 2
    if not (sa < 0 < sb):
        return u, n
    for _ in range(200):
        mid = 0.5 * (a + b)
        s = slope(mid)
        n += 1
        if s < 0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-15 * (1 + abs(mid)):
            break
    return 0.5 * (a + b), n


def _fd_jacobian(vec, u, lo, hi):
    """Central-difference Jacobian of a vector function, shape (k, d)."""
    u = np.asarray(u, dtype=float)
    cols = []
    for a in range(len(u)):
        h = 1e-6 * (1 + abs(u[a]))
        up, dn = u.copy(), u.copy()
        up[a] = min(u[a] + h, hi[a])
        dn[a] = max(u[a] - h, lo[a])
        cols.append((vec(up) - vec(dn)) / (up[a] - dn[a]))
    return np.column_stack(cols)


def _search(objective, setup: _Setup, tol: float, smooth: bool, residuals=None,
            score=None) -> _SearchOutcome:
    f = _safe(objective)
    lo, hi = setup.lo, setup.hi
    nfev = 0
    if len(lo) == 1:
        l, h = lo[0], hi[0]
        grid = np.linspace(l, h, 401)
        vals = np.array([f(np.array([g])) for g in grid])
        nfev += len(grid)
        v0 = f(setup.u0)
        nfev += 1
        if not np.any(np.isfinite(vals)) and not math.isfinite(v0):
            raise ZeroDensityError("objective is not finite anywhere inside the bounds")
        i = int(np.argmin(vals))
        if math.isfinite(v0) and v0 < vals[i]:
            # init beats the grid; bracket around it instead
            i = int(np.clip(np.searchsorted(grid, setup.u0[0]), 1, len(grid) - 1))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        u, fu, n = _golden(lambda t: f(np.array([t])), a, b, min(tol, 1e-10) * 1e-2)
        nfev += n
        if smooth:
            u2, n = _derivative_bisection(lambda t: f(np.array([t])), u, l, h, 1e-3 * (b - a) + 1e-6)
            nfev += n
            f2 = f(np.array([u2]))
            if f2 <= fu:
                u, fu = u2, f2
        best = np.array([u])
    else:
        # coarse grid for a start, then restarted Nelder-Mead
        g0 = np.linspace(lo[0], hi[0], 25)
        g1 = np.linspace(lo[1], hi[1], 25)
        starts = [setup.u0]
        cands = sorted(((f(np.array([a, b])), a, b) for a in g0 for b in g1))
        nfev += len(g0) * len(g1)
        starts += [np.array([a, b]) for v, a, b in cands[:2] if math.isfinite(v)]
        best, fbest = None, math.inf
        for s in starts:
            x, fx = s, f(s)
            for _ in range(8):
                r = optimize.minimize(
                    f, x, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                    options={"xatol": min(tol, 1e-10), "fatol": min(tol, 1e-10) * 1e-2,
                             "maxiter": 4000, "maxfev": 8000, "adaptive": False},
                )
                nfev += r.nfev
                if r.fun < fx - 1e-15 * (1 + abs(fx)):
                    x, fx = r.x, r.fun
                else:
                    break
            if fx < fbest:
                best, fbest = np.asarray(x, dtype=float), fx
        if best is None:
            raise ZeroDensityError("objective is not finite anywhere inside the bounds")
        if smooth:
            r = optimize.minimize(f, best, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                                  options={"ftol": 1e-15, "gtol": 1e-12})
            nfev += r.nfev
            if r.fun <= fbest:
                best, fbest = r.x, r.fun
        fu = fbest
    if score is not None:
        # the objective is too flat near its optimum to pin the location
        # below ~1e-8; a root of the score is resolved far more sharply
        try:
            s0 = np.linalg.norm(score(best))
            r = optimize.least_squares(score, best, bounds=(lo, hi), xtol=1e-15, ftol=1e-15,
                                       gtol=1e-15, max_nfev=100)
            nfev += r.nfev
            fr = f(r.x)
            if np.linalg.norm(r.fun) < s0 and fr <= fu + 1e-9 * (1 + abs(fu)):
                best, fu = r.x, fr
        except (ValueError, ZeroDensityError, ParameterError):
            pass
    if residuals is not None:
        try:
            r = optimize.least_squares(
                residuals, best, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200,
            )
            nfev += r.nfev
            fr = f(r.x)
            if fr < fu:
                best, fu = r.x, fr
        except (ValueError, ZeroDensityError, ParameterError):
            pass
    span = hi - lo
    at_bound = bool(np.any((best - lo) <= 1e-6 * span) or np.any((hi - best) <= 1e-6 * span))
    return _SearchOutcome(np.asarray(best, dtype=float), float(fu), nfev, at_bound)


def _finish(table, setup, out: _SearchOutcome, method, **diag) -> EstimationResult:
    model = setup.model(out.u)
    status = Status.TOLERANCE_SET if out.at_bound else Status.CONVERGED
    if out.at_bound:
        diag.setdefault("note", "no interior optimum bracketed; best boundary point returned")
    return EstimationResult(
        setup.family, model.params, setup.free, _dv_or_nan(table, model), method, status,
        iterations=out.nfev, diagnostics={"objective": out.value, **diag},
    )


def _log_density_fn(setup: _Setup, y):
    def logf(u):
        return np.asarray(log_density(setup.model(u), y), dtype=float)
    return logf


# -- numerical estimators ------------------------------------------------------

def min_dv(table: FrequencyTable, family: str, init=None, bounds=None, tol: float = 1e-10,
           known: Mapping[str, float] | None = None) -> EstimationResult:
    """Minimum distance-in-variations estimate.

    Parameters
    ----------
    table : FrequencyTable
    family : str
    init, bounds : optional
        Start values and ``(lo, hi)`` bounds for the free parameters, in
        family order. Defaults: positive parameters in ``[1e-6, 1e6]``,
        probabilities in ``[1e-6, 1 - 1e-6]``, means within ten data ranges
        of the support.
    tol : float
        Parameter tolerance of the search, in transformed coordinates.
    known : mapping, optional
        Parameters held fixed (``{"sd": 1.0}``, ``{"n": 8}``...).

    Returns
    -------
    EstimationResult
        Status TOLERANCE_SET when the best value sits on a bound, i.e. the
        infimum of the distance is not attained inside the search box.
    """
    setup = _setup(table, family, known, init, bounds)
    y = table.support
    lc = np.log(table.counts)
    logf = _log_density_fn(setup, y)
    k = len(y)

    def objective(u):
        lf = logf(u)
        if not np.all(np.isfinite(lf)):
            raise ZeroDensityError
        with np.errstate(over="ignore", invalid="ignore"):
            d = np.abs(np.exp(lc[:, None] - lc[None, :]) - np.exp(lf[:, None] - lf[None, :]))
        return float(d.sum())

    # zero set of the distance = zero set of these log-ratio residuals
    def residuals(u):
        lf = logf(u)
        r = (lc[1:] - lc[0]) - (lf[1:] - lf[0])
        return np.where(np.isfinite(r), r, 1e6)

    out = _search(objective, setup, tol, smooth=False, residuals=residuals if k > 1 else None)
    return _finish(table, setup, out, Method.MIN_DV)


def new_mle(table: FrequencyTable, family: str, init=None, bounds=None, tol: float = 1e-10,
            known: Mapping[str, float] | None = None) -> EstimationResult:
    """Maximum likelihood for the model renormalized on the table support.

    Maximizes ``sum_i n_i log fbar(y_i)`` where ``fbar`` is the model's
    density at the support points divided by its sum over them. On a
    two-point exponential table this reproduces the exact-ratio rate.
    """
    setup = _setup(table, family, known, init, bounds)
    n = table.counts
    logf = _log_density_fn(setup, table.support)

    def objective(u):
        lf = logf(u)
        if not np.all(np.isfinite(lf)):
            raise ZeroDensityError
        return float(-(n @ (lf - special.logsumexp(lf))))

    total = n.sum()

    def score(u):
        lf = logf(u)
        fbar = np.exp(lf - special.logsumexp(lf))
        jac = _fd_jacobian(logf, u, setup.lo, setup.hi)
        return jac.T @ (n / total - fbar)

    out = _search(objective, setup, tol, smooth=True, score=score)
    return _finish(table, setup, out, Method.NEW_MLE, loglik=-out.value)


def new_moments(table: FrequencyTable, family: str, init=None, bounds=None, tol: float = 1e-10,
                known: Mapping[str, float] | None = None) -> EstimationResult:
    """Moment matching between the table and the renormalized model.

    Solves ``sum_i fbar(y_i) y_i**r = sum_i fhat_i y_i**r`` for
    ``r = 1..d`` with ``d`` the number of free parameters, by bounded
    least squares from several starts. Each equation is scaled by
    ``sum_i fhat_i |y_i|**r``. If the best scaled residual norm exceeds
    ``max(tol, 1e-8)`` the result is NO_SOLUTION.
    """
    setup = _setup(table, family, known, init, bounds)
    y = table.support
    fhat = table.probs
    d = len(setup.free)
    powers = np.vstack([y**r for r in range(1, d + 1)])
    target = powers @ fhat
    scale = np.abs(powers) @ fhat
    scale = np.where(scale > 0, scale, 1.0)
    logf = _log_density_fn(setup, y)

    def residuals(u):
        try:
            lf = logf(u)
        except ParameterError:
            return np.full(d, 1e6)
        if not np.all(np.isfinite(lf)):
            return np.full(d, 1e6)
        fbar = np.exp(lf - special.logsumexp(lf))
        return (powers @ fbar - target) / scale

    starts = [setup.u0]
    if d == 1:
        grid = np.linspace(setup.lo[0], setup.hi[0], 201)
        norms = [np.linalg.norm(residuals(np.array([g]))) for g in grid]
        starts.append(np.array([grid[int(np.argmin(norms))]]))
    else:
        g0 = np.linspace(setup.lo[0], setup.hi[0], 25)
        g1 = np.linspace(setup.lo[1], setup.hi[1], 25)
        cands = sorted((np.linalg.norm(residuals(np.array([a, b]))), a, b) for a in g0 for b in g1)
        starts += [np.array([a, b]) for _, a, b in cands[:3]]
    best = None
    nfev = 0
    for s in starts:
        r = optimize.least_squares(residuals, s, bounds=(setup.lo, setup.hi),
                                   xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500)
        nfev += r.nfev
        if best is None or np.linalg.norm(r.fun) < np.linalg.norm(best.fun):
            best = r
        if np.linalg.norm(best.fun) < 1e-13:
            break
    norm = float(np.linalg.norm(best.fun))
    model = setup.model(best.x)
    span = setup.hi - setup.lo
    at_bound = bool(np.any(best.x - setup.lo <= 1e-6 * span) or np.any(setup.hi - best.x <= 1e-6 * span))
    if norm > max(tol, 1e-8):
        status = Status.NO_SOLUTION
    else:
        status = Status.TOLERANCE_SET if at_bound else Status.CONVERGED
    return EstimationResult(
        setup.family, model.params, setup.free, _dv_or_nan(table, model), Method.NEW_MOMENTS,
        status, iterations=nfev, diagnostics={"residual_norm": norm},
    )


def classical_truncated_mle(table: FrequencyTable, family: str, observed_region=None, init=None,
                            bounds=None, tol: float = 1e-10,
                            known: Mapping[str, float] | None = None) -> EstimationResult:
    """Classical maximum likelihood for data observed only inside a region.

    Maximizes ``sum_i n_i [log f(y_i) - log P(region)]``, the observed
    likelihood of a type-I censored sample summarized by its class
    representatives. ``observed_region=None`` means the whole support.
    """
    region = None if observed_region is None else Region.coerce(observed_region)
    setup = _setup(table, family, known, init, bounds)
    n = table.counts
    logf = _log_density_fn(setup, table.support)

    def objective(u):
        lf = logf(u)
        if not np.all(np.isfinite(lf)):
            raise ZeroDensityError
        ll = float(n @ lf)
        if region is not None:
            p = region.probability(setup.model(u))
            if not p > 0:
                raise ZeroDensityError("region probability underflows")
            ll -= n.sum() * math.log(p)
        return -ll

    total = n.sum()

    def log_region_prob(u):
        return np.array([math.log(region.probability(setup.model(u)))])

    def score(u):
        g = _fd_jacobian(logf, u, setup.lo, setup.hi).T @ (n / total)
        if region is not None:
            g = g - _fd_jacobian(log_region_prob, u, setup.lo, setup.hi)[0]
        return g

    out = _search(objective, setup, tol, smooth=True, score=score)
    method = Method.CLASSICAL_MLE if region is None else Method.CLASSICAL_TRUNCATED_MLE
    diag = {"loglik": -out.value}
    if region is not None:
        diag["region"] = str(region)
    return _finish(table, setup, out, method, **diag)


def classical_mle(table: FrequencyTable, family: str, init=None, bounds=None, tol: float = 1e-10,
                  known: Mapping[str, float] | None = None) -> EstimationResult:
    """Complete-sample MLE treating support points as grouped observations."""
    return classical_truncated_mle(table, family, None, init, bounds, tol, known)


# -- perturbation sweep ----------------------------------------------------------

@dataclass
class PerturbationSweep:
    epsilons: np.ndarray
    estimates: np.ndarray
    truth: float
    slope: float
    intercept: float
    r_squared: float
    param: str

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.estimates - self.truth)

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "truth": self.truth,
            "epsilons": self.epsilons.tolist(),
            "estimates": self.estimates.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def perturbation_sweep(true_model: ParametricModel, support: Sequence[float], epsilons: Sequence[float],
                       param: str | None = None) -> PerturbationSweep:
    """Re-estimate from two-point tables whose ratio is off by ``epsilon``.

    For each ``eps`` the table ``(x, y)`` gets counts ``(f(x)/f(y) + eps, 1)``
    and the matching closed form is applied: the exponential rate, or for a
    normal the mean (``param="mean"``, sd known) or the standard deviation
    (``param="sd"``, mean known). Other families fall back to :func:`min_dv`
    with every other parameter known. The slope ``k`` of estimate against
    ``eps`` is fitted by least squares.
    """
    x, y = map(float, support)
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps < 0) or np.any(np.diff(eps) >= 0):
        raise DomainError("epsilons must be non-negative and strictly decreasing")
    base = math.exp(float(log_density(true_model, x) - log_density(true_model, y)))
    if not np.all(base + eps > 0):
        raise DomainError("perturbed ratio is not positive")
    fam = true_model.family
    names = true_model.info.param_names
    if param is None:
        param = "rate" if fam in ("exponential", "poisson") else ("mean" if fam == "normal" else names[-1])
    truth = true_model.param(param)

    if fam == "exponential":
        solve = exp_rate_two_point
    elif fam == "normal" and param == "mean":
        solve = functools.partial(normal_mean_two_point, sigma=true_model.param("sd"))
    elif fam == "normal" and param == "sd":
        solve = functools.partial(normal_sigma_two_point, m=true_model.param("mean"))
    else:
        known = {n: v for n, v in zip(names, true_model.params) if n != param}

        def solve(a, b, n1, n2):
            return min_dv(_two_point_table(a, b, n1, n2), fam, known=known)

    estimates = []
    for e in eps:
        r = solve(x, y, base + e, 1.0)
        if not r.ok:
            raise DomainError(f"closed form has no solution at eps={e}: {r.diagnostics}")
        estimates.append(r[param])
    est = np.array(estimates)
    if len(eps) >= 2:
        k, b = np.polyfit(eps, est, 1)
        fitted = b + k * eps
        ss_res = float(np.sum((est - fitted) ** 2))
        ss_tot = float(np.sum((est - est.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        k, b, r2 = math.nan, float(est[0]), math.nan
    return PerturbationSweep(eps, est, truth, float(k), float(b), float(r2), param)


# -- dispatcher ------------------------------------------------------------------

def _closed_form_for(table: FrequencyTable, family: str, known: Mapping[str, float]):
    if table.k != 2:
        return None
    (x, y), (n1, n2) = table.support, table.counts
    if family == "exponential" and not known:
        return exp_rate_two_point(x, y, n1, n2)
    if family == "normal" and set(known) == {"sd"}:
        return normal_mean_two_point(x, y, n1, n2, known["sd"])
    if family == "normal" and set(known) == {"mean"}:
        return normal_sigma_two_point(x, y, n1, n2, known["mean"])
    return None


METHODS = ("dv", "new-mle", "new-moments", "classical", "classical-truncated", "pairwise")


def estimate(table: FrequencyTable, family: str, method: str = "dv",
             known: Mapping[str, float] | None = None, region=None, **kwargs) -> EstimationResult:
    """Run any estimator by name.

    ``method="dv"`` uses the exact two-point closed form when one exists
    for the table and free parameter; when that closed form has no
    admissible solution the numerical minimizer's best point is attached as
    ``diagnostics["fallback"]``.
    """
    family = family_info(family).name
    known = dict(known or {})
    if method == "dv":
        closed = _closed_form_for(table, family, known)
        if closed is None:
            return min_dv(table, family, known=known, **kwargs)
        if not closed.ok:
            try:
                closed.diagnostics["fallback"] = min_dv(table, family, known=known, **kwargs).to_dict()
            except (ZeroDensityError, DomainError) as exc:
                closed.diagnostics["fallback"] = {"error": str(exc)}
        return closed
    if method == "new-mle":
        return new_mle(table, family, known=known, **kwargs)
    if method == "new-moments":
        return new_moments(table, family, known=known, **kwargs)
    if method == "classical":
        return classical_mle(table, family, known=known, **kwargs)
    if method == "classical-truncated":
        if region is None:
            raise DomainError("classical-truncated needs an observed region")
        return classical_truncated_mle(table, family, region, known=known, **kwargs)
    if method == "pairwise":
        if family == "exponential" and not known:
            return weighted_pairwise(table, exp_rate_two_point)
        if family == "normal" and set(known) == {"sd"}:
            return weighted_pairwise(table, functools.partial(normal_mean_two_point, sigma=known["sd"]))
        if family == "normal" and set(known) == {"mean"}:
            return weighted_pairwise(table, functools.partial(normal_sigma_two_point, m=known["mean"]))
        raise UnsupportedFamilyError(
            "pairwise aggregation needs a two-point closed form: exponential, "
            "or normal with exactly one of mean/sd known"
        )
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
