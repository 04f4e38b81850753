"""Parametric families used throughout the package.

Six families are supported, each with a fixed parameter order:

===========  ==================  ==========================
family       parameters          support
===========  ==================  ==========================
exponential  (rate,)             [0, inf)
normal       (mean, sd)          real line
binomial     (n, p)              integers 0..n
poisson      (rate,)             non-negative integers
weibull      (shape, scale)      (0, inf)
gamma        (shape, rate)       (0, inf)
===========  ==================  ==========================

Random draws go through a Philox counter-based generator keyed directly by
the 64-bit seed, so a stream is reproducible from ``(model, count, seed)``
alone on any platform numpy supports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import ParameterError, UnsupportedFamilyError

__all__ = [
    "FAMILIES",
    "FamilyInfo",
    "NaturalForm",
    "ParametricModel",
    "cdf",
    "density",
    "log_density",
    "make_rng",
    "natural_form",
    "parse_model",
    "sample",
]


@dataclass(frozen=True)
class FamilyInfo:
    name: str
    param_names: tuple[str, ...]
    discrete: bool
    # kind of each parameter: "positive", "real", "prob" or "count"
    kinds: tuple[str, ...]

    def index(self, param: str) -> int:
        try:
            return self.param_names.index(param)
        except ValueError:
            raise ParameterError(
                f"{self.name} has no parameter {param!r}; "
                f"expected one of {self.param_names}"
            ) from None


FAMILIES: dict[str, FamilyInfo] = {
    "exponential": FamilyInfo("exponential", ("rate",), False, ("positive",)),
    "normal": FamilyInfo("normal", ("mean", "sd"), False, ("real", "positive")),
    "binomial": FamilyInfo("binomial", ("n", "p"), True, ("count", "prob")),
    "poisson": FamilyInfo("poisson", ("rate",), True, ("positive",)),
    "weibull": FamilyInfo("weibull", ("shape", "scale"), False, ("positive", "positive")),
    "gamma": FamilyInfo("gamma", ("shape", "rate"), False, ("positive", "positive")),
}


def family_info(family: str) -> FamilyInfo:
    try:
        return FAMILIES[family.lower()]
    except KeyError:
        raise UnsupportedFamilyError(
            f"unknown family {family!r}; choose from {sorted(FAMILIES)}"
        ) from None


def _check_params(info: FamilyInfo, params: tuple[float, ...]) -> None:
    if len(params) != len(info.param_names):
        raise ParameterError(
            f"{info.name} takes {len(info.param_names)} parameters "
            f"{info.param_names}, got {len(params)}"
        )
    for name, kind, value in zip(info.param_names, info.kinds, params):
        if not math.isfinite(value):
            raise ParameterError(f"{info.name}: {name}={value} is not finite")
        if kind == "positive" and not value > 0:
            raise ParameterError(f"{info.name}: {name} must be > 0, got {value}")
        if kind == "prob" and not 0 < value < 1:
            raise ParameterError(f"{info.name}: {name} must lie in (0, 1), got {value}")
        if kind == "count" and not (value >= 1 and float(value).is_integer()):
            raise ParameterError(f"{info.name}: {name} must be a positive integer, got {value}")


@dataclass(frozen=True)
class ParametricModel:
    """A fully specified member of one of the supported families.

    Parameters
    ----------
    family : str
        Lowercase family name, a key of :data:`FAMILIES`.
    params : sequence of float
        Parameter vector in the family's canonical order.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        info = family_info(self.family)
        params = tuple(float(p) for p in np.atleast_1d(self.params))
        object.__setattr__(self, "family", info.name)
        object.__setattr__(self, "params", params)
        _check_params(info, params)

    @property
    def info(self) -> FamilyInfo:
        return FAMILIES[self.family]

    @property
    def discrete(self) -> bool:
        return self.info.discrete

    def param(self, name: str) -> float:
        return self.params[self.info.index(name)]

    def replace(self, **updates: float) -> "ParametricModel":
        params = list(self.params)
        for name, value in updates.items():
            params[self.info.index(name)] = value
        return ParametricModel(self.family, tuple(params))

    def logpdf(self, x):
        return log_density(self, x)

    def pdf(self, x):
        return density(self, x)

    def cdf(self, x):
        return cdf(self, x)

    def sample(self, count: int, seed: int) -> np.ndarray:
        return sample(self, count, seed)

    @property
    def mean(self) -> float:
        f, p = self.family, self.params
        if f in ("exponential",):
            return 1.0 / p[0]
        if f == "normal":
            return p[0]
        if f == "binomial":
            return p[0] * p[1]
        if f == "poisson":
            return p[0]
        if f == "weibull":
            return p[1] * math.gamma(1.0 + 1.0 / p[0])
        return p[0] / p[1]  # gamma

    @property
    def support(self) -> tuple[float, float]:
        """Closed hull ``(lower, upper)`` of the support."""
        if self.family == "normal":
            return (-math.inf, math.inf)
        if self.family == "binomial":
            return (0.0, self.params[0])
        return (0.0, math.inf)

    def __str__(self) -> str:
        return f"{self.family}:" + ",".join(f"{p:g}" for p in self.params)


def parse_model(text: str) -> ParametricModel:
    """Parse ``"family:p1,p2"`` (e.g. ``"binomial:8,0.1"``)."""
    family, sep, rest = text.partition(":")
    if not sep or not rest.strip():
        raise ParameterError(f"model string {text!r} must look like 'family:p1[,p2]'")
    try:
        params = tuple(float(v) for v in rest.split(","))
    except ValueError:
        raise ParameterError(f"non-numeric parameter in model string {text!r}") from None
    return ParametricModel(family.strip(), params)


def _is_integer(x):
    return (x == np.floor(x)) & np.isfinite(x)


def log_density(model: ParametricModel, x):
    """Log of the pdf (continuous) or pmf (discrete); ``-inf`` off the support."""
    x = np.asarray(x, dtype=float)
    f, p = model.family, model.params
    out = np.full(x.shape, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if f == "exponential":
            lam = p[0]
            inside = x >= 0
            val = math.log(lam) - lam * x
        elif f == "normal":
            m, s = p
            inside = np.isfinite(x)
            val = -0.5 * ((x - m) / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi)
        elif f == "binomial":
            n, q = p
            inside = _is_integer(x) & (x >= 0) & (x <= n)
            val = (
                special.gammaln(n + 1) - special.gammaln(x + 1) - special.gammaln(n - x + 1)
                + x * math.log(q) + (n - x) * math.log1p(-q)
            )
        elif f == "poisson":
            lam = p[0]
            inside = _is_integer(x) & (x >= 0)
            val = x * math.log(lam) - lam - special.gammaln(x + 1)
        elif f == "weibull":
            k, scale = p
            inside = (x > 0) & np.isfinite(x)
            z = x / scale
            val = math.log(k / scale) + (k - 1) * np.log(z) - z**k
        else:  # gamma
            a, rate = p
            inside = (x > 0) & np.isfinite(x)
            val = a * math.log(rate) - special.gammaln(a) + (a - 1) * np.log(x) - rate * x
        out = np.where(inside, val, out)
    return out[()] if out.ndim == 0 else out


def density(model: ParametricModel, x):
    """Probability density (continuous) or mass (discrete) at ``x``.

    Exactly zero outside the support.

    >>> density(ParametricModel("exponential", (1.0,)), 0.0)
    1.0
    """
    out = np.exp(log_density(model, x))
    return float(out) if np.ndim(out) == 0 else out


def cdf(model: ParametricModel, x):
    """P(X <= x)."""
    x = np.asarray(x, dtype=float)
    f, p = model.family, model.params
    with np.errstate(invalid="ignore", over="ignore"):
        if f == "exponential":
            out = np.where(x > 0, -np.expm1(-p[0] * np.maximum(x, 0)), 0.0)
        elif f == "normal":
            out = special.ndtr((x - p[0]) / p[1])
        elif f == "binomial":
            n, q = p
            k = np.floor(x)
            out = np.where(k < 0, 0.0, np.where(k >= n, 1.0, special.bdtr(np.clip(k, 0, n), int(n), q)))
        elif f == "poisson":
            k = np.floor(x)
            out = np.where(k < 0, 0.0, special.pdtr(np.maximum(k, 0), p[0]))
        elif f == "weibull":
            k, scale = p
            out = np.where(x > 0, -np.expm1(-(np.maximum(x, 0) / scale) ** k), 0.0)
        else:
            a, rate = p
            out = np.where(x > 0, special.gammainc(a, rate * np.maximum(x, 0)), 0.0)
        out = np.where(x == np.inf, 1.0, out)
    return out[()] if out.ndim == 0 else out


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator keyed by a 64-bit seed, counter at zero."""
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def draw(model: ParametricModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` values using an existing generator."""
    f, p = model.family, model.params
    if f == "exponential":
        return rng.exponential(1.0 / p[0], count)
    if f == "normal":
        return rng.normal(p[0], p[1], count)
    if f == "binomial":
        return rng.binomial(int(p[0]), p[1], count).astype(float)
    if f == "poisson":
        return rng.poisson(p[0], count).astype(float)
    if f == "weibull":
        return p[1] * rng.weibull(p[0], count)
    return rng.gamma(p[0], 1.0 / p[1], count)


def sample(model: ParametricModel, count: int, seed: int) -> np.ndarray:
    """Deterministic sample of size ``count`` for a given ``seed``."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return draw(model, int(count), make_rng(seed))


@dataclass(frozen=True)
class NaturalForm:
    """Exponential-family representation ``K(x) exp(theta . T(x) + A(theta))``.

    ``log_carrier`` and ``statistics`` act on arrays of points; ``statistics``
    returns shape ``(len(x), s)``. ``domain`` holds one open interval per
    natural parameter, so the parameter set is a box and hence convex.
    ``rebuild`` maps natural parameters back to a :class:`ParametricModel`.
    """

    family: str
    free: tuple[str, ...]
    theta: np.ndarray
    log_carrier: Callable[[np.ndarray], np.ndarray]
    statistics: Callable[[np.ndarray], np.ndarray]
    log_normalizer: Callable[[np.ndarray], float]
    domain: tuple[tuple[float, float], ...]
    rebuild: Callable[[np.ndarray], ParametricModel] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.domain)

    def contains(self, theta) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return all(lo < t < hi for t, (lo, hi) in zip(theta, self.domain))

    def log_density(self, x, theta=None):
        theta = self.theta if theta is None else np.atleast_1d(np.asarray(theta, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.log_carrier(x) + self.statistics(x) @ theta + self.log_normalizer(theta)


def natural_form(model: ParametricModel, free: Sequence[str] | None = None) -> NaturalForm:
    """Natural parameterization of ``model`` with parameters ``free`` left open.

    The remaining parameters are held at their current values. Defaults:
    all parameters for exponential, normal and poisson; ``p`` for binomial
    (``n`` is always fixed); ``rate`` for gamma and ``scale`` for weibull,
    whose shapes must stay fixed.

    Raises
    ------
    UnsupportedFamilyError
        If the requested free set is not an exponential family
        (e.g. a free weibull or gamma shape).
    """
    f, p = model.family, model.params
    defaults = {
        "exponential": ("rate",),
        "normal": ("mean", "sd"),
        "binomial": ("p",),
        "poisson": ("rate",),
        "weibull": ("scale",),
        "gamma": ("rate",),
    }
    free = tuple(defaults[f] if free is None else free)
    for name in free:
        model.info.index(name)
    neg = (-math.inf, 0.0)
    real = (-math.inf, math.inf)

    def linear(x):
        return np.asarray(x, dtype=float)[:, None]

    if f == "exponential" and free == ("rate",):
        return NaturalForm(
            f, free, np.array([-p[0]]),
            lambda x: np.zeros(len(x)),
            linear,
            lambda t: math.log(-t[0]),
            (neg,),
            lambda t: ParametricModel(f, (-t[0],)),
        )
    if f == "poisson" and free == ("rate",):
        return NaturalForm(
            f, free, np.array([math.log(p[0])]),
            lambda x: -special.gammaln(np.asarray(x, dtype=float) + 1),
            linear,
            lambda t: -math.exp(t[0]),
            (real,),
            lambda t: ParametricModel(f, (math.exp(t[0]),)),
        )
    if f == "binomial" and free == ("p",):
        n = p[0]
        return NaturalForm(
            f, free, np.array([math.log(p[1] / (1 - p[1]))]),
            lambda x: special.gammaln(n + 1) - special.gammaln(np.asarray(x) + 1)
            - special.gammaln(n - np.asarray(x) + 1),
            linear,
            lambda t: -n * np.logaddexp(0.0, t[0]),
            (real,),
            lambda t: ParametricModel(f, (n, special.expit(t[0]))),
        )
    if f == "normal" and free == ("mean",):
        s = p[1]
        return NaturalForm(
            f, free, np.array([p[0] / s**2]),
            lambda x: -0.5 * np.asarray(x, dtype=float) ** 2 / s**2
            - math.log(s) - 0.5 * math.log(2 * math.pi),
            linear,
            lambda t: -0.5 * t[0] ** 2 * s**2,
            (real,),
            lambda t: ParametricModel(f, (t[0] * s**2, s)),
        )
    if f == "normal" and set(free) == {"mean", "sd"}:
        m, s = p
        return NaturalForm(
            f, ("mean", "sd"), np.array([m / s**2, -0.5 / s**2]),
            lambda x: np.full(len(x), -0.5 * math.log(2 * math.pi)),
            lambda x: np.column_stack([x, np.asarray(x, dtype=float) ** 2]),
            lambda t: t[0] ** 2 / (4 * t[1]) + 0.5 * math.log(-2 * t[1]),
            (real, neg),
            lambda t: ParametricModel(f, (-t[0] / (2 * t[1]), math.sqrt(-0.5 / t[1]))),
        )
    if f == "gamma" and free == ("rate",):
        a = p[0]
        return NaturalForm(
            f, free, np.array([-p[1]]),
            lambda x: (a - 1) * np.log(np.asarray(x, dtype=float)) - special.gammaln(a),
            linear,
            lambda t: a * math.log(-t[0]),
            (neg,),
            lambda t: ParametricModel(f, (a, -t[0])),
        )
    if f == "weibull" and free == ("scale",):
        k = p[0]
        # theta = -scale**(-k), T(x) = x**k
        return NaturalForm(
            f, free, np.array([-p[1] ** (-k)]),
            lambda x: math.log(k) + (k - 1) * np.log(np.asarray(x, dtype=float)),
            lambda x: (np.asarray(x, dtype=float) ** k)[:, None],
            lambda t: math.log(-t[0]),
            (neg,),
            lambda t: ParametricModel(f, (k, (-t[0]) ** (-1.0 / k))),
        )
    raise UnsupportedFamilyError(
        f"no natural form for {f} with free parameters {free}"
    )
