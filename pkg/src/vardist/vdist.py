"""Distance in variations between frequency tables and models.

For two positive weight vectors ``a`` and ``b`` on a shared support
``y_1..y_k`` the distance is

    dv(a, b) = sum_{i != j} | a_i / a_j - b_i / b_j |

over ordered pairs. Both orientations of each pair are kept; the diagonal
terms vanish identically. Only ratios enter, so rescaling either argument
leaves the distance unchanged, and two tables are at distance zero exactly
when they are proportional.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import NaturalForm, ParametricModel, log_density
from .errors import DomainError, SupportMismatchError, ZeroDensityError
from .tables import AuxiliaryTable, FrequencyTable, auxiliary_of

__all__ = [
    "PairwiseDelta",
    "convexity_witness",
    "dv_log_weights",
    "dv_model",
    "dv_tables",
    "pairwise_terms",
]


@dataclass(frozen=True)
class PairwiseDelta:
    i: int
    j: int
    value: float


def _positive(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ZeroDensityError("frequencies must be finite and strictly positive")
    return w


def _direct_weights(obj) -> np.ndarray:
    if isinstance(obj, FrequencyTable):
        return obj.counts
    if isinstance(obj, AuxiliaryTable):
        return _positive(obj.probs)
    return _positive(obj)


def _ratio_matrix(logw: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.exp(logw[:, None] - logw[None, :])
    if not np.all(np.isfinite(r)):
        raise ZeroDensityError("frequency ratio overflows; a density underflows to 0 on the support")
    return r


def _count_ratios(obj) -> np.ndarray:
    """Ratios by direct division when they stay finite, else through logs.

    Direct division keeps the distance bit-identical under power-of-two
    rescaling of the counts.
    """
    if isinstance(obj, AuxiliaryTable) and obj.log_weights is not None:
        return _ratio_matrix(np.asarray(obj.log_weights, dtype=float))
    w = _direct_weights(obj)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        r = w[:, None] / w[None, :]
    if np.all(np.isfinite(r)) and np.all(r > 0):
        return r
    return _ratio_matrix(np.log(w))


def _terms(ra: np.ndarray, rb: np.ndarray) -> np.ndarray:
    if ra.shape != rb.shape:
        raise SupportMismatchError(f"support sizes differ: {len(ra)} vs {len(rb)}")
    d = np.abs(ra - rb)
    np.fill_diagonal(d, 0.0)
    return d


def _term_matrix(la: np.ndarray, lb: np.ndarray) -> np.ndarray:
    if not (np.all(np.isfinite(la)) and np.all(np.isfinite(lb))):
        raise ZeroDensityError("zero or non-finite frequency on the support")
    return _terms(_ratio_matrix(la), _ratio_matrix(lb))


def dv_log_weights(la, lb) -> float:
    """Distance between two tables given as log-weights on a common support."""
    la = np.asarray(la, dtype=float)
    lb = np.asarray(lb, dtype=float)
    if la.shape != lb.shape:
        raise SupportMismatchError(f"support sizes differ: {la.shape} vs {lb.shape}")
    # np.sum reduces pairwise in a fixed order, so results are reproducible
    return float(np.sum(_term_matrix(la, lb)))


def _support_of(obj):
    return getattr(obj, "support", None)


def dv_tables(a, b) -> float:
    """Distance in variations between two tables on the same support.

    ``a`` and ``b`` may be :class:`FrequencyTable`, :class:`AuxiliaryTable`
    or plain positive arrays (which then carry no support to compare).
    """
    sa, sb = _support_of(a), _support_of(b)
    if sa is not None and sb is not None and not np.array_equal(sa, sb):
        raise SupportMismatchError("tables are defined on different support sequences")
    ra, rb = _count_ratios(a), _count_ratios(b)
    return float(np.sum(_terms(ra, rb)))


def _model_log_weights(model: ParametricModel, support) -> np.ndarray:
    logf = np.asarray(log_density(model, support), dtype=float)
    if not np.all(np.isfinite(logf)):
        raise ZeroDensityError(f"{model} has zero density at part of the table support")
    return logf


def dv_model(table: FrequencyTable, model: ParametricModel) -> float:
    """Distance between an empirical table and a model on the table's support."""
    lf = _model_log_weights(model, table.support)
    return float(np.sum(_terms(_count_ratios(table), _ratio_matrix(lf))))


def pairwise_terms(table: FrequencyTable, model, top: int | None = None) -> list[PairwiseDelta]:
    """Individual ordered-pair terms, largest first.

    ``model`` may be a :class:`ParametricModel` or any table accepted by
    :func:`dv_tables`.
    """
    if isinstance(model, ParametricModel):
        rb = _ratio_matrix(_model_log_weights(model, table.support))
    else:
        rb = _count_ratios(model)
    d = _terms(_count_ratios(table), rb)
    k = len(d)
    terms = [PairwiseDelta(i, j, float(d[i, j])) for i in range(k) for j in range(k) if i != j]
    terms.sort(key=lambda t: (-t.value, t.i, t.j))
    return terms if top is None else terms[:top]


def _delta_sum(nf: NaturalForm, y: np.ndarray, log_counts: np.ndarray, theta) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not nf.contains(theta):
        raise DomainError(f"natural parameter {theta.tolist()} lies outside {nf.domain}")
    # log of K(y) exp(theta . T(y)); the normalizer cancels in ratios
    logf = nf.log_carrier(y) + nf.statistics(y) @ theta
    return dv_log_weights(logf, log_counts)


def convexity_witness(nf: NaturalForm, table: FrequencyTable, theta1, theta2, weight: float):
    """Evaluate both sides of the convexity inequality along a chord.

    Returns ``(lhs, rhs)`` where ``lhs`` is the summed pairwise deviation at
    ``weight * theta1 + (1 - weight) * theta2`` and ``rhs`` the matching
    combination of the values at the endpoints.
    """
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"weight must lie in [0, 1], got {weight}")
    y = table.support
    lc = np.log(table.counts)
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    lhs = _delta_sum(nf, y, lc, weight * t1 + (1.0 - weight) * t2)
    if weight == 1.0:
        return lhs, _delta_sum(nf, y, lc, t1)
    if weight == 0.0:
        return lhs, _delta_sum(nf, y, lc, t2)
    rhs = weight * _delta_sum(nf, y, lc, t1) + (1.0 - weight) * _delta_sum(nf, y, lc, t2)
    return lhs, rhs
