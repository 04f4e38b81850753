"""Frequency tables, regions and auxiliary (renormalized) model tables."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .distributions import ParametricModel, cdf, log_density
from .errors import InsufficientSupportError, ZeroDensityError

__all__ = [
    "AuxiliaryTable",
    "FrequencyTable",
    "Interval",
    "Region",
    "auxiliary_of",
    "from_samples",
    "truncate",
]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = False

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        left = x >= self.lo if self.closed_lo else x > self.lo
        right = x <= self.hi if self.closed_hi else x < self.hi
        return left & right

    def __str__(self):
        return (
            ("[" if self.closed_lo else "(")
            + f"{self.lo:g},{self.hi:g}"
            + ("]" if self.closed_hi else ")")
        )


_INTERVAL_RE = re.compile(
    r"\s*([\[\(\]])\s*([^,\s]+)\s*,\s*([^\]\)\[\s]+)\s*([\]\)\[])\s*"
)


@dataclass(frozen=True)
class Region:
    """Union of intervals or a finite set of values.

    Interval bounds may be open or closed; the text form accepts both
    ``[a,b)`` and the French-style ``[a,b[``.
    """

    intervals: tuple[Interval, ...] = ()
    values: tuple[float, ...] | None = None

    @classmethod
    def parse(cls, text: str) -> "Region":
        """Parse ``"[a,b),[c,d)"`` or a brace set ``"{0,1,2,3}"``."""
        text = text.strip()
        if text.startswith("{") and text.endswith("}"):
            return cls.of_values(float(v) for v in text[1:-1].split(","))
        intervals = []
        pos = 0
        while pos < len(text):
            m = _INTERVAL_RE.match(text, pos)
            if m is None:
                raise ValueError(f"cannot parse region {text!r} at offset {pos}")
            lb, lo, hi, rb = m.groups()
            intervals.append(
                Interval(float(lo), float(hi), closed_lo=lb == "[", closed_hi=rb == "]")
            )
            pos = m.end()
            if pos < len(text):
                if text[pos] not in ",;U":
                    raise ValueError(f"expected separator in region {text!r} at offset {pos}")
                pos += 1
        if not intervals:
            raise ValueError("empty region")
        return cls(tuple(intervals))

    @classmethod
    def of_values(cls, values: Iterable[float]) -> "Region":
        return cls(values=tuple(sorted(set(float(v) for v in values))))

    @classmethod
    def coerce(cls, region) -> "Region":
        if isinstance(region, Region):
            return region
        if isinstance(region, str):
            return cls.parse(region)
        if isinstance(region, Interval):
            return cls((region,))
        items = list(region)
        if items and all(isinstance(r, Interval) for r in items):
            return cls(tuple(items))
        if items and all(isinstance(r, tuple) and len(r) == 2 for r in items):
            return cls(tuple(Interval(float(a), float(b)) for a, b in items))
        return cls.of_values(items)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.values is not None:
            return np.isin(x, np.asarray(self.values))
        mask = np.zeros(x.shape, dtype=bool)
        for iv in self.intervals:
            mask |= iv.contains(x)
        return mask

    def probability(self, model: ParametricModel) -> float:
        """P(X in region) under ``model``; intervals are assumed disjoint."""
        if self.values is not None:
            return float(np.exp(log_density(model, np.asarray(self.values))).sum())
        total = 0.0
        for iv in self.intervals:
            if model.discrete:
                # integers k with lo <(=) k <(=) hi
                first = math.ceil(iv.lo) if iv.closed_lo else math.floor(iv.lo) + 1
                last = math.floor(iv.hi) if iv.closed_hi else math.ceil(iv.hi) - 1
                if last >= first:
                    total += float(cdf(model, last) - cdf(model, first - 1))
            else:
                total += float(cdf(model, iv.hi) - cdf(model, iv.lo))
        return total

    def __str__(self):
        if self.values is not None:
            return "{" + ",".join(f"{v:g}" for v in self.values) + "}"
        return ",".join(str(iv) for iv in self.intervals)


def _as_positive_vector(values, what):
    arr = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Empirical table: distinct support points with positive counts.

    Counts are real-valued because only their ratios matter. ``intervals``
    optionally records the class ``(lo, hi)`` each support point represents.
    """

    support: np.ndarray
    counts: np.ndarray
    intervals: np.ndarray | None = None

    def __post_init__(self):
        support = _as_positive_vector(self.support, "support points")
        counts = _as_positive_vector(self.counts, "counts")
        if support.shape != counts.shape:
            raise ValueError("support and counts must have the same length")
        if len(support) < 2:
            raise InsufficientSupportError(f"a table needs at least 2 support points, got {len(support)}")
        if np.any(counts <= 0):
            raise ZeroDensityError("all counts must be strictly positive")
        order = np.argsort(support, kind="stable")
        support, counts = support[order], counts[order]
        if np.any(np.diff(support) <= 0):
            raise ValueError("support points must be pairwise distinct")
        intervals = self.intervals
        if intervals is not None:
            intervals = np.asarray(intervals, dtype=float).reshape(-1, 2)[order]
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "intervals", intervals)

    @property
    def k(self) -> int:
        return len(self.support)

    def __len__(self):
        return self.k

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def probs(self) -> np.ndarray:
        """Relative frequencies ``n_i / sum n_j``."""
        return self.counts / self.counts.sum()

    relative_frequencies = probs

    def scaled(self, factor: float) -> "FrequencyTable":
        return FrequencyTable(self.support, self.counts * factor, self.intervals)

    def __eq__(self, other):
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        same_iv = (self.intervals is None) == (other.intervals is None) and (
            self.intervals is None or np.array_equal(self.intervals, other.intervals)
        )
        return (
            np.array_equal(self.support, other.support)
            and np.array_equal(self.counts, other.counts)
            and same_iv
        )

    def __repr__(self):
        return f"FrequencyTable(support={self.support.tolist()}, counts={self.counts.tolist()})"

    # -- serialization ---------------------------------------------------
    def to_csv(self, path=None) -> str:
        """Write ``y,count[,lo,hi]`` rows; returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.intervals is None:
            w.writerow(["y", "count"])
            for y, n in zip(self.support, self.counts):
                w.writerow([repr(float(y)), repr(float(n))])
        else:
            w.writerow(["y", "count", "lo", "hi"])
            for y, n, (lo, hi) in zip(self.support, self.counts, self.intervals):
                w.writerow([repr(float(y)), repr(float(n)), repr(float(lo)), repr(float(hi))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "FrequencyTable":
        """Read a table from a path or an open text stream.

        Accepts a third ``lo,hi``-style column pair, or a single third
        column holding ``lo,hi`` quoted.
        """
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, newline="") as fh:
                text = fh.read()
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise ValueError("empty CSV table")
        header = [c.strip().lower() for c in rows[0]]
        if header[:2] != ["y", "count"]:
            raise ValueError(f"CSV header must start with 'y,count', got {rows[0]}")
        support, counts, intervals = [], [], []
        for lineno, row in enumerate(rows[1:], start=2):
            try:
                support.append(float(row[0]))
                counts.append(float(row[1]))
                if len(row) >= 4:
                    intervals.append((float(row[2]), float(row[3])))
                elif len(row) == 3:
                    lo, hi = row[2].split(",")
                    intervals.append((float(lo), float(hi)))
            except (ValueError, IndexError):
                raise ValueError(f"malformed CSV row {lineno}: {row}") from None
        if intervals and len(intervals) != len(support):
            raise ValueError("interval columns must be present on every row or none")
        return cls(np.array(support), np.array(counts), np.array(intervals) if intervals else None)

    def to_dict(self) -> dict:
        return {
            "support": self.support.tolist(),
            "counts": self.counts.tolist(),
            "intervals": None if self.intervals is None else self.intervals.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "FrequencyTable":
        iv = data.get("intervals")
        return cls(np.array(data["support"]), np.array(data["counts"]), None if iv is None else np.array(iv))

    @classmethod
    def from_json(cls, text: str) -> "FrequencyTable":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class AuxiliaryTable:
    """A model's density at finite support points, renormalized to sum to 1."""

    support: np.ndarray
    probs: np.ndarray
    log_weights: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.support)

    def __repr__(self):
        return f"AuxiliaryTable(support={self.support.tolist()}, probs={self.probs.tolist()})"


Binning = Union[int, Sequence[float], np.ndarray, str]


def from_samples(samples, binning: Binning = "discrete") -> FrequencyTable:
    """Group raw observations into a frequency table.

    Parameters
    ----------
    samples : array_like
        Observations.
    binning : int, array_like or ``"discrete"``
        An integer gives that many equal-width classes over the sample
        range; an array gives explicit class edges (observations outside
        them are discarded); ``"discrete"`` counts each distinct value.
        Classes are half-open ``[lo, hi)`` except the last, which is closed.
        Continuous classes are represented by their midpoints and empty
        classes are dropped.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if isinstance(binning, str):
        if binning not in ("discrete", "identity", "discrete-identity"):
            raise ValueError(f"unknown binning {binning!r}")
        values, counts = np.unique(x, return_counts=True)
        if len(values) < 2:
            raise InsufficientSupportError(f"need at least 2 distinct values, got {len(values)}")
        return FrequencyTable(values, counts.astype(float))
    if np.ndim(binning) == 0:
        nbins = int(binning)
        if nbins < 1:
            raise ValueError("bin count must be >= 1")
        if len(x) == 0 or x.min() == x.max():
            raise InsufficientSupportError("all observations coincide; cannot form 2 classes")
        edges = np.linspace(x.min(), x.max(), nbins + 1)
    else:
        edges = np.asarray(binning, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be a strictly increasing sequence of length >= 2")
    counts, _ = np.histogram(x, bins=edges)
    keep = counts > 0
    if keep.sum() < 2:
        raise InsufficientSupportError(f"only {keep.sum()} nonempty class(es)")
    mids = 0.5 * (edges[:-1] + edges[1:])
    bounds = np.column_stack([edges[:-1], edges[1:]])
    return FrequencyTable(mids[keep], counts[keep].astype(float), bounds[keep])


def truncate(data, region):
    """Keep only the points (or observations) lying in ``region``.

    Works on a :class:`FrequencyTable` (retained counts are untouched) or
    on a raw sample array, returning the same kind.
    """
    region = Region.coerce(region)
    if isinstance(data, FrequencyTable):
        keep = region.contains(data.support)
        if keep.sum() < 2:
            raise InsufficientSupportError(
                f"region {region} retains {int(keep.sum())} support point(s)"
            )
        iv = None if data.intervals is None else data.intervals[keep]
        return FrequencyTable(data.support[keep], data.counts[keep], iv)
    x = np.asarray(data, dtype=float)
    kept = x[region.contains(x)]
    if len(np.unique(kept)) < 2:
        raise InsufficientSupportError(f"region {region} retains fewer than 2 distinct values")
    return kept


def auxiliary_of(model: ParametricModel, support) -> AuxiliaryTable:
    """Renormalize ``model``'s density over the finite ``support``."""
    y = np.asarray(support, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("support points must be finite")
    logf = np.asarray(log_density(model, y), dtype=float).reshape(y.shape)
    if not np.all(np.isfinite(logf)):
        bad = y[~np.isfinite(logf)]
        raise ZeroDensityError(f"{model} has zero density at support point(s) {bad.tolist()}")
    w = logf - logf.max()
    probs = np.exp(w)
    probs /= probs.sum()
    if np.any(probs <= 0):
        raise ZeroDensityError(f"{model}: renormalized density underflows at the support")
    return AuxiliaryTable(y, probs, logf)
