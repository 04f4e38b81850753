"""Model identification by smallest distance in variations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .distributions import ParametricModel
from .errors import ZeroDensityError, SelectionError
from .tables import FrequencyTable
from .vdist import dv_model

__all__ = ["SelectionReport", "select"]


@dataclass
class SelectionReport:
    """Distances of every candidate to one table.

    ``distances[i]`` is None for candidates disqualified because their
    density vanishes somewhere on the table support; their indices are
    listed in ``disqualified``. Ties go to the earliest candidate.
    """

    candidates: list[ParametricModel]
    distances: list[float | None]
    winner_index: int
    margin: float
    disqualified: list[int] = field(default_factory=list)

    @property
    def winner(self) -> ParametricModel:
        return self.candidates[self.winner_index]

    @property
    def winner_dv(self) -> float:
        return self.distances[self.winner_index]

    def to_dict(self) -> dict:
        return {
            "candidates": [
                {"model": str(m), "family": m.family, "params": list(m.params), "dv": d}
                for m, d in zip(self.candidates, self.distances)
            ],
            "winner_index": self.winner_index,
            "winner": str(self.winner),
            "margin": self.margin,
            "disqualified": self.disqualified,
        }


def select(table: FrequencyTable, candidates: Sequence[ParametricModel]) -> SelectionReport:
    """Pick the candidate closest to ``table``.

    Candidates may come from different families. At least two must be
    evaluable on the whole support, otherwise :class:`SelectionError`.
    """
    candidates = list(candidates)
    if len(candidates) < 2:
        raise SelectionError(f"need at least 2 candidates, got {len(candidates)}")
    distances: list[float | None] = []
    disqualified = []
    for i, model in enumerate(candidates):
        try:
            distances.append(dv_model(table, model))
        except ZeroDensityError:
            distances.append(None)
            disqualified.append(i)
    valid = [(d, i) for i, d in enumerate(distances) if d is not None]
    if len(valid) < 2:
        raise SelectionError(
            f"only {len(valid)} candidate(s) have positive density on the whole support"
        )
    ranked = sorted(valid)  # ties resolved by index
    (d0, winner), (d1, _) = ranked[0], ranked[1]
    margin = d1 - d0 if math.isfinite(d1) else math.inf
    return SelectionReport(candidates, distances, winner, margin, disqualified)
