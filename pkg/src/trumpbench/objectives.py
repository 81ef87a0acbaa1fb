"""The three deck fitness functions, all minimization-oriented.

* dominance fitness: single objective counting how far cards are from
  being mutually non-dominated (optimum -(K-1) when no card is dominated);
* balance objectives: three simulation-based measures (negated informed
  win rate, negated mean announcer changes, mean tightness);
* surrogate objectives: two simulation-free measures (negated dominated
  hypervolume of the card set, negated spread of the category means).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from trumpbench.deck import DeckShape, card_matrix, dominance_matrix
from trumpbench.game import SimulationSummary
from trumpbench.hv import union_box_volume


class ObjectiveKind(enum.Enum):
    """Which fitness function drives an optimization run."""

    DOMINANCE = "D"
    BALANCE = "B"
    SURROGATE = "S"

    @property
    def n_objectives(self) -> int:
        return {"D": 1, "B": 3, "S": 2}[self.value]


@dataclass(frozen=True)
class ObjectiveVector:
    """An m-dimensional fitness value plus short labels per component."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != len(self.labels):
            raise ValueError("values and labels must have matching length")
        if not np.all(np.isfinite(v)):
            raise ValueError("objective values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.labels)


def dominance_fitness(deck) -> ObjectiveVector:
    """Average count, per card, of other cards that fail to dominate it, negated.

    Equals -(K-1) exactly when no card in the deck is dominated by another.
    """
    dom = dominance_matrix(deck)
    k = dom.shape[0]
    # For card j, the number of other cards NOT dominating it.
    non_dominating = (k - 1) - dom.sum(axis=0)
    value = -float(non_dominating.sum()) / k
    return ObjectiveVector(np.array([value]), ("dominance",))


def balance_objectives(summary: SimulationSummary, shape: DeckShape) -> ObjectiveVector:
    """Simulation-based deck quality: (-win rate, -mean announcer changes, mean tightness).

    The summary must come from an (informed, range-only) pairing so the win
    rate refers to the knowledgeable agent.
    """
    values = np.array(
        [
            -summary.win_rate_a,
            -summary.mean_announcer_changes,
            summary.mean_tightness,
        ]
    )
    return ObjectiveVector(values, ("neg_win_rate", "neg_announcer_changes", "tightness"))


def deck_hypervolume(deck, ref=None) -> float:
    """Volume jointly covered by the deck's cards above ``ref`` (default origin).

    Every card must lie strictly above the reference point in every
    category.
    """
    vals = card_matrix(deck)
    if ref is None:
        ref = np.zeros(vals.shape[1])
    ref = np.asarray(ref, dtype=float)
    if not np.all(vals > ref):
        raise ValueError("every card must lie strictly above the reference point")
    return union_box_volume(vals - ref)


def surrogate_objectives(deck, shape: DeckShape) -> ObjectiveVector:
    """Simulation-free deck quality: (-card hypervolume, -sd of category means).

    The spread term is the sample standard deviation (divisor L-1) of the
    per-category mean values.
    """
    hv = deck_hypervolume(deck)
    means = card_matrix(deck).mean(axis=0)
    sd = float(np.std(means, ddof=1)) if means.size > 1 else 0.0
    return ObjectiveVector(np.array([-hv, -sd]), ("neg_hypervolume", "neg_mean_spread"))
