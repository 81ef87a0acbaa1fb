"""Deterministic two-player top-trumps simulator and Monte Carlo batches.

Two agent policies are supported: an informed agent that knows every card
in the deck and remembers what has been played, and a range-only agent that
knows nothing beyond the valid value range.  A game runs for exactly K/2
tricks; each player consumes one card per trick in hand order, the trick
winner announces the next category, and tied tricks score for nobody and
leave the announcer unchanged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from trumpbench.deck import Deck, DeckShape


class Policy(enum.Enum):
    """How an agent estimates its chance of winning with each category."""

    INFORMED = "informed"
    RANGE_ONLY = "range_only"


class Player(enum.Enum):
    A = 0
    B = 1

    @property
    def other(self) -> "Player":
        return Player.B if self is Player.A else Player.A


class Outcome(enum.Enum):
    WIN_A = "win_a"
    DRAW = "draw"
    WIN_B = "win_b"


@dataclass(frozen=True)
class Deal:
    """Hands (ordered card indices, K/2 each, disjoint) plus the starting announcer."""

    hand_a: tuple[int, ...]
    hand_b: tuple[int, ...]
    starter: Player

    def validate(self, k: int) -> None:
        if len(self.hand_a) != k // 2 or len(self.hand_b) != k // 2:
            raise ValueError(f"hands must each hold {k // 2} cards")
        if set(self.hand_a) | set(self.hand_b) != set(range(k)) or set(
            self.hand_a
        ) & set(self.hand_b):
            raise ValueError("hands must be disjoint and cover all card indices")


@dataclass(frozen=True)
class GameResult:
    """Trick statistics of one game, seen from player A."""

    tricks_a: int
    tricks_b: int
    ties: int
    announcer_changes: int
    outcome: Outcome
    tightness: float


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregates over a batch of simulated games."""

    games: int
    win_rate_a: float
    draw_rate: float
    loss_rate_a: float
    mean_announcer_changes: float
    mean_tightness: float
    per_game: tuple[GameResult, ...] | None = None


def range_win_estimate(card_values, lo: float, hi: float) -> np.ndarray:
    """Win-chance estimate assuming opponents draw uniformly from [lo, hi]."""
    v = np.asarray(card_values, dtype=float)
    return (v - lo) / (hi - lo)


def informed_win_estimate(card_values, opponent_values) -> np.ndarray:
    """Per-category fraction of the opponent's remaining cards this card beats."""
    opp = np.atleast_2d(np.asarray(opponent_values, dtype=float))
    if opp.shape[0] == 0:
        raise ValueError("opponent has no remaining cards")
    v = np.asarray(card_values, dtype=float)
    return (opp < v).sum(axis=0) / opp.shape[0]


def play_game(deck: Deck, deal: Deal, policies: tuple[Policy, Policy]) -> GameResult:
    """Play one deterministic game; ``policies`` are (player A, player B).

    Each trick the announcer picks the category with the highest win
    estimate on its front card (ties to the lowest index).  Strictly
    greater value takes the trick and the announcement; equal values tie.
    """
    shape = deck.shape
    deal.validate(shape.K)
    hand_a = deck.values[np.asarray(deal.hand_a, dtype=int)]
    hand_b = deck.values[np.asarray(deal.hand_b, dtype=int)]
    return _play_hands(hand_a, hand_b, deal.starter is Player.A, policies, shape)


def _play_hands(
    hand_a: np.ndarray,
    hand_b: np.ndarray,
    announcer_is_a: bool,
    policies: tuple[Policy, Policy],
    shape: DeckShape,
) -> GameResult:
    n_tricks = hand_a.shape[0]
    lo = shape.lo
    span = shape.hi - shape.lo
    informed_a = policies[0] is Policy.INFORMED
    informed_b = policies[1] is Policy.INFORMED
    tricks_a = tricks_b = ties = changes = 0
    for t in range(n_tricks):
        card_a = hand_a[t]
        card_b = hand_b[t]
        if announcer_is_a:
            if informed_a:
                remaining = hand_b[t:]
                est = (remaining < card_a).sum(axis=0)
            else:
                est = card_a  # argmax of (v - lo) / span is argmax of v
        else:
            if informed_b:
                remaining = hand_a[t:]
                est = (remaining < card_b).sum(axis=0)
            else:
                est = card_b
        cat = int(np.argmax(est))
        va, vb = card_a[cat], card_b[cat]
        if va > vb:
            tricks_a += 1
            if not announcer_is_a:
                changes += 1
                announcer_is_a = True
        elif vb > va:
            tricks_b += 1
            if announcer_is_a:
                changes += 1
                announcer_is_a = False
        else:
            ties += 1

    if tricks_a > tricks_b:
        outcome = Outcome.WIN_A
    elif tricks_a == tricks_b:
        outcome = Outcome.DRAW
    else:
        outcome = Outcome.WIN_B
    return GameResult(
        tricks_a=tricks_a,
        tricks_b=tricks_b,
        ties=ties,
        announcer_changes=changes,
        outcome=outcome,
        tightness=float(abs(2 * tricks_a - n_tricks)),
    )


def random_deal(k: int, rng: np.random.Generator) -> Deal:
    """Uniform shuffle; the first K/2 cards form hand A; uniform starter."""
    perm = rng.permutation(k)
    half = k // 2
    starter = Player.A if rng.integers(2) == 0 else Player.B
    return Deal(tuple(int(i) for i in perm[:half]), tuple(int(i) for i in perm[half:]), starter)


def simulate(
    deck: Deck,
    policies: tuple[Policy, Policy],
    games: int,
    rng: np.random.Generator,
    keep_games: bool = False,
) -> SimulationSummary:
    """Monte Carlo batch: fresh uniform deal and starter for every game."""
    if games < 1:
        raise ValueError("need at least one game")
    vals = deck.values
    shape = deck.shape
    half = shape.K // 2
    wins = draws = 0
    sum_changes = 0
    sum_tightness = 0.0
    results: list[GameResult] = []
    for _ in range(games):
        perm = rng.permutation(shape.K)
        starter_is_a = rng.integers(2) == 0
        result = _play_hands(vals[perm[:half]], vals[perm[half:]], starter_is_a, policies, shape)
        if result.outcome is Outcome.WIN_A:
            wins += 1
        elif result.outcome is Outcome.DRAW:
            draws += 1
        sum_changes += result.announcer_changes
        sum_tightness += result.tightness
        if keep_games:
            results.append(result)
    return SimulationSummary(
        games=games,
        win_rate_a=wins / games,
        draw_rate=draws / games,
        loss_rate_a=(games - wins - draws) / games,
        mean_announcer_changes=sum_changes / games,
        mean_tightness=sum_tightness / games,
        per_game=tuple(results) if keep_games else None,
    )
