"""Constructed decks with controlled dominance structure.

Used for benchmark baselines: decks whose dominated-pair count is exact
(stand-ins for commercial reference decks whose data cannot be shipped),
decks with no dominated card at all, and randomly degraded decks whose
gameplay is deliberately luck-heavy.
"""

from __future__ import annotations

import numpy as np

from trumpbench.deck import Deck, DeckShape, deck_is_valid, dominating_pair_count


def triangular(c: int) -> int:
    return c * (c - 1) // 2


def chain_partition(cards: int, pairs: int) -> list[int]:
    """Chain lengths whose internal dominance pairs sum to ``pairs``.

    Cards in one chain each dominate everything deeper in it, giving
    c*(c-1)/2 ordered pairs per chain of length c; leftover cards become
    singletons.
    """
    if pairs < 0:
        raise ValueError("pair count must be nonnegative")
    chains: list[int] = []
    remaining_cards = cards
    remaining_pairs = pairs
    while remaining_pairs > 0:
        c = min(remaining_cards, int((1 + np.sqrt(1 + 8 * remaining_pairs)) // 2))
        while c >= 2 and triangular(c) > remaining_pairs:
            c -= 1
        if c < 2:
            raise ValueError(f"cannot realize {pairs} pairs with {cards} cards")
        chains.append(c)
        remaining_cards -= c
        remaining_pairs -= triangular(c)
        if remaining_cards < 0 or (remaining_pairs > 0 and remaining_cards < 2):
            raise ValueError(f"cannot realize {pairs} pairs with {cards} cards")
    chains.extend([1] * remaining_cards)
    if len(chains) < 2:
        raise ValueError("a single chain would create an all-dominating card")
    return chains


def deck_with_dominating_pairs(shape: DeckShape, pairs: int) -> Deck:
    """Deterministic deck with exactly ``pairs`` ordered dominating card pairs.

    Chains are isolated from each other by giving every chain its own band
    in the first category (ascending) and the second (descending), so
    domination can only happen inside a chain.
    """
    if shape.L < 2:
        raise ValueError("need at least two categories to isolate chains")
    chains = chain_partition(shape.K, pairs)
    n_chains = len(chains)
    span = shape.hi - shape.lo
    spacing = span / (n_chains + 1)
    band = 0.4 * spacing

    rows = []
    for j, length in enumerate(chains):
        base0 = shape.lo + (j + 1) * spacing
        base1 = shape.lo + (n_chains - j) * spacing
        for depth in range(length):
            # Shallower cards sit strictly higher in every category.
            lift = band * (length - depth) / (length + 1)
            row = np.empty(shape.L)
            row[0] = base0 + lift
            row[1] = base1 + lift
            for d in range(2, shape.L):
                row[d] = shape.hi - 0.8 * span * (depth + 1) / (length + 1)
            rows.append(row)
    deck = Deck(np.array(rows), shape)
    actual = dominating_pair_count(deck)
    if actual != pairs:
        raise AssertionError(f"constructed {actual} pairs instead of {pairs}")
    report = deck_is_valid(deck)
    if not report.valid:
        raise AssertionError(f"constructed deck is invalid: {report}")
    return deck


def nondominated_deck(
    shape: DeckShape,
    rng: np.random.Generator,
    tilt: float = 0.8,
    concentration: float = 0.5,
    max_tries: int = 100,
) -> Deck:
    """Random deck in which no card dominates another.

    All cards sit on one positively weighted hyperplane: strict domination
    in every category would force a strictly larger weighted sum, so none
    can exist.  Random per-deck weights skew the category scales the way
    real card data does, which keeps the range-only agent's uniform
    assumption imperfect.
    """
    if shape.L < 2:
        raise ValueError("need at least two categories")
    span = shape.hi - shape.lo
    for _ in range(max_tries):
        weights = np.exp(rng.normal(0.0, tilt, size=shape.L))
        budget = 0.5 * span * weights.sum()
        rows = []
        guard = 0
        while len(rows) < shape.K and guard < 200 * shape.K:
            guard += 1
            part = rng.dirichlet(np.full(shape.L, concentration))
            y = budget * part / weights
            if np.any(y >= 0.999 * span):
                continue
            rows.append(shape.lo + y)
        if len(rows) < shape.K:
            continue
        deck = Deck(np.array(rows), shape)
        if deck_is_valid(deck).valid:
            assert dominating_pair_count(deck) == 0
            return deck
    raise RuntimeError("failed to sample a fully non-dominated deck")


def degraded_deck(
    shape: DeckShape,
    rng: np.random.Generator,
    min_pairs: int,
    max_tries: int = 10_000,
) -> Deck:
    """Random valid deck degraded until at least ``min_pairs`` dominated pairs.

    Repeatedly replaces a random card with a shrunk copy of a stronger one,
    creating cards that cannot win against it in any category.
    """
    from trumpbench.deck import random_valid_deck

    values = random_valid_deck(shape, rng).values.copy()
    for _ in range(max_tries):
        deck = Deck(values, shape)
        if dominating_pair_count(deck) >= min_pairs and deck_is_valid(deck).valid:
            return deck
        donor = int(rng.integers(shape.K))
        if values[donor].min() <= shape.lo + 0.5:
            continue
        victim = int(rng.integers(shape.K))
        if victim == donor:
            continue
        shrink = rng.uniform(0.3, 0.8)
        candidate = shape.lo + (values[donor] - shape.lo) * shrink
        old = values[victim].copy()
        values[victim] = candidate
        report = deck_is_valid(Deck(values, shape))
        if not report.valid:
            values[victim] = old
    raise RuntimeError(f"could not reach {min_pairs} dominated pairs in {max_tries} steps")


# Pair targets for the eight stand-in reference decks.  One deck has very
# few dominated pairs; the rest are heavy on them, averaging out near the
# published mean quality of commercial decks.  Each target must decompose
# into disjoint chains within 32 cards.
REFERENCE_PAIR_TARGETS = (18, 260, 255, 249, 245, 248, 242, 244)


def synthetic_reference_decks(shape: DeckShape | None = None) -> list[tuple[str, Deck]]:
    """Eight deterministic stand-ins for purchased decks, labeled synthetic."""
    shape = shape or DeckShape()
    decks = []
    for i, pairs in enumerate(REFERENCE_PAIR_TARGETS, start=1):
        decks.append((f"synthetic_{i:02d}", deck_with_dominating_pairs(shape, pairs)))
    return decks
