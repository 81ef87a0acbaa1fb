"""Deck and card representation: dominance between cards, deck validity,
the flat genome encoding used by the optimizers, and deck CSV files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DeckFormatError(ValueError):
    """Raised for malformed deck CSV files; message names the offending line."""


@dataclass(frozen=True)
class DeckShape:
    """Dimensions and value range of a deck: K cards, L categories, values in [lo, hi]."""

    K: int = 32
    L: int = 4
    lo: float = 1.0
    hi: float = 10.0

    def __post_init__(self) -> None:
        if self.K < 2 or self.K % 2 != 0:
            raise ValueError(f"K must be a positive even integer, got {self.K}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def genome_length(self) -> int:
        return self.K * self.L


@dataclass(frozen=True)
class Card:
    """One card: a tuple of category values."""

    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)


def card_dominates(a, b) -> bool:
    """True iff ``a`` beats ``b`` in every category (strictly greater everywhere)."""
    av = np.asarray(a.values if isinstance(a, Card) else a, dtype=float)
    bv = np.asarray(b.values if isinstance(b, Card) else b, dtype=float)
    if av.shape != bv.shape:
        raise ValueError(f"cards have different category counts: {av.shape} vs {bv.shape}")
    return bool(np.all(av > bv))


@dataclass(frozen=True, eq=False)
class Deck:
    """A full deck as a read-only (K, L) value matrix."""

    values: np.ndarray
    shape: DeckShape = field(default_factory=DeckShape)

    def __post_init__(self) -> None:
        mat = np.array(self.values, dtype=float)
        if mat.ndim != 2 or mat.shape != (self.shape.K, self.shape.L):
            raise ValueError(
                f"deck values must have shape ({self.shape.K}, {self.shape.L}), got {mat.shape}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "values", mat)

    @property
    def cards(self) -> tuple[Card, ...]:
        return tuple(Card(tuple(row)) for row in self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Deck):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the deck constraint check.

    ``duplicate_pairs`` lists index pairs of identical cards;
    ``dominant_card`` is the index of a card beating all others, if any.
    """

    valid: bool
    duplicate_pairs: tuple[tuple[int, int], ...] = ()
    dominant_card: int | None = None


def card_matrix(deck_or_values) -> np.ndarray:
    """Accept a Deck or a raw (K, L) array of card values and return the matrix."""
    if isinstance(deck_or_values, Deck):
        return deck_or_values.values
    mat = np.atleast_2d(np.asarray(deck_or_values, dtype=float))
    if mat.ndim != 2:
        raise ValueError("card values must form a 2-D matrix")
    return mat


def dominance_matrix(deck) -> np.ndarray:
    """Boolean (K, K) matrix: entry [i, j] is True iff card i dominates card j."""
    v = card_matrix(deck)
    return np.all(v[:, None, :] > v[None, :, :], axis=2)


def dominating_pair_count(deck) -> int:
    """Number of ordered card pairs (i, j) where card i dominates card j."""
    return int(dominance_matrix(deck).sum())


def deck_is_valid(deck) -> ValidityReport:
    """Check the two deck constraints: unique cards, no all-dominating card."""
    v = card_matrix(deck)
    k = v.shape[0]
    eq = np.all(v[:, None, :] == v[None, :, :], axis=2)
    iu, ju = np.triu_indices(k, k=1)
    dup_mask = eq[iu, ju]
    duplicates = tuple((int(i), int(j)) for i, j in zip(iu[dup_mask], ju[dup_mask]))
    dom = dominance_matrix(deck)
    dominant: int | None = None
    full_row = dom.sum(axis=1) == k - 1
    if np.any(full_row):
        dominant = int(np.argmax(full_row))
    return ValidityReport(
        valid=not duplicates and dominant is None,
        duplicate_pairs=duplicates,
        dominant_card=dominant,
    )


def genome_to_deck(genome: np.ndarray, shape: DeckShape) -> Deck:
    """Decode a flat genome into a deck, card-major: card k holds genes [k*L, (k+1)*L).

    Validity is not enforced here; run deck_is_valid separately.
    """
    g = np.asarray(genome, dtype=float)
    if g.ndim != 1 or g.size != shape.genome_length:
        raise ValueError(
            f"genome length {g.size} does not match K*L = {shape.genome_length}"
        )
    return Deck(g.reshape(shape.K, shape.L), shape)


def deck_to_genome(deck: Deck) -> np.ndarray:
    """Flatten a deck back into its genome vector (inverse of genome_to_deck)."""
    return deck.values.reshape(-1).copy()


def random_valid_deck(
    shape: DeckShape, rng: np.random.Generator, max_tries: int = 10_000
) -> Deck:
    """Draw genes uniformly from [lo, hi], resampling until the deck is valid."""
    for _ in range(max_tries):
        mat = rng.uniform(shape.lo, shape.hi, size=(shape.K, shape.L))
        deck = Deck(mat, shape)
        if deck_is_valid(deck).valid:
            return deck
    raise RuntimeError(f"no valid deck found in {max_tries} draws for {shape}")


def save_deck(deck: Deck, path, names: list[str] | None = None) -> None:
    """Write a deck CSV: header ``name,<cat_1>,...,<cat_L>``, one card per row.

    Values are written with full round-trip precision.
    """
    k, l = deck.values.shape
    if names is None:
        names = [f"card_{i:02d}" for i in range(k)]
    if len(names) != k:
        raise ValueError(f"need {k} card names, got {len(names)}")
    lines = ["name," + ",".join(f"cat_{j + 1}" for j in range(l))]
    for name, row in zip(names, deck.values):
        lines.append(name + "," + ",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_deck(path, shape: DeckShape | None = None, rescale: bool = False) -> Deck:
    """Read a deck CSV, optionally rescaling each category onto [lo, hi].

    With ``rescale`` the per-category minimum maps to lo and the maximum to
    hi; a constant category maps to the midpoint.  Without it, values must
    already lie inside the shape's range.  Malformed rows raise
    DeckFormatError naming the line.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DeckFormatError(f"{path}: empty deck file")
    header = lines[0].split(",")
    if len(header) < 2:
        raise DeckFormatError(f"{path}, line 1: header needs a name and at least one category")
    n_cat = len(header) - 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != n_cat + 1:
            raise DeckFormatError(
                f"{path}, line {lineno}: expected {n_cat + 1} fields, got {len(fields)}"
            )
        try:
            rows.append([float(x) for x in fields[1:]])
        except ValueError as exc:
            raise DeckFormatError(f"{path}, line {lineno}: non-numeric value ({exc})") from None
    if not rows:
        raise DeckFormatError(f"{path}: no card rows")
    mat = np.array(rows, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise DeckFormatError(f"{path}: non-finite values in deck")
    k = mat.shape[0]
    if shape is None:
        shape = DeckShape(K=k, L=n_cat)
    elif shape.K != k or shape.L != n_cat:
        raise DeckFormatError(
            f"{path}: file holds {k} cards x {n_cat} categories, expected "
            f"{shape.K} x {shape.L}"
        )
    if rescale:
        mat = rescale_values(mat, shape.lo, shape.hi)
    else:
        if np.any(mat < shape.lo) or np.any(mat > shape.hi):
            raise DeckFormatError(
                f"{path}: values outside [{shape.lo}, {shape.hi}]; pass rescale=True "
                "to normalize them"
            )
    return Deck(mat, shape)


def rescale_values(mat: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Affinely map each column onto [lo, hi]; constant columns go to the midpoint."""
    mat = np.asarray(mat, dtype=float)
    cmin = mat.min(axis=0)
    cmax = mat.max(axis=0)
    span = cmax - cmin
    out = np.empty_like(mat)
    mid = 0.5 * (lo + hi)
    for j in range(mat.shape[1]):
        if span[j] == 0.0:
            out[:, j] = mid
        else:
            out[:, j] = lo + (mat[:, j] - cmin[j]) * (hi - lo) / span[j]
    return out
