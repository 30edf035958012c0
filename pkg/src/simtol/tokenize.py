"""Tokenisation and the global frequency order over tokens."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

__all__ = [
    "PositionalGram",
    "GlobalOrder",
    "qgrams",
    "word_tokens",
    "build_global_order",
    "ordered_grams",
]


class PositionalGram(NamedTuple):
    text: str
    pos: int  # 1-based


def qgrams(s: str, q: int) -> list[PositionalGram]:
    if q < 1:
        raise ValueError("q must be >= 1")
    return [PositionalGram(s[i:i + q], i + 1) for i in range(len(s) - q + 1)]


def word_tokens(s: str) -> list[PositionalGram]:
    """Whitespace-separated tokens; positions are 1-based token indices."""
    return [PositionalGram(w, i) for i, w in enumerate(s.split(), 1)]


@dataclass(frozen=True)
class GlobalOrder:
    """Total order on token texts: rarer tokens first.

    ``freq`` holds document frequencies and ``rank`` a bijection onto
    ``1..N``.  Tokens never seen while building the order share the rank
    ``N + 1`` and are told apart by their text, see :meth:`key`.
    """

    freq: Mapping[str, int]
    rank: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.rank)

    @property
    def unseen_rank(self) -> int:
        return len(self.rank) + 1

    def key(self, text: str) -> tuple[int, str]:
        """Sort key of a token text; strictly ordered over all texts."""
        r = self.rank.get(text)
        if r is None:
            return (len(self.rank) + 1, text)
        return (r, "")

    def rank_of(self, text: str) -> float:
        r = self.rank.get(text)
        return float("inf") if r is None else r

    @classmethod
    def from_ranking(cls, ranked: Sequence[str], freq: Mapping[str, int] | None = None) -> "GlobalOrder":
        rank = {t: i for i, t in enumerate(ranked, 1)}
        if len(rank) != len(ranked):
            raise ValueError("ranking contains duplicates")
        return cls(dict(freq or {t: 0 for t in ranked}), rank)


def build_global_order(corpus: Iterable[Iterable[str]], ties: str = "first") -> GlobalOrder:
    """Rank tokens by ascending document frequency.

    Ties are broken by first appearance in the corpus (record order, then
    position) when ``ties="first"``, or by token text when ``ties="text"``.
    """
    freq: dict[str, int] = {}
    first: dict[str, int] = {}
    for record in corpus:
        seen = set()
        for tok in record:
            if tok in seen:
                continue
            seen.add(tok)
            freq[tok] = freq.get(tok, 0) + 1
            if tok not in first:
                first[tok] = len(first)
    if ties == "first":
        ordered = sorted(freq, key=lambda t: (freq[t], first[t]))
    elif ties == "text":
        ordered = sorted(freq, key=lambda t: (freq[t], t))
    else:
        raise ValueError(f"unknown tie rule {ties!r}")
    return GlobalOrder(freq, {t: i for i, t in enumerate(ordered, 1)})


def ordered_grams(grams: Iterable[PositionalGram], order: GlobalOrder) -> list[PositionalGram]:
    """Grams sorted by (global order, position)."""
    key = order.key
    return sorted(grams, key=lambda g: (key(g.text), g.pos))
