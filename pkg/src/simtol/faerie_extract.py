"""Dictionary-based approximate entity extraction.

The document is scanned once.  A single min-heap over the inverted lists
of the document's tokens yields, entity by entity, the sorted list of
document positions whose token occurs in that entity.  Each position list
is then filtered (lazy count, bucket count, binary span/shift windows) and
the surviving substrings are verified exactly.

Token views: q-grams of characters for ED/EDS and whitespace words for
JAC/COS/DICE.  Entity ids and positions are 1-based.
"""

from __future__ import annotations

import enum
import heapq
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

from .core import (
    EXCEEDED,
    InputError,
    RunStats,
    Sim,
    SimilaritySpec,
    SizeBounds,
    bounded_edit_distance,
    eds_budget,
    floor_guard,
    lazy_threshold,
    meets_overlap,
    overlap_threshold,
    similarity,
    token_count_bounds,
)
from .tokenize import qgrams, word_tokens

__all__ = [
    "Pruning",
    "EntityIndex",
    "PositionList",
    "Match",
    "tokens_of",
    "build_entity_index",
    "scan_document",
    "find_candidate_windows",
    "windows_to_candidates",
    "extract",
]


class Pruning(enum.Enum):
    LAZY = "lazy"
    BUCKET = "bucket"
    BATCH_BINARY = "batch"


class PositionList(NamedTuple):
    entity: int
    positions: list[int]


class Match(NamedTuple):
    """One extracted pair; ``start``/``end`` are inclusive and 1-based."""

    start: int
    end: int
    entity: int
    value: object


def tokens_of(text: str, spec: SimilaritySpec) -> list[str]:
    if spec.char_based:
        return [g.text for g in qgrams(text, spec.q)]
    return [g.text for g in word_tokens(text)]


@dataclass
class EntityIndex:
    spec: SimilaritySpec
    entities: list[str]
    sizes: list[int]
    bounds: list[SizeBounds]
    lists: dict[str, list[int]]
    token_bags: list[Counter] = field(repr=False)
    # entities with some admissible length whose overlap threshold is <= 0;
    # they can match substrings sharing no token at all
    zero_threshold: list[int] = field(default_factory=list)

    def size(self, eid: int) -> int:
        return self.sizes[eid - 1]

    def bound(self, eid: int) -> SizeBounds:
        return self.bounds[eid - 1]

    @property
    def global_bounds(self) -> SizeBounds:
        if not self.bounds:
            return SizeBounds(1, 0)
        return SizeBounds(min(b.lower for b in self.bounds), max(b.upper for b in self.bounds))


def build_entity_index(entities: Sequence[str], spec: SimilaritySpec) -> EntityIndex:
    """Token -> ascending entity ids.  Each id appears once per distinct token."""
    lists: dict[str, list[int]] = {}
    sizes, bounds, bags, zero = [], [], [], []
    for eid, text in enumerate(entities, 1):
        toks = tokens_of(text, spec)
        if not toks or (spec.function is Sim.ED and len(text) <= spec.tau):
            raise InputError(f"entity {eid} ({text!r}) yields no usable token under {spec.function.name}")
        bag = Counter(toks)
        for t in bag:
            lists.setdefault(t, []).append(eid)
        n = len(toks)
        b = token_count_bounds(spec, n)
        sizes.append(n)
        bounds.append(b)
        bags.append(bag)
        if any(overlap_threshold(spec, n, l) <= 0 for l in range(b.lower, b.upper + 1)):
            zero.append(eid)
    return EntityIndex(spec, list(entities), sizes, bounds, lists, bags, zero)


def scan_document(doc_tokens: Sequence[str], index: EntityIndex, stats: RunStats | None = None) -> Iterator[PositionList]:
    """Yield each entity's position list, in ascending entity id order.

    One heap cursor per document position walks that token's inverted list,
    so every list element is read exactly once.
    """
    lists = index.lists
    heap: list[tuple[int, int, int]] = []
    cursors: list[list[int] | None] = [None] * (len(doc_tokens) + 1)
    for p, tok in enumerate(doc_tokens, 1):
        lst = lists.get(tok)
        if lst:
            cursors[p] = lst
            heap.append((lst[0], p, 0))
    heapq.heapify(heap)
    reads = 0
    cur_e, cur_p = -1, []
    while heap:
        e, p, k = heap[0]
        reads += 1
        if e != cur_e:
            if cur_p:
                yield PositionList(cur_e, cur_p)
            cur_e, cur_p = e, []
        cur_p.append(p)
        lst = cursors[p]
        k += 1
        if k < len(lst):
            heapq.heapreplace(heap, (lst[k], p, k))
        else:
            heapq.heappop(heap)
    if cur_p:
        yield PositionList(cur_e, cur_p)
    if stats is not None:
        stats.probed += reads


# --------------------------------------------------------------------------
# windows


def _binary_shift(P: Sequence[int], i: int, j: int, top: int) -> int:
    """First start index >= i whose T_l-window can span at most ``top``.

    Indices are 0-based here.  Starts skipped are provably not the start of
    any window with span <= top (the relaxed span p_j + (mid - i) - p_mid + 1
    is non-increasing in mid and never exceeds the true span).
    """
    width = j - i
    n = len(P)
    while True:
        if j >= n:
            return n
        if P[j] - P[i] + 1 <= top:
            return i
        lo, hi = i + 1, j
        pj = P[j]
        while lo < hi:
            mid = (lo + hi) // 2
            if pj + (mid - i) - P[mid] + 1 <= top:
                hi = mid
            else:
                lo = mid + 1
        i = lo
        j = i + width


def _spans(P: Sequence[int], t_l: int, top: int, lo_idx: int = 0, hi_idx: int | None = None):
    """Yield (i, x) over 0-based starts i in [lo_idx, hi_idx] with
    x = last index such that P[x] - P[i] + 1 <= top and x - i + 1 >= t_l."""
    if hi_idx is None:
        hi_idx = len(P) - 1
    sub = P[lo_idx:hi_idx + 1]
    t_l = max(1, t_l)
    i = 0
    n = len(sub)
    while i <= n - t_l:
        i = _binary_shift(sub, i, i + t_l - 1, top)
        if i > n - t_l:
            break
        x = bisect_right(sub, sub[i] + top - 1) - 1
        yield lo_idx + i, lo_idx + x
        i += 1


def find_candidate_windows(P: Sequence[int], t_l: int, lower: int, upper: int) -> list[tuple[int, int]]:
    """Candidate windows (i, j), 1-based into ``P``.

    A window qualifies when it holds at least ``t_l`` positions and its
    span p_j - p_i + 1 lies in [lower, upper].
    """
    out = []
    if len(P) < max(1, t_l):
        return out
    t_l = max(1, t_l)
    for i, x in _spans(P, t_l, upper):
        for j in range(i + t_l - 1, x + 1):
            span = P[j] - P[i] + 1
            if span >= lower:
                assert t_l <= j - i + 1 <= upper and lower <= span <= upper
                out.append((i + 1, j + 1))
    return out


def windows_to_candidates(window: tuple[int, int], P: Sequence[int], n_tokens: int, bounds: SizeBounds) -> list[tuple[int, int]]:
    """Token substrings (start, length) that contain every position of the
    window and no other position of ``P``.

    The clamping to the neighbouring positions means adjacent windows never
    produce the same substring.
    """
    i, j = window[0] - 1, window[1] - 1
    prev = P[i - 1] if i > 0 else 0
    nxt = P[j + 1] if j + 1 < len(P) else n_tokens + 1
    out = []
    a_lo, a_hi = prev + 1, P[i]
    b_lo, b_hi = P[j], nxt - 1
    for a in range(a_lo, a_hi + 1):
        for l in range(max(bounds.lower, b_lo - a + 1), min(bounds.upper, b_hi - a + 1) + 1):
            if a + l - 1 <= n_tokens:
                out.append((a, l))
    return out


# --------------------------------------------------------------------------
# extraction


def _doc_tokens(document: str, spec: SimilaritySpec) -> list[str]:
    return tokens_of(document, spec)


def _gap_bound(spec: SimilaritySpec, n: int, b: SizeBounds) -> int:
    best = -1
    for l in range(b.lower, b.upper + 1):
        t = overlap_threshold(spec, n, l)
        if t > 0:
            best = max(best, l - t)
    return best


def _buckets(P: Sequence[int], gap: int) -> list[tuple[int, int]]:
    out = []
    s = 0
    for k in range(1, len(P)):
        if P[k] - P[k - 1] - 1 > gap:
            out.append((s, k - 1))
            s = k
    if P:
        out.append((s, len(P) - 1))
    return out


def _set_cap(spec: SimilaritySpec, n: int, c: int) -> int:
    """Largest substring size compatible with c shared positions."""
    m = min(n, c)
    d = spec.delta
    if spec.function is Sim.JAC:
        return floor_guard(m / d)
    if spec.function is Sim.COS:
        return floor_guard(m / (d * d))
    return floor_guard(m * (2 - d) / d)


def _enumerate_from(P, i, x, n_tokens, b: SizeBounds, thresholds, caps, min_count, stats):
    """Substrings whose first shared position is P[i] and last is some
    P[k], k <= x, holding at least ``min_count`` shared positions and
    passing the exact count test.  Yields (a, l).

    Every substring looked at, i.e. every nonzero occurrence count, is
    added to ``stats.candidates``.
    """
    prev = P[i - 1] if i > 0 else 0
    a_lo, a_hi = prev + 1, P[i]
    for k in range(i + max(0, min_count - 1), x + 1):
        c = k - i + 1
        b_lo = P[k]
        b_hi = (P[k + 1] - 1) if k + 1 < len(P) else n_tokens
        if b_hi > n_tokens:
            b_hi = n_tokens
        l_min = max(b.lower, b_lo - a_hi + 1)
        l_max = min(b.upper, b_hi - a_lo + 1)
        for l in range(l_min, l_max + 1):
            lo = max(a_lo, b_lo - l + 1)
            hi = min(a_hi, b_hi - l + 1)
            if hi < lo:
                continue
            stats.candidates += hi - lo + 1
            t = thresholds[l - b.lower]
            if t <= 0 or c < t:
                continue
            if caps is not None and l > caps(c):
                continue
            for a in range(lo, hi + 1):
                yield a, l


def _verify(spec: SimilaritySpec, document: str, doc_tokens, bag: Counter, entity: str, n: int, a: int, l: int):
    fn = spec.function
    if fn is Sim.ED or fn is Sim.EDS:
        sub = document[a - 1:a + l + spec.q - 2]
        if fn is Sim.ED:
            d = bounded_edit_distance(sub, entity, spec.tau)
            return (a, a + l + spec.q - 2, d) if d is not EXCEEDED else None
        longer = max(len(sub), len(entity))
        d = bounded_edit_distance(sub, entity, eds_budget(spec.threshold, longer))
        if d is EXCEEDED:
            return None
        return a, a + l + spec.q - 2, 1 - Fraction(d, longer)
    window = Counter(doc_tokens[a - 1:a + l - 1])
    inter = sum(min(v, bag[t]) for t, v in window.items() if t in bag)
    if not meets_overlap(spec, inter, n, l):
        return None
    return a, a + l - 1, similarity(spec, doc_tokens[a - 1:a + l - 1], list(bag.elements()))


def extract(
    dictionary: Sequence[str] | EntityIndex,
    document: str,
    spec: SimilaritySpec | None = None,
    pruning: Pruning = Pruning.BATCH_BINARY,
    stats: RunStats | None = None,
) -> list[Match]:
    """All (substring, entity) pairs meeting ``spec``, sorted by
    (entity, start, end)."""
    if isinstance(dictionary, EntityIndex):
        index = dictionary
        spec = index.spec
    else:
        if spec is None:
            raise TypeError("spec is required when passing raw entities")
        index = build_entity_index(dictionary, spec)
    pruning = Pruning(pruning)
    stats = stats if stats is not None else RunStats()
    doc_tokens = _doc_tokens(document, spec)
    N = len(doc_tokens)
    out: list[Match] = []
    set_sim = spec.function.is_set_sim

    def emit(eid: int, a: int, l: int) -> None:
        stats.bump("verified")
        r = _verify(spec, document, doc_tokens, index.token_bags[eid - 1], index.entities[eid - 1], index.size(eid), a, l)
        if r is not None:
            out.append(Match(r[0], r[1], eid, r[2]))

    zero = set(index.zero_threshold)
    for eid in index.zero_threshold:
        n, b = index.size(eid), index.bound(eid)
        for l in range(b.lower, min(b.upper, N) + 1):
            if overlap_threshold(spec, n, l) <= 0:
                for a in range(1, N - l + 2):
                    stats.candidates += 1
                    emit(eid, a, l)

    for eid, P in scan_document(doc_tokens, index, stats):
        n, b = index.size(eid), index.bound(eid)
        t_l = lazy_threshold(spec, n)
        if len(P) < t_l:
            continue
        thresholds = [overlap_threshold(spec, n, l) for l in range(b.lower, b.upper + 1)]
        if eid in zero and all(t <= 0 for t in thresholds):
            continue
        t_l = max(1, t_l)
        if pruning is Pruning.LAZY:
            groups = [(0, len(P) - 1)]
        else:
            groups = [g for g in _buckets(P, _gap_bound(spec, n, b)) if g[1] - g[0] + 1 >= t_l]
            stats.bump("buckets_kept", len(groups))
        min_k = t_l if pruning is Pruning.BATCH_BINARY else 1
        caps = None
        if pruning is Pruning.BATCH_BINARY and set_sim:
            caps = lambda c, _n=n: _set_cap(spec, _n, c)  # noqa: E731
        for g0, g1 in groups:
            if pruning is Pruning.BATCH_BINARY:
                starts = _spans(P, t_l, b.upper, g0, g1)
            else:
                starts = ((i, bisect_right(P, P[i] + b.upper - 1, i, g1 + 1) - 1) for i in range(g0, g1 + 1))
            for i, x in starts:
                for a, l in _enumerate_from(P, i, x, N, b, thresholds, caps, min_k, stats):
                    emit(eid, a, l)
    out.sort(key=lambda m: (m.entity, m.start, m.end))
    stats.results += len(out)
    return out
