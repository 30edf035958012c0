"""Threshold edit-distance search with pivotal prefix signatures.

Every string is cut into positional q-grams sorted by a global rarity
order.  A data string keeps a prefix of its sorted grams that cannot be
wiped out by ``tau`` edits, together with ``tau + 1`` pairwise disjoint
pivot grams taken from that prefix.  For a similar pair, whichever string
has the smaller last prefix gram must share one of its pivots with the
other string's prefix, so a query probes the prefix index with its own
pivots and the pivot index with its own prefix.

The index is built once for a maximum threshold and answers any smaller
threshold: level ``i`` holds the grams that extend the prefix from
threshold ``i - 1`` to ``i``.  Candidates then pass an alignment filter
that charges each query pivot its best match near the same position in
the candidate, and are verified with bounded edit distance.
"""

from __future__ import annotations

import enum
from bisect import insort
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    EXCEEDED,
    InputError,
    ParameterError,
    RunStats,
    bounded_edit_distance,
    run_chunks,
)
from .tokenize import GlobalOrder, PositionalGram, build_global_order, ordered_grams, qgrams

__all__ = [
    "PivotMode",
    "PivotalSet",
    "PivotError",
    "SearchIndex",
    "select_pivots",
    "first_fit_pivots",
    "max_disjoint",
    "boundary_grams",
    "build_index",
    "sed",
    "substring_ed",
    "alignment_filter",
    "generate_candidates",
    "search",
    "search_many",
]


class PivotMode(enum.Enum):
    OPTIMAL = "optimal"
    RANDOM = "random"


class PivotError(ValueError):
    """The grams offered do not contain enough pairwise disjoint grams."""


@dataclass(frozen=True)
class PivotalSet:
    grams: tuple[PositionalGram, ...]  # ascending position
    weight: int

    def __post_init__(self) -> None:
        for a, b in zip(self.grams, self.grams[1:]):
            assert b.pos - a.pos >= len(a.text), "pivots overlap"


# --------------------------------------------------------------------------
# pivot selection


def max_disjoint(positions: Sequence[int], q: int) -> int:
    """Largest number of pairwise disjoint grams among sorted start positions."""
    count, free = 0, None
    for p in positions:
        if free is None or p >= free:
            count += 1
            free = p + q
    return count


def select_pivots(grams: Sequence[PositionalGram], weights: Sequence[int], tau: int, q: int) -> PivotalSet:
    """``tau + 1`` pairwise disjoint grams of minimum total weight."""
    need = tau + 1
    items = sorted(zip(grams, weights), key=lambda t: t[0].pos)
    n = len(items)
    inf = float("inf")
    # prev[k]: number of grams before k that are disjoint from gram k
    prev = []
    for k in range(n):
        j = k
        while j > 0 and items[k][0].pos - items[j - 1][0].pos < q:
            j -= 1
        prev.append(j)
    # W[j][i]: best weight of j pivots among the first i grams
    W = [[inf] * (n + 1) for _ in range(need + 1)]
    P = [[-1] * (n + 1) for _ in range(need + 1)]
    for i in range(n + 1):
        W[0][i] = 0
    for j in range(1, need + 1):
        for i in range(j, n + 1):
            best, arg = W[j][i - 1], P[j][i - 1]
            k = i - 1
            cand = W[j - 1][prev[k]] + items[k][1]
            if cand < best:
                best, arg = cand, k
            W[j][i], P[j][i] = best, arg
    if W[need][n] == inf:
        raise PivotError(f"fewer than {need} disjoint grams")
    chosen = []
    i, j = n, need
    while j > 0:
        k = P[j][i]
        chosen.append(items[k][0])
        i, j = prev[k], j - 1
    chosen.reverse()
    return PivotalSet(tuple(chosen), int(W[need][n]))


def first_fit_pivots(grams_in_order: Sequence[PositionalGram], weights: Sequence[int], tau: int, q: int) -> PivotalSet:
    """Take grams in the given order, skipping any that overlap one already
    taken.  Falls back to a left-to-right sweep when that gets stuck."""
    need = tau + 1
    picked: list[tuple[PositionalGram, int]] = []
    for g, w in zip(grams_in_order, weights):
        if all(abs(g.pos - h.pos) >= q for h, _ in picked):
            picked.append((g, w))
            if len(picked) == need:
                break
    if len(picked) < need:
        picked = []
        free = None
        for g, w in sorted(zip(grams_in_order, weights), key=lambda t: t[0].pos):
            if free is None or g.pos >= free:
                picked.append((g, w))
                free = g.pos + q
                if len(picked) == need:
                    break
        if len(picked) < need:
            raise PivotError(f"fewer than {need} disjoint grams")
    picked.sort(key=lambda t: t[0].pos)
    return PivotalSet(tuple(g for g, _ in picked), sum(w for _, w in picked))


def boundary_grams(sorted_grams: Sequence[PositionalGram], q: int, tau_max: int) -> list[int]:
    """Indexes ``k_0 < k_1 < ...`` into ``sorted_grams``: ``k_i`` is the
    first index at which the grams up to it need ``i + 1`` edits to destroy.
    At most ``tau_max + 1`` entries; fewer when the string is too short."""
    out: list[int] = []
    positions: list[int] = []
    for k, g in enumerate(sorted_grams):
        insort(positions, g.pos)
        if max_disjoint(positions, q) > len(out):
            out.append(k)
            if len(out) == tau_max + 1:
                break
    return out


# --------------------------------------------------------------------------
# index


@dataclass
class _Postings:
    """Sorted entries ``(length, id, pos)``, pivot entries also carry a
    mask of the levels at which the gram is a pivot; plus length -> slice
    offsets."""

    entries: list = field(default_factory=list)
    offsets: dict = field(default_factory=dict)

    def finish(self) -> None:
        self.entries.sort()
        self.offsets = {}
        for k, e in enumerate(self.entries):
            ln = e[0]
            lo, _hi = self.offsets.get(ln, (k, k))
            self.offsets[ln] = (lo, k + 1)

    def in_lengths(self, lo: int, hi: int):
        for ln in range(lo, hi + 1):
            span = self.offsets.get(ln)
            if span is not None:
                yield from self.entries[span[0]:span[1]]


@dataclass
class SearchIndex:
    records: list[str]
    q: int
    tau_max: int
    order: GlobalOrder
    pivots: PivotMode
    plus: list[dict]  # per level: gram text -> _Postings
    minus: list[dict]
    last_keys: list[list]  # per record: key of the last prefix gram per level
    boundaries: list[list[PositionalGram]]  # per record: g_0, g_1, ...
    short: list[list[int]]  # per level: ids with no prefix at that level


def _gram_weights(order: GlobalOrder, grams: Sequence[PositionalGram]) -> list[int]:
    return [order.freq.get(g.text, 0) for g in grams]


def build_index(
    R: Sequence[str],
    q: int = 2,
    tau_max: int = 2,
    order: GlobalOrder | None = None,
    pivots: PivotMode | str = PivotMode.OPTIMAL,
    incremental: bool = True,
) -> SearchIndex:
    """Prefix and pivot indexes for thresholds ``0..tau_max``.

    With ``incremental`` each record's prefix at level ``i`` is as short as
    ``i`` edits allow.  Otherwise every record keeps the ``q * tau_max + 1``
    smallest grams and ``tau_max + 1`` pivots, which also serves smaller
    thresholds, only with looser filtering.  Data pivots minimise the
    summed corpus frequency of their grams, or are taken first-fit in
    global order with ``PivotMode.RANDOM``.
    """
    if q < 1:
        raise ParameterError("q must be positive")
    if tau_max < 0:
        raise ParameterError("tau_max must be non-negative")
    pivots = PivotMode(pivots)
    R = list(R)
    for i, r in enumerate(R, 1):
        if len(r) < q:
            raise InputError(f"record {i}: length {len(r)} is shorter than q = {q}")
    grams = [qgrams(r, q) for r in R]
    if order is None:
        order = build_global_order([[g.text for g in gs] for gs in grams])
    levels = tau_max + 1
    plus: list[dict] = [{} for _ in range(levels)]
    minus: list[dict] = [{} for _ in range(levels)]
    last_keys: list[list] = []
    bounds_out: list[list[PositionalGram]] = []
    short: list[list[int]] = [[] for _ in range(levels)]
    for rid, (r, gs) in enumerate(zip(R, grams), 1):
        srt = ordered_grams(gs, order)
        if incremental:
            ks = boundary_grams(srt, q, tau_max)
            stages = list(enumerate(ks))
        else:
            pre = srt[:q * tau_max + 1]
            c = min(max_disjoint(sorted(g.pos for g in pre), q), levels)
            ks = [len(pre) - 1] * c
            stages = [(c - 1, len(pre) - 1)] if c else []
        bounds_out.append([srt[k] for k in ks])
        last_keys.append([order.key(srt[k].text) for k in ks])
        for lvl in range(len(ks), levels):
            short[lvl].append(rid)
        start = 0
        piv_levels: dict = {}  # pivot gram -> (first level, level mask)
        for lvl, k in stages:
            slot = lvl if incremental else 0
            for g in srt[start:k + 1]:
                plus[slot].setdefault(g.text, _Postings()).entries.append((len(r), rid, g.pos))
            start = k + 1
            pre = srt[:k + 1]
            w = _gram_weights(order, pre)
            if pivots is PivotMode.OPTIMAL:
                piv = select_pivots(pre, w, lvl, q)
            else:
                piv = first_fit_pivots(pre, w, lvl, q)
            mask = 1 << lvl if incremental else (1 << (lvl + 1)) - 1
            for g in piv.grams:
                first, m = piv_levels.get(g, (slot, 0))
                piv_levels[g] = (first, m | mask)
        for g, (slot, m) in piv_levels.items():
            minus[slot].setdefault(g.text, _Postings()).entries.append((len(r), rid, g.pos, m))
    for lvl in range(levels):
        for d in (plus[lvl], minus[lvl]):
            for p in d.values():
                p.finish()
        short[lvl].sort(key=lambda i: (len(R[i - 1]), i))
    return SearchIndex(R, q, tau_max, order, pivots, plus, minus, last_keys, bounds_out, short)


# --------------------------------------------------------------------------
# alignment filter


def sed(g: str, window: str, budget: int | None = None):
    """Smallest edit distance between ``g`` and any substring of
    ``window``; :data:`EXCEEDED` when it is above ``budget``."""
    n, m = len(g), len(window)
    if budget is None:
        budget = n
    if budget < 0:
        return EXCEEDED
    big = budget + 1
    lo_off = -budget  # allowed range of j - i along a path within budget
    hi_off = m - n + budget
    prev = [0] * (m + 1)
    for i in range(1, n + 1):
        c = g[i - 1]
        cur = [big] * (m + 1)
        jlo = max(0, i + lo_off)
        jhi = min(m, i + hi_off)
        if jlo == 0:
            cur[0] = min(i, big)
            jlo = 1
        best = cur[0]
        for j in range(jlo, jhi + 1):
            v = prev[j - 1] + (c != window[j - 1])
            t = prev[j] + 1
            if t < v:
                v = t
            t = cur[j - 1] + 1
            if t < v:
                v = t
            if v > big:
                v = big
            cur[j] = v
            if v < best:
                best = v
        if best > budget:
            return EXCEEDED
        prev = cur
    d = min(prev)
    return d if d <= budget else EXCEEDED


def substring_ed(g: str, r: str, center: int, tau: int, budget: int):
    """:func:`sed` of ``g`` against ``r[center - tau .. center + |g| - 1 + tau]``
    (1-based, clamped to ``r``)."""
    lo = max(1, center - tau)
    hi = min(len(r), center + len(g) - 1 + tau)
    return sed(g, r[lo - 1:hi], budget)


def alignment_filter(pivots: Sequence[PositionalGram], r: str, tau: int) -> bool:
    """True (pass) unless the pivots' best local matches in ``r`` already
    cost more than ``tau`` edits in total."""
    spent = 0
    for g in pivots:
        d = substring_ed(g.text, r, g.pos, tau, tau - spent)
        if d is EXCEEDED:
            return False
        spent += d
    return True


# --------------------------------------------------------------------------
# search


def _query_prefix(index: SearchIndex, s: str, tau: int):
    """(prefix, prefix grams probed against pivots, last key) or None when
    the query has too few disjoint grams to be filtered."""
    q = index.q
    if len(s) < q:
        return None
    gs = ordered_grams(qgrams(s, q), index.order)
    pre = gs[:q * tau + 1]
    if max_disjoint(sorted(g.pos for g in pre), q) < tau + 1:
        return None
    last_text = pre[-1].text
    probe = list(pre) + [g for g in gs[len(pre):] if g.text == last_text]
    return pre, probe, index.order.key(last_text)


def generate_candidates(
    index: SearchIndex,
    s: str,
    tau: int,
    pivots: PivotMode | str = PivotMode.OPTIMAL,
    stats: RunStats | None = None,
) -> tuple[set[int], PivotalSet | None]:
    """Ids passing the length, position and pivotal prefix filters, with
    the query pivots used (``None`` when the query had to scan).

    A query gram's pivot weight is the number of records its prefix-list
    probe would admit, so optimal pivots minimise that side's candidates.
    """
    if not (0 <= tau <= index.tau_max):
        raise ParameterError(f"tau must lie in [0, {index.tau_max}], got {tau}")
    mode = PivotMode(pivots)
    stats = stats if stats is not None else RunStats()
    n = len(s)
    lo, hi = n - tau, n + tau
    R = index.records
    sig = _query_prefix(index, s, tau)
    cands: set[int] = set()
    if sig is None:
        stats.bump("unfiltered_queries")
        for rid in range(1, len(R) + 1):
            if lo <= len(R[rid - 1]) <= hi:
                stats.probed += 1
                cands.add(rid)
        return cands, None
    pre, probe, last_s = sig
    keys = index.last_keys
    bit = 1 << tau

    def plus_hits(g: PositionalGram) -> set[int]:
        hits = set()
        for lvl in range(tau + 1):
            lst = index.plus[lvl].get(g.text)
            if lst is None:
                continue
            for _, rid, p in lst.in_lengths(lo, hi):
                stats.probed += 1
                if abs(p - g.pos) <= tau and len(keys[rid - 1]) > tau and keys[rid - 1][tau] > last_s:
                    hits.add(rid)
        return hits

    if mode is PivotMode.OPTIMAL:
        hits = [plus_hits(g) for g in pre]
        piv = select_pivots(pre, [len(h) for h in hits], tau, index.q)
        chosen = [hits[pre.index(g)] for g in piv.grams]
    else:
        piv = first_fit_pivots(pre, [0] * len(pre), tau, index.q)
        chosen = [plus_hits(g) for g in piv.grams]
        piv = PivotalSet(piv.grams, sum(len(h) for h in chosen))
    for h in chosen:
        cands |= h
    for g in probe:
        for lvl in range(tau + 1):
            lst = index.minus[lvl].get(g.text)
            if lst is None:
                continue
            for _, rid, p, m in lst.in_lengths(lo, hi):
                stats.probed += 1
                if m & bit and abs(p - g.pos) <= tau and len(keys[rid - 1]) > tau and keys[rid - 1][tau] <= last_s:
                    cands.add(rid)
    for rid in index.short[tau]:
        if lo <= len(R[rid - 1]) <= hi:
            stats.probed += 1
            cands.add(rid)
    return cands, piv


def search(
    index: SearchIndex,
    s: str,
    tau: int,
    pivots: PivotMode | str = PivotMode.OPTIMAL,
    align: bool = True,
    stats: RunStats | None = None,
) -> list[tuple[int, int]]:
    """``(id, ED)`` for every record within ``tau`` of ``s``, sorted by id."""
    stats = stats if stats is not None else RunStats()
    cands, piv = generate_candidates(index, s, tau, pivots, stats)
    stats.candidates += len(cands)
    out = []
    for rid in sorted(cands):
        r = index.records[rid - 1]
        if align and piv is not None and not alignment_filter(piv.grams, r, tau):
            stats.bump("aligned_out")
            continue
        d = bounded_edit_distance(r, s, tau)
        if d is not EXCEEDED:
            out.append((rid, d))
    stats.results += len(out)
    return out


def search_many(
    index: SearchIndex,
    queries: Sequence[str],
    tau: int,
    pivots: PivotMode | str = PivotMode.OPTIMAL,
    align: bool = True,
    stats: RunStats | None = None,
    threads: int = 1,
) -> list[tuple[int, int, int]]:
    """``(query id, record id, ED)`` triples for a batch of queries."""
    stats = stats if stats is not None else RunStats()
    queries = list(queries)

    def work(chunk):
        local = RunStats()
        res = [(qid, rid, d) for qid in chunk for rid, d in search(index, queries[qid - 1], tau, pivots, align, local)]
        return res, local

    out = run_chunks(work, list(range(1, len(queries) + 1)), threads, stats)
    out.sort()
    return out
