"""Partition-based set similarity joins under Jaccard, cosine and Dice.

The element universe is split into ``m`` slots by hashing, so every set
breaks into ``m`` fragments and the symmetric difference of two sets is the
sum of the fragment-wise differences.  A pair can only be similar if enough
slots agree: an allocation vector picks, per slot, whether to skip it (0),
require equal fragments (1) or accept fragments within one deletion (2).
Allocations are chosen per probe to minimise the inverted-list volume read.

Sets whose sizes are close share one index group, sized by the smallest
member, which bounds the number of groups a probe must visit.
"""

from __future__ import annotations

import enum
import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .core import (
    InputError,
    ParameterError,
    RunStats,
    Sim,
    SimilaritySpec,
    ceil_guard,
    floor_guard,
    meets_overlap,
    run_chunks,
    similarity,
)
from .tokenize import build_global_order

__all__ = [
    "Selection",
    "SetParams",
    "PartitionScheme",
    "Allocation",
    "NoAllocation",
    "fnv1a_64",
    "sim_params",
    "partition_set",
    "one_deletions",
    "optimal_allocation",
    "greedy_allocation",
    "group_boundaries",
    "join_set",
]


class Selection(enum.Enum):
    ALL_ONES = "ones"
    OPTIMAL = "optimal"
    GREEDY = "greedy"


class NoAllocation(ParameterError):
    """More agreement is required than ``2 m`` slots can express."""


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class SetParams:
    h_l: int  # largest symmetric difference of a similar set against one of size l
    h_ls: int | None  # same, for a known partner size s
    lower: int  # admissible partner sizes
    upper: int


def _sim(sim) -> Sim:
    fn = sim if isinstance(sim, Sim) else Sim(str(sim).lower())
    if not fn.is_set_sim:
        raise ParameterError(f"{fn.name} is not a set similarity")
    return fn


def _h_single(fn: Sim, d: float, l: int) -> int:
    if fn is Sim.JAC:
        return floor_guard((1 - d) * l / d)
    if fn is Sim.COS:
        return floor_guard((1 - d * d) * l / (d * d))
    return floor_guard(2 * (1 - d) * l / d)


def _h_pair(fn: Sim, d: float, l: int, s: int) -> int:
    if fn is Sim.JAC:
        return floor_guard((1 - d) * (s + l) / (1 + d))
    if fn is Sim.COS:
        return floor_guard(s + l - 2 * d * math.sqrt(s * l))
    return floor_guard((1 - d) * (s + l))


def _overlap_estimate(fn: Sim, d: float, l: int, s: int) -> float:
    if fn is Sim.JAC:
        return (l + s) * d / (1 + d)
    if fn is Sim.COS:
        return math.sqrt(l * s) * d
    return (l + s) * d / 2


def _size_range(fn: Sim, d: float, l: int) -> tuple[int, int]:
    if fn is Sim.JAC:
        lo, hi = l * d, l / d
    elif fn is Sim.COS:
        lo, hi = l * d * d, l / (d * d)
    else:
        lo, hi = l * d / (2 - d), l * (2 - d) / d
    return max(1, ceil_guard(lo)), floor_guard(hi)


def sim_params(sim, delta, l: int, s: int | None = None) -> SetParams:
    fn = _sim(sim)
    d = SimilaritySpec(fn, delta).delta
    if l < 1 or (s is not None and s < 1):
        raise ParameterError("set sizes must be positive")
    lo, hi = _size_range(fn, d, l)
    return SetParams(_h_single(fn, d, l), None if s is None else _h_pair(fn, d, l, s), lo, hi)


# --------------------------------------------------------------------------
# universe partition


def fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _canonical_bytes(element) -> bytes:
    if isinstance(element, bytes):
        return element
    return str(element).encode("utf-8")


@dataclass(frozen=True)
class PartitionScheme:
    """Element -> slot in ``1..m``.  Hash based unless ``mapping`` is given."""

    m: int
    mapping: Mapping[Hashable, int] | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ParameterError("m must be positive")

    def slot(self, element) -> int:
        if self.mapping is not None:
            return self.mapping[element]
        return fnv1a_64(_canonical_bytes(element)) % self.m + 1


def partition_set(X: Iterable, scheme: PartitionScheme, key: Callable | None = None) -> list[tuple]:
    """The ``m`` fragments of ``X``, each a sorted tuple."""
    parts: list[list] = [[] for _ in range(scheme.m)]
    for x in X:
        parts[scheme.slot(x) - 1].append(x)
    return [tuple(sorted(p, key=key)) for p in parts]


def one_deletions(fragment: Sequence) -> list[tuple]:
    return [tuple(fragment[:k]) + tuple(fragment[k + 1:]) for k in range(len(fragment))]


# --------------------------------------------------------------------------
# allocations


@dataclass(frozen=True)
class Allocation:
    vector: tuple[int, ...]
    cost: int

    @property
    def total(self) -> int:
        return sum(self.vector)


def _check_target(costs, target: int) -> None:
    if target > 2 * len(costs):
        raise NoAllocation(f"target {target} exceeds 2m = {2 * len(costs)}")
    for c in costs:
        if not (c[0] == 0 <= c[1] <= c[2]):
            raise ParameterError(f"cost triple {tuple(c)} must satisfy 0 = c0 <= c1 <= c2")


def optimal_allocation(costs: Sequence[Sequence[int]], target: int) -> Allocation:
    """Minimum-cost vector in {0,1,2}^m summing to ``target``."""
    _check_target(costs, target)
    m = len(costs)
    inf = math.inf
    cost = [[inf] * (target + 1) for _ in range(m + 1)]
    pick = [[0] * (target + 1) for _ in range(m + 1)]
    cost[0][0] = 0
    for i in range(1, m + 1):
        c0, c1, c2 = costs[i - 1]
        row, prev, pk = cost[i], cost[i - 1], pick[i]
        # only sums still able to reach the target with the slots left
        for j in range(max(0, target - 2 * (m - i)), min(target, 2 * i) + 1):
            best, bv = prev[j] + c0, 0
            if j >= 1 and prev[j - 1] + c1 <= best:
                best, bv = prev[j - 1] + c1, 1
            if j >= 2 and prev[j - 2] + c2 <= best:
                best, bv = prev[j - 2] + c2, 2
            row[j] = best
            pk[j] = bv
    vec = [0] * m
    j = target
    for i in range(m, 0, -1):
        vec[i - 1] = pick[i][j]
        j -= vec[i - 1]
    return Allocation(tuple(vec), int(cost[m][target]))


def greedy_allocation(costs: Sequence[Sequence[int]], target: int) -> Allocation:
    """Repeatedly raise the slot with the smallest cost increment."""
    _check_target(costs, target)
    vec = [0] * len(costs)
    heap = [(c[1] - c[0], i) for i, c in enumerate(costs)]
    heapq.heapify(heap)
    total = 0
    for _ in range(target):
        inc, i = heapq.heappop(heap)
        vec[i] += 1
        total += inc
        if vec[i] == 1:
            heapq.heappush(heap, (costs[i][2] - costs[i][1], i))
    return Allocation(tuple(vec), total)


def group_boundaries(l_min: int, l_max: int, alpha) -> list[int]:
    """Ascending floors of the size groups; group k spans
    ``[floor_k, floor_k / alpha]``."""
    a = float(alpha)
    if not (0.5 <= a <= 1):
        raise ParameterError(f"alpha must lie in [0.5, 1], got {alpha!r}")
    out = []
    l = l_min
    while l <= l_max:
        out.append(l)
        l = floor_guard(l / a) + 1
    return out


# --------------------------------------------------------------------------
# join


@dataclass
class _Group:
    floor: int
    top: int
    m: int
    frag_lists: list = field(default_factory=list)  # per slot: fragment -> ids
    del_lists: list = field(default_factory=list)  # per slot: deletion key -> ids
    members: list = field(default_factory=list)


class _Slots:
    """Per-``m`` slot tables over interned element ids."""

    def __init__(self, tokens: Sequence, scheme: Callable[[int], PartitionScheme]) -> None:
        self.tokens = tokens
        self.scheme = scheme
        self.cache: dict[int, list[int]] = {}

    def fragments(self, ids: Sequence[int], m: int) -> list[tuple]:
        table = self.cache.get(m)
        if table is None:
            sch = self.scheme(m)
            table = [0] + [sch.slot(t) - 1 for t in self.tokens[1:]]
            self.cache[m] = table
        parts: list[list] = [[] for _ in range(m)]
        for x in ids:  # ids arrive sorted, so fragments stay sorted
            parts[table[x]].append(x)
        return [tuple(p) for p in parts]


def _prepare(records, label: str):
    out = []
    for i, rec in enumerate(records, 1):
        items = list(rec) if not isinstance(rec, str) else rec.split()
        if not items:
            raise InputError(f"{label} record {i}: empty set")
        out.append(set(items))
    return out


def join_set(
    R: Sequence[Iterable],
    S: Sequence[Iterable] | None = None,
    sim=Sim.JAC,
    delta=0.8,
    selection: Selection | str = Selection.OPTIMAL,
    alpha=1.0,
    stats: RunStats | None = None,
    threads: int = 1,
    scheme: Callable[[int], PartitionScheme] | None = None,
) -> list[tuple]:
    """All pairs of sets with similarity at least ``delta``, sorted by id.

    Records are iterables of hashable elements (strings are split on
    whitespace); repeated elements are collapsed.  A self-join reports
    ``(smaller id, larger id, value)``; with ``S`` pairs are
    ``(id in R, id in S, value)``.  ``scheme`` maps a slot count ``m`` to
    the partition scheme used for it.
    """
    fn = _sim(sim)
    spec = SimilaritySpec(fn, delta)
    d = spec.delta
    selection = Selection(selection)
    group_boundaries(1, 0, alpha)  # validates alpha
    stats = stats if stats is not None else RunStats()
    Rs = _prepare(R, "R")
    Ss = None if S is None else _prepare(S, "S")
    order = build_global_order(Rs + (Ss or []))
    tokens = [None] * (len(order) + 1)
    for t, r in order.rank.items():
        tokens[r] = t
    slots = _Slots(tokens, scheme or (lambda m: PartitionScheme(m)))

    def intern(sets):
        return [tuple(sorted(order.rank[t] for t in x)) for x in sets]

    Rid = intern(Rs)
    Rset = [frozenset(x) for x in Rid]
    floors = group_boundaries(min(map(len, Rid)), max(map(len, Rid)), alpha) if Rid else []
    need_del = selection is not Selection.ALL_ONES
    groups = []
    for k, f in enumerate(floors):
        top = floors[k + 1] - 1 if k + 1 < len(floors) else max(map(len, Rid))
        m = _h_single(fn, d, f) + 1
        groups.append(_Group(f, top, m, [{} for _ in range(m)], [{} for _ in range(m)]))

    def index(rid: int) -> None:
        ids = Rid[rid - 1]
        g = groups[bisect_right(floors, len(ids)) - 1]
        g.members.append(rid)
        for i, frag in enumerate(slots.fragments(ids, g.m)):
            g.frag_lists[i].setdefault(frag, []).append(rid)
            if need_del:
                for key in one_deletions(frag):
                    g.del_lists[i].setdefault(key, []).append(rid)

    def probe(ids: tuple, lo: int, hi: int, local: RunStats) -> set:
        cands: set = set()
        n = len(ids)
        k0 = max(0, bisect_right(floors, lo) - 1)
        for g in groups[k0:]:
            if g.floor > hi:
                break
            a, b = max(g.floor, lo), min(g.top, hi)
            if a > b or not g.members:
                continue
            target = max(_h_pair(fn, d, a, n), _h_pair(fn, d, b, n)) + 1
            # all-ones covers only m agreements; a wider group range may need more
            if target > (g.m if selection is Selection.ALL_ONES else 2 * g.m):
                local.bump("unfiltered_groups")
                local.probed += len(g.members)
                cands.update(g.members)
                continue
            frags = slots.fragments(ids, g.m)
            c1 = [len(g.frag_lists[i].get(f, ())) for i, f in enumerate(frags)]
            if selection is Selection.ALL_ONES:
                vec = (1,) * g.m
                local.probed += sum(c1)
            else:
                costs = []
                for i, f in enumerate(frags):
                    c2 = c1[i] + len(g.del_lists[i].get(f, ()))
                    fl = g.frag_lists[i]
                    for key in one_deletions(f):
                        c2 += len(fl.get(key, ()))
                    costs.append((0, c1[i], c2))
                alloc = (optimal_allocation if selection is Selection.OPTIMAL else greedy_allocation)(costs, target)
                assert alloc.total == target
                vec = alloc.vector
                local.probed += alloc.cost
            for i, v in enumerate(vec):
                if v == 0:
                    continue
                f = frags[i]
                cands.update(g.frag_lists[i].get(f, ()))
                if v == 2:
                    cands.update(g.del_lists[i].get(f, ()))
                    fl = g.frag_lists[i]
                    for key in one_deletions(f):
                        cands.update(fl.get(key, ()))
        return cands

    def min_overlaps(n: int, lo: int, hi: int) -> dict:
        """Partner size -> smallest overlap meeting the threshold."""
        need = {}
        for l in range(lo, hi + 1):
            t = max(0, ceil_guard(_overlap_estimate(fn, d, l, n)) - 1)
            while not meets_overlap(spec, t, l, n):
                t += 1
            need[l] = t
        return need

    def verify(rid: int, ys: frozenset, need: dict) -> bool:
        xs = Rset[rid - 1]
        t = need.get(len(xs))
        return t is not None and len(xs & ys) >= t

    out = []
    if Ss is None:
        for sid in sorted(range(1, len(Rid) + 1), key=lambda i: (len(Rid[i - 1]), i)):
            ids = Rid[sid - 1]
            n = len(ids)
            lo, _ = _size_range(fn, d, n)
            cands = probe(ids, lo, n, stats)
            stats.candidates += len(cands)
            ys = Rset[sid - 1]
            need = min_overlaps(n, lo, n)
            for rid in cands:
                if verify(rid, ys, need):
                    a, b = (rid, sid) if rid < sid else (sid, rid)
                    out.append((a, b, similarity(spec, Rs[a - 1], Rs[b - 1])))
            index(sid)
    else:
        for rid in sorted(range(1, len(Rid) + 1), key=lambda i: (len(Rid[i - 1]), i)):
            index(rid)
        Sid = intern(Ss)

        def work(chunk):
            local = RunStats()
            res = []
            for sid in chunk:
                ids = Sid[sid - 1]
                n = len(ids)
                lo, hi = _size_range(fn, d, n)
                cands = probe(ids, lo, hi, local)
                local.candidates += len(cands)
                ys = frozenset(ids)
                need = min_overlaps(n, lo, hi)
                for rid in cands:
                    if verify(rid, ys, need):
                        res.append((rid, sid, similarity(spec, Rs[rid - 1], Ss[sid - 1])))
            return res, local

        out = run_chunks(work, list(range(1, len(Sid) + 1)), threads, stats)
    out.sort()
    stats.results += len(out)
    return out
