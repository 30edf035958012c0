"""Partition-based similarity joins under edit distance.

Indexed strings are cut into ``tau + 1`` near-equal segments.  A probe
string is similar to an indexed string only if one of those segments occurs
verbatim in the probe near the segment's own position, so the probe looks
up a few selected substrings per segment slot.  Matches are verified by
extending to the left and to the right of the shared segment with tight
per-side bounds.

Record ids are 1-based positions in the input sequences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import (
    EXCEEDED,
    InputError,
    ParameterError,
    RunStats,
    _as_fraction,
    bounded_edit_distance,
    eds_budget,
    run_chunks,
)

__all__ = [
    "REJECT",
    "Strategy",
    "Segment",
    "ShortRecord",
    "partition_even",
    "segment_layout",
    "selection_range",
    "select_substrings",
    "extension_verify",
    "join_ed",
    "join_eds",
]

REJECT = EXCEEDED


class ShortRecord(InputError):
    """The record has too few characters to be cut into ``tau + 1`` segments."""


class Strategy(enum.Enum):
    LENGTH = "length"
    SHIFT = "shift"
    POSITION = "position"
    MULTIMATCH = "multimatch"


class Segment(NamedTuple):
    start: int  # 1-based
    length: int
    text: str


def segment_layout(length: int, tau: int) -> list[tuple[int, int]]:
    """(start, length) of the even partition of any string of ``length``."""
    m = tau + 1
    if length < m:
        raise ShortRecord(f"length {length} cannot be split into {m} segments")
    base = length // m
    k = length - base * m
    out, p = [], 1
    for i in range(m):
        ln = base if i < m - k else base + 1
        out.append((p, ln))
        p += ln
    return out


def partition_even(s: str, tau: int) -> list[Segment]:
    if tau < 0:
        raise ParameterError("tau must be non-negative")
    return [Segment(p, ln, s[p - 1:p - 1 + ln]) for p, ln in segment_layout(len(s), tau)]


def selection_range(n: int, l: int, tau: int, slot: int, p: int, seg_len: int, strategy: Strategy) -> tuple[int, int]:
    """Inclusive 1-based start range in a probe of length ``n`` for slot
    ``slot`` (1-based) of an indexed string of length ``l``."""
    last = n - seg_len + 1
    delta = n - l
    if strategy is Strategy.LENGTH:
        lo, hi = 1, last
    elif strategy is Strategy.SHIFT:
        lo, hi = p - tau, p + tau
    elif strategy is Strategy.POSITION:
        lo, hi = p - (tau - delta) // 2, p + (tau + delta) // 2
    else:
        left = slot - 1
        right = tau + 1 - slot
        lo = max(p - left, p + delta - right)
        hi = min(p + left, p + delta + right)
    return max(1, lo), min(last, hi)


def select_substrings(s: str, l: int, tau: int, strategy: Strategy | str = Strategy.MULTIMATCH) -> list[list[tuple[int, str]]]:
    """Per slot, the (start, substring) pairs of ``s`` to look up in the
    segment index of strings of length ``l``."""
    strategy = Strategy(strategy)
    if abs(len(s) - l) > tau:
        raise ParameterError(f"length {l} is outside [{len(s) - tau}, {len(s) + tau}]")
    out = []
    for slot, (p, ln) in enumerate(segment_layout(l, tau), 1):
        lo, hi = selection_range(len(s), l, tau, slot, p, ln, strategy)
        out.append([(x, s[x - 1:x - 1 + ln]) for x in range(lo, hi + 1)])
    return out


def _side_bounds(r: str, s: str, slot: int, p: int, seg_len: int, pos: int, tau: int) -> int:
    right_gap = abs((len(r) - p - seg_len + 1) - (len(s) - pos - seg_len + 1))
    return min(tau - right_gap, slot - 1)


def extension_verify(r: str, s: str, slot: int, pos: int, tau: int):
    """Verify a segment match: segment ``slot`` of ``r`` equals ``s`` at
    ``pos``.  Returns left + right distance or :data:`REJECT`.

    The value is at least ED(r, s); the minimum over all matching
    (slot, pos) pairs of a similar pair equals ED(r, s).
    """
    p, ln = segment_layout(len(r), tau)[slot - 1]
    return _extend(r, s, slot, p, ln, pos, tau, None)


def _extend(r: str, s: str, slot: int, p: int, ln: int, pos: int, tau: int, left_dp):
    t_left = _side_bounds(r, s, slot, p, ln, pos, tau)
    if t_left < 0:
        return REJECT
    if left_dp is None:
        d_left = bounded_edit_distance(r[:p - 1], s[:pos - 1], t_left)
    else:
        d_left = left_dp.run(r[:p - 1])
    if d_left is EXCEEDED:
        return REJECT
    t_right = min(tau + 1 - slot, tau - d_left)
    d_right = bounded_edit_distance(r[p - 1 + ln:], s[pos - 1 + ln:], t_right)
    if d_right is EXCEEDED:
        return REJECT
    return d_left + d_right


class _SharedLeft:
    """Bounded ED of many equal-length left parts against one fixed
    string, reusing DP rows across common prefixes of consecutive inputs."""

    def __init__(self, y: str, n_x: int, bound: int) -> None:
        self.y = y
        self.bound = bound
        m = len(y)
        delta = m - n_x
        self.ok = abs(delta) <= bound
        self.lo = (bound - delta) // 2
        self.hi = (bound + delta) // 2
        self.n_x = n_x
        big = bound + 1
        row = [big] * (m + 1)
        for j in range(min(m, self.hi) + 1):
            row[j] = j
        self.rows = [row]
        self.prev = ""
        self.dead: int | None = None
        self.reused = 0

    def run(self, x: str):
        if not self.ok:
            return EXCEEDED
        k = 0
        prev = self.prev
        lim = min(len(prev), len(x), len(self.rows) - 1)
        while k < lim and prev[k] == x[k]:
            k += 1
        self.prev = x
        if self.dead is not None and self.dead <= k:
            self.reused += k
            return EXCEEDED
        self.dead = None
        del self.rows[k + 1:]
        self.reused += k
        y, m, n, bound = self.y, len(self.y), self.n_x, self.bound
        big = bound + 1
        prevrow = self.rows[k]
        for i in range(k + 1, n + 1):
            ca = x[i - 1]
            jlo = max(0, i - self.lo)
            jhi = min(m, i + self.hi)
            cur = [big] * (m + 1)
            if jlo == 0:
                cur[0] = min(i, big)
                jlo = 1
            best = big
            rest = n - i
            for j in range(jlo, jhi + 1):
                v = prevrow[j - 1] + (ca != y[j - 1])
                t = prevrow[j] + 1
                if t < v:
                    v = t
                t = cur[j - 1] + 1
                if t < v:
                    v = t
                if v > big:
                    v = big
                cur[j] = v
                e = v + abs((m - j) - rest)
                if e < best:
                    best = e
            if cur[0] < big:
                e = cur[0] + abs(m - rest)
                if e < best:
                    best = e
            self.rows.append(cur)
            if best > bound:
                self.dead = i
                return EXCEEDED
            prevrow = cur
        d = prevrow[m]
        return d if d <= bound else EXCEEDED


# --------------------------------------------------------------------------
# segment index


@dataclass
class _SegmentIndex:
    """lists[(length, slot)][segment text] -> ids in insertion order."""

    lists: dict
    strings: Sequence[str]

    def add(self, rid: int, tau: int) -> None:
        s = self.strings[rid - 1]
        for slot, seg in enumerate(partition_even(s, tau), 1):
            self.lists.setdefault((len(s), slot), {}).setdefault(seg.text, []).append(rid)

    def drop_below(self, length: int) -> None:
        for key in [k for k in self.lists if k[0] < length]:
            del self.lists[key]


def _probe(
    s: str,
    lengths,
    tau_of,
    index: _SegmentIndex,
    strategy: Strategy,
    shared_prefix: bool,
    stats: RunStats,
    skip=None,
) -> dict[int, int]:
    """Ids in the index similar to ``s`` mapped to their distance."""
    found: dict[int, int] = {}
    strings = index.strings
    for l in lengths:
        tau = tau_of(l)
        if l <= tau:
            continue
        layout = segment_layout(l, tau)
        for slot, (p, ln) in enumerate(layout, 1):
            bucket = index.lists.get((l, slot))
            if not bucket:
                continue
            lo, hi = selection_range(len(s), l, tau, slot, p, ln, strategy)
            for pos in range(lo, hi + 1):
                ids = bucket.get(s[pos - 1:pos - 1 + ln])
                if not ids:
                    continue
                stats.probed += len(ids)
                left = None
                if shared_prefix:
                    right_gap = abs((l - p - ln + 1) - (len(s) - pos - ln + 1))
                    left = _SharedLeft(s[:pos - 1], p - 1, min(tau - right_gap, slot - 1))
                for rid in ids:
                    if rid in found or (skip is not None and skip(rid)):
                        continue
                    stats.candidates += 1
                    d = _extend(strings[rid - 1], s, slot, p, ln, pos, tau, left)
                    if d is not REJECT:
                        found[rid] = bounded_edit_distance(strings[rid - 1], s, d)
                if left is not None:
                    stats.bump("prefix_chars_reused", left.reused)
    return found


def _check_tau(tau: int) -> None:
    if isinstance(tau, bool) or not isinstance(tau, int) or tau < 0:
        raise ParameterError(f"tau must be a non-negative integer, got {tau!r}")


def join_ed(
    R: Sequence[str],
    S: Sequence[str] | None = None,
    tau: int = 1,
    strategy: Strategy | str = Strategy.MULTIMATCH,
    shared_prefix: bool = True,
    stats: RunStats | None = None,
    threads: int = 1,
) -> list[tuple[int, int, int]]:
    """All pairs within edit distance ``tau``, sorted by id.

    Without ``S`` this is a self-join returning each unordered pair once as
    ``(smaller id, larger id, ED)``.  With ``S`` the result holds
    ``(id in R, id in S, ED)``.
    """
    _check_tau(tau)
    strategy = Strategy(strategy)
    stats = stats if stats is not None else RunStats()
    if S is None:
        out = _self_join_ed(list(R), tau, strategy, shared_prefix, stats)
    else:
        out = _rs_join_ed(list(R), list(S), tau, strategy, shared_prefix, stats, threads)
    out.sort()
    stats.results += len(out)
    return out


def _self_join_ed(R, tau, strategy, shared_prefix, stats):
    order = sorted(range(1, len(R) + 1), key=lambda i: (len(R[i - 1]), R[i - 1], i))
    index = _SegmentIndex({}, R)
    short: list[int] = []
    out = []
    peak = 0
    for sid in order:
        s = R[sid - 1]
        n = len(s)
        index.drop_below(n - tau)
        peak = max(peak, len({k[0] for k in index.lists}))
        found = _probe(s, range(max(0, n - tau), n + 1), lambda _l: tau, index, strategy, shared_prefix, stats)
        for rid in short:
            if len(R[rid - 1]) >= n - tau:
                stats.candidates += 1
                d = bounded_edit_distance(R[rid - 1], s, tau)
                if d is not EXCEEDED:
                    found[rid] = d
        for rid, d in found.items():
            a, b = (rid, sid) if rid < sid else (sid, rid)
            out.append((a, b, d))
        if n <= tau:
            short.append(sid)
        else:
            index.add(sid, tau)
    stats.bump("peak_indexed_lengths", peak)
    return out


def _rs_join_ed(R, S, tau, strategy, shared_prefix, stats, threads):
    index = _SegmentIndex({}, R)
    short = []
    for rid in sorted(range(1, len(R) + 1), key=lambda i: (len(R[i - 1]), R[i - 1], i)):
        if len(R[rid - 1]) <= tau:
            short.append(rid)
        else:
            index.add(rid, tau)

    def work(chunk):
        local = RunStats()
        res = []
        for sid in chunk:
            s = S[sid - 1]
            n = len(s)
            found = _probe(s, range(max(0, n - tau), n + tau + 1), lambda _l: tau, index, strategy, shared_prefix, local)
            for rid in short:
                if abs(len(R[rid - 1]) - n) <= tau:
                    local.candidates += 1
                    d = bounded_edit_distance(R[rid - 1], s, tau)
                    if d is not EXCEEDED:
                        found[rid] = d
            res.extend((rid, sid, d) for rid, d in found.items())
        return res, local

    return run_chunks(work, list(range(1, len(S) + 1)), threads, stats)


def join_eds(
    R: Sequence[str],
    delta,
    strategy: Strategy | str = Strategy.MULTIMATCH,
    shared_prefix: bool = True,
    stats: RunStats | None = None,
) -> list[tuple[int, int, Fraction]]:
    """Self-join under normalised edit similarity ``1 - ED/max(len)``.

    Returns ``(smaller id, larger id, similarity)`` for every pair with
    similarity at least ``delta``, sorted by id.
    """
    try:
        d = _as_fraction(delta)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"bad threshold {delta!r}") from exc
    if not (0 < d <= 1):
        raise ParameterError(f"threshold must lie in (0, 1], got {delta!r}")
    strategy = Strategy(strategy)
    stats = stats if stats is not None else RunStats()
    R = list(R)
    for i, s in enumerate(R, 1):
        if not s:
            raise InputError(f"record {i}: empty string has no normalised edit similarity")
    order = sorted(range(1, len(R) + 1), key=lambda i: (-len(R[i - 1]), R[i - 1], i))
    index = _SegmentIndex({}, R)
    short: list[int] = []
    out = []

    def tau_of(l: int) -> int:
        return eds_budget(d, l)

    for sid in order:
        s = R[sid - 1]
        n = len(s)
        top = int(n / d)  # exact: Fraction division
        index.lists = {k: v for k, v in index.lists.items() if k[0] <= top}
        found = _probe(s, range(n, top + 1), tau_of, index, strategy, shared_prefix, stats)
        for rid in short:
            if len(R[rid - 1]) <= top:
                stats.candidates += 1
                dist = bounded_edit_distance(R[rid - 1], s, tau_of(len(R[rid - 1])))
                if dist is not EXCEEDED:
                    found[rid] = dist
        for rid, dist in found.items():
            a, b = (rid, sid) if rid < sid else (sid, rid)
            out.append((a, b, 1 - Fraction(dist, max(n, len(R[rid - 1])))))
        if n <= tau_of(n):
            short.append(sid)
        else:
            index.add(sid, tau_of(n))
    out.sort()
    stats.results += len(out)
    return out
