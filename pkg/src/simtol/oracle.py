"""Brute-force reference answers.

Everything here follows the definitions directly: full edit-distance
matrices, exact overlaps, exhaustive enumeration.  Nothing is shared with
the filtering engines beyond the basic types, so agreement between the
two is meaningful.  Exhaustive routines refuse instances above a size cap
instead of running for hours.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import ParameterError, Sim, SimilaritySpec

__all__ = [
    "OracleSizeError",
    "ed",
    "ed_many",
    "brute_join_ed",
    "brute_join_eds",
    "brute_join_set",
    "brute_search",
    "brute_extract",
    "brute_allocation",
    "brute_allocation_batch",
    "brute_pivots",
    "brute_sed",
]

MAX_SLOTS = 12
MAX_PREFIX = 13


class OracleSizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


# --------------------------------------------------------------------------
# edit distance


def ed(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _codes(strings: Sequence[str], width: int) -> np.ndarray:
    out = np.full((len(strings), width), -1, dtype=np.int64)
    for k, s in enumerate(strings):
        if s:
            out[k, :len(s)] = [ord(c) for c in s]
    return out


def _last_rows(x: str, ys: Sequence[str]) -> np.ndarray:
    """Final DP row of ``x`` against every ``y``: entry ``[k, j]`` is
    ``ED(x, ys[k][:j])``."""
    width = max((len(y) for y in ys), default=0)
    Y = _codes(ys, width)
    ramp = np.arange(width + 1, dtype=np.int64)
    prev = np.broadcast_to(ramp, (len(ys), width + 1)).copy()
    for i, c in enumerate(x, 1):
        t = np.empty_like(prev)
        t[:, 0] = i
        t[:, 1:] = np.minimum(prev[:, :-1] + (Y != ord(c)), prev[:, 1:] + 1)
        prev = np.minimum.accumulate(t - ramp, axis=1) + ramp
    return prev


def ed_many(x: str, ys: Sequence[str]) -> np.ndarray:
    """``ED(x, y)`` for every ``y`` in ``ys``."""
    if not ys:
        return np.zeros(0, dtype=np.int64)
    rows = _last_rows(x, ys)
    return rows[np.arange(len(ys)), [len(y) for y in ys]]


# --------------------------------------------------------------------------
# joins and search


def brute_join_ed(R: Sequence[str], S: Sequence[str] | None = None, tau: int = 1) -> list[tuple[int, int, int]]:
    """Pairs within edit distance ``tau``; ``i < j`` for a self join."""
    out = []
    if S is None:
        for i in range(len(R)):
            d = ed_many(R[i], R[i + 1:])
            out += [(i + 1, i + 2 + k, int(v)) for k, v in enumerate(d) if v <= tau]
    else:
        for i, r in enumerate(R, 1):
            d = ed_many(r, S)
            out += [(i, k + 1, int(v)) for k, v in enumerate(d) if v <= tau]
    return sorted(out)


def brute_join_eds(R: Sequence[str], delta) -> list[tuple[int, int, Fraction]]:
    """Self-join pairs with ``1 - ED / max length >= delta``."""
    delta = Fraction(str(delta))
    out = []
    for i in range(len(R)):
        rest = R[i + 1:]
        for k, v in enumerate(ed_many(R[i], rest)):
            longer = max(len(R[i]), len(rest[k]))
            if longer == 0:
                continue
            sim = 1 - Fraction(int(v), longer)
            if sim >= delta:
                out.append((i + 1, i + 2 + k, sim))
    return sorted(out)


def brute_search(R: Sequence[str], s: str, tau: int) -> list[tuple[int, int]]:
    return [(k + 1, int(v)) for k, v in enumerate(ed_many(s, R)) if v <= tau]


def _as_sets(X) -> list[frozenset]:
    return [frozenset(x.split() if isinstance(x, str) else x) for x in X]


def _set_value(fn: Sim, inter: int, a: int, b: int):
    if fn is Sim.JAC:
        return Fraction(inter, a + b - inter)
    if fn is Sim.DICE:
        return Fraction(2 * inter, a + b)
    return inter / math.sqrt(a * b)


def _passes(fn: Sim, p: int, q: int, inter, a, b):
    """``sim >= p/q`` in integer arithmetic (works elementwise on arrays)."""
    if fn is Sim.JAC:
        return q * inter >= p * (a + b - inter)
    if fn is Sim.DICE:
        return 2 * q * inter >= p * (a + b)
    return q * q * inter * inter >= p * p * a * b


def brute_join_set(R, S=None, sim: Sim | str = Sim.JAC, delta=0.8) -> list[tuple[int, int, object]]:
    """Set-similarity join by a full overlap matrix."""
    fn = sim if isinstance(sim, Sim) else Sim[str(sim).upper()]
    if not fn.is_set_sim:
        raise ParameterError(f"{fn.name} is not a set similarity")
    d = Fraction(str(delta))
    A = _as_sets(R)
    B = A if S is None else _as_sets(S)
    universe = {e: k for k, e in enumerate(sorted({e for x in A + B for e in x}, key=repr))}

    def incidence(sets):
        M = np.zeros((len(sets), len(universe)), dtype=np.int64)
        for k, x in enumerate(sets):
            M[k, [universe[e] for e in x]] = 1
        return M

    MA = incidence(A)
    MB = MA if S is None else incidence(B)
    inter = MA @ MB.T
    sa = MA.sum(axis=1)[:, None]
    sb = MB.sum(axis=1)[None, :]
    ok = _passes(fn, d.numerator, d.denominator, inter, sa, sb) & (sa > 0) & (sb > 0)
    if S is None:
        ok = np.triu(ok, k=1)
    out = []
    for i, j in zip(*np.nonzero(ok)):
        out.append((int(i) + 1, int(j) + 1, _set_value(fn, int(inter[i, j]), len(A[i]), len(B[j]))))
    return sorted(out)


# --------------------------------------------------------------------------
# extraction


def brute_extract(dictionary: Sequence[str], document: str, spec: SimilaritySpec) -> list[tuple[int, int, int, object]]:
    """``(entity, start, end, value)`` for every substring similar to an
    entity.  Character offsets for ED/EDS (substrings of at least ``q``
    characters), token offsets for the set functions."""
    fn = spec.function
    out = []
    if fn is Sim.ED or fn is Sim.EDS:
        n, q = len(document), spec.q
        starts = list(range(n))
        for eid, e in enumerate(dictionary, 1):
            if fn is Sim.ED:
                slack = spec.tau
            else:
                slack = math.floor(len(e) * (1 / spec.threshold - 1)) + 1
            width = len(e) + slack
            rows = _last_rows(e, [document[a:a + width] for a in starts])
            if not starts:
                continue
            # cell [a, j] is the substring of length j starting at a
            A, J = np.indices(rows.shape)
            valid = (J >= q) & (J <= n - A)
            if fn is Sim.ED:
                hits = np.nonzero(valid & (rows <= spec.tau))
                out += [(eid, int(a) + 1, int(a + j), int(rows[a, j])) for a, j in zip(*hits)]
            else:
                # 1 - d / max(j, |e|) >= delta  <=>  d <= (1 - delta) * max(j, |e|)
                d = spec.threshold
                longer = np.maximum(J, len(e))
                ok = valid & (rows * d.denominator <= (d.denominator - d.numerator) * longer)
                for a, j in zip(*np.nonzero(ok)):
                    out.append((eid, int(a) + 1, int(a + j), 1 - Fraction(int(rows[a, j]), max(int(j), len(e)))))
        return sorted(out)
    toks = document.split()
    d = spec.threshold
    for eid, e in enumerate(dictionary, 1):
        bag = Counter(e.split())
        m = sum(bag.values())
        for a in range(len(toks)):
            window: Counter = Counter()
            for b in range(a, len(toks)):
                window[toks[b]] += 1
                l = b - a + 1
                inter = sum((window & bag).values())
                if _passes(fn, d.numerator, d.denominator, inter, m, l):
                    out.append((eid, a + 1, b + 1, _set_value(fn, inter, m, l)))
                # longer windows fail even with the whole entity inside
                if l >= m and not _passes(fn, d.numerator, d.denominator, m, m, l):
                    break
    return sorted(out)


# --------------------------------------------------------------------------
# exhaustive small instances


def _vectors(m: int, target: int) -> np.ndarray:
    """Every vector in {0,1,2}^m with the given sum, one per row."""
    key = (m, target)
    table = _VECTORS.get(key)
    if table is None:
        allv = np.array(list(itertools.product(range(3), repeat=m)), dtype=np.int64).reshape(-1, m)
        table = allv[allv.sum(axis=1) == target]
        _VECTORS[key] = table
    return table


_VECTORS: dict = {}


def brute_allocation(costs: Sequence[Sequence[int]], target: int) -> int | None:
    """Minimum total cost over all 0/1/2 vectors summing to ``target``,
    or ``None`` when no vector does."""
    return brute_allocation_batch([costs], target)[0]


def brute_allocation_batch(batch: Sequence[Sequence[Sequence[int]]], target: int) -> list[int | None]:
    """:func:`brute_allocation` for many instances with the same slot
    count and target."""
    if not batch:
        return []
    m = len(batch[0])
    if m > MAX_SLOTS:
        raise OracleSizeError(f"{m} slots exceed the cap of {MAX_SLOTS}")
    V = _vectors(m, target)
    if len(V) == 0:
        return [None] * len(batch)
    C = np.asarray(batch, dtype=np.int64).reshape(len(batch), m, 3)
    total = np.zeros((len(batch), len(V)), dtype=np.int64)
    for i in range(m):
        total += C[:, i, :][:, V[:, i]]
    return [int(x) for x in total.min(axis=1)]


def brute_pivots(grams: Sequence[tuple[str, int]], weights: Sequence[int], tau: int, q: int) -> int | None:
    """Minimum weight of ``tau + 1`` pairwise disjoint grams, or ``None``."""
    if len(grams) > MAX_PREFIX:
        raise OracleSizeError(f"{len(grams)} grams exceed the cap of {MAX_PREFIX}")
    best = None
    for combo in itertools.combinations(range(len(grams)), tau + 1):
        pos = sorted(grams[k][1] for k in combo)
        if all(b - a >= q for a, b in zip(pos, pos[1:])):
            w = sum(weights[k] for k in combo)
            if best is None or w < best:
                best = w
    return best


def brute_sed(g: str, window: str) -> int:
    """Smallest edit distance between ``g`` and any substring of ``window``."""
    return min(ed(g, window[i:j]) for i in range(len(window) + 1) for j in range(i, len(window) + 1))

