"""Similarity definitions, threshold arithmetic and bounded edit distance.

Every engine in the package is parameterised by a :class:`SimilaritySpec`.
Thresholds for the fractional functions are kept as exact ``Fraction``
values so that the final accept/reject decision never depends on floating
point.  The filtering bounds are computed in double precision with a small
guard that always widens the admissible range.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence, Union

__all__ = [
    "EXCEEDED",
    "Sim",
    "SimilaritySpec",
    "SizeBounds",
    "RunStats",
    "run_chunks",
    "ParameterError",
    "InputError",
    "similarity",
    "is_similar",
    "overlap_threshold",
    "token_count_bounds",
    "lazy_threshold",
    "edit_distance",
    "bounded_edit_distance",
    "ceil_guard",
    "floor_guard",
]

EPS = 1e-9


class ParameterError(ValueError):
    """A parameter lies outside its documented domain."""


class InputError(ValueError):
    """A record cannot be processed (too short, malformed, ...)."""


class _Exceeded:
    __slots__ = ()

    def __repr__(self) -> str:
        return "EXCEEDED"

    def __reduce__(self):
        return "EXCEEDED"


EXCEEDED = _Exceeded()


class Sim(enum.Enum):
    JAC = "jac"
    COS = "cos"
    DICE = "dice"
    ED = "ed"
    EDS = "eds"

    @property
    def is_set_sim(self) -> bool:
        return self in (Sim.JAC, Sim.COS, Sim.DICE)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


@dataclass(frozen=True)
class SimilaritySpec:
    """Similarity function plus threshold and gram length.

    ``threshold`` is an integer ``tau`` for ED and a rational ``delta`` in
    (0, 1] for the other functions.
    """

    function: Sim
    threshold: Union[int, Fraction]
    q: int = 2

    def __post_init__(self) -> None:
        fn = self.function
        if not isinstance(fn, Sim):
            object.__setattr__(self, "function", fn := Sim(str(fn).lower()))
        if not isinstance(self.q, int) or self.q < 1:
            raise ParameterError(f"gram length q must be a positive integer, got {self.q!r}")
        if fn is Sim.ED:
            t = self.threshold
            if isinstance(t, Fraction) and t.denominator == 1:
                t = int(t)
            if isinstance(t, float) and t.is_integer():
                t = int(t)
            if not isinstance(t, int) or isinstance(t, bool) or t < 0:
                raise ParameterError(f"edit distance threshold must be a non-negative integer, got {self.threshold!r}")
            object.__setattr__(self, "threshold", t)
        else:
            try:
                d = _as_fraction(self.threshold)
            except (ValueError, ZeroDivisionError) as exc:
                raise ParameterError(f"bad threshold {self.threshold!r}") from exc
            if not (0 < d <= 1):
                raise ParameterError(f"threshold must lie in (0, 1], got {self.threshold!r}")
            object.__setattr__(self, "threshold", d)

    @classmethod
    def ed(cls, tau: int, q: int = 2) -> "SimilaritySpec":
        return cls(Sim.ED, tau, q)

    @classmethod
    def of(cls, name: str, threshold, q: int = 2) -> "SimilaritySpec":
        try:
            fn = Sim(name.lower())
        except ValueError as exc:
            raise ParameterError(f"unknown similarity function {name!r}") from exc
        return cls(fn, threshold, q)

    @property
    def tau(self) -> int:
        if self.function is not Sim.ED:
            raise AttributeError("tau is only defined for ED")
        return self.threshold  # type: ignore[return-value]

    @property
    def delta(self) -> float:
        if self.function is Sim.ED:
            raise AttributeError("delta is undefined for ED")
        return float(self.threshold)

    @property
    def char_based(self) -> bool:
        return self.function in (Sim.ED, Sim.EDS)


@dataclass(frozen=True)
class SizeBounds:
    lower: int
    upper: int

    def __contains__(self, n: int) -> bool:
        return self.lower <= n <= self.upper

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


@dataclass
class RunStats:
    """Counters shared by all engines; merged across workers by ``+=``."""

    candidates: int = 0
    probed: int = 0
    results: int = 0
    extra: dict = field(default_factory=dict)

    def __iadd__(self, other: "RunStats") -> "RunStats":
        self.candidates += other.candidates
        self.probed += other.probed
        self.results += other.results
        for k, v in other.extra.items():
            self.extra[k] = self.extra.get(k, 0) + v
        return self

    def bump(self, key: str, n: int = 1) -> None:
        self.extra[key] = self.extra.get(key, 0) + n


def run_chunks(work, ids: list, threads: int, stats: RunStats) -> list:
    """Apply ``work`` to ``threads`` interleaved chunks of ``ids``.

    ``work(chunk)`` returns ``(results, RunStats)``; results are
    concatenated in chunk order and the counters merged into ``stats``.
    """
    threads = max(1, int(threads))
    if threads == 1:
        parts = [work(ids)]
    else:
        chunks = [ids[k::threads] for k in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    out: list = []
    for res, local in parts:
        out.extend(res)
        stats += local
    return out


def ceil_guard(x: float) -> int:
    return math.ceil(x - EPS)


def floor_guard(x: float) -> int:
    return math.floor(x + EPS)


# --------------------------------------------------------------------------
# exact similarity


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Plain Levenshtein distance with a two-row table."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _overlap(a: Iterable[Hashable], b: Iterable[Hashable]) -> tuple[int, int, int]:
    ca, cb = Counter(a), Counter(b)
    if len(ca) > len(cb):
        ca, cb = cb, ca
    inter = sum(min(n, cb[t]) for t, n in ca.items() if t in cb)
    return inter, sum(ca.values()), sum(cb.values())


def similarity(spec: SimilaritySpec, a, b):
    """Similarity of two records.

    ED returns the distance; EDS, JAC and DICE return a ``Fraction``;
    COS returns a float because the value is generally irrational.
    Token collections are compared as multisets.
    """
    fn = spec.function
    if fn is Sim.ED:
        return edit_distance(a, b)
    if fn is Sim.EDS:
        if not a or not b:
            raise ParameterError("EDS is undefined for empty strings")
        return 1 - Fraction(edit_distance(a, b), max(len(a), len(b)))
    inter, na, nb = _overlap(a, b)
    if na == 0 or nb == 0:
        raise ParameterError(f"{fn.name} is undefined for empty records")
    if fn is Sim.JAC:
        return Fraction(inter, na + nb - inter)
    if fn is Sim.DICE:
        return Fraction(2 * inter, na + nb)
    return inter / math.sqrt(na * nb)


def meets_overlap(spec: SimilaritySpec, inter: int, na: int, nb: int) -> bool:
    """Exact threshold test for the set functions given overlap and sizes."""
    p, q = spec.threshold.numerator, spec.threshold.denominator
    fn = spec.function
    if fn is Sim.JAC:
        return q * inter >= p * (na + nb - inter)
    if fn is Sim.DICE:
        return 2 * q * inter >= p * (na + nb)
    if fn is Sim.COS:
        return q * q * inter * inter >= p * p * na * nb
    raise ParameterError(f"{fn.name} is not a set similarity")


def eds_budget(delta: Fraction, longer: int) -> int:
    """Largest ED with ``1 - ED/longer >= delta``."""
    return math.floor((1 - delta) * longer)


def is_similar(spec: SimilaritySpec, a, b) -> bool:
    fn = spec.function
    if fn is Sim.ED:
        return bounded_edit_distance(a, b, spec.tau) is not EXCEEDED
    if fn is Sim.EDS:
        if not a or not b:
            return False
        budget = eds_budget(spec.threshold, max(len(a), len(b)))
        return bounded_edit_distance(a, b, budget) is not EXCEEDED
    inter, na, nb = _overlap(a, b)
    if na == 0 or nb == 0:
        return False
    return meets_overlap(spec, inter, na, nb)


# --------------------------------------------------------------------------
# filtering bounds


def overlap_threshold(spec: SimilaritySpec, e_tokens: int, s_tokens: int) -> int:
    """Minimum token overlap T between an entity and a similar substring."""
    fn, q = spec.function, spec.q
    if fn is Sim.ED:
        return max(e_tokens, s_tokens) - spec.tau * q
    d = spec.delta
    if fn is Sim.JAC:
        return ceil_guard((e_tokens + s_tokens) * d / (1 + d))
    if fn is Sim.COS:
        return ceil_guard(math.sqrt(e_tokens * s_tokens) * d)
    if fn is Sim.DICE:
        return ceil_guard((e_tokens + s_tokens) * d / 2)
    big = max(e_tokens, s_tokens)
    return ceil_guard(big - (big + q - 1) * (1 - d) * q)


def token_count_bounds(spec: SimilaritySpec, e_tokens: int) -> SizeBounds:
    """Token-count window [lower, upper] of substrings similar to an entity."""
    fn, q, e = spec.function, spec.q, e_tokens
    if fn is Sim.ED:
        lo, hi = e - spec.tau, e + spec.tau
    else:
        d = spec.delta
        if fn is Sim.JAC:
            lo, hi = ceil_guard(e * d), floor_guard(e / d)
        elif fn is Sim.COS:
            lo, hi = ceil_guard(e * d * d), floor_guard(e / (d * d))
        elif fn is Sim.DICE:
            lo, hi = ceil_guard(e * d / (2 - d)), floor_guard(e * (2 - d) / d)
        else:
            lo = ceil_guard((e + q - 1) * d - (q - 1))
            hi = floor_guard((e + q - 1) / d - (q - 1))
    return SizeBounds(max(1, lo), max(1, hi))


def lazy_threshold(spec: SimilaritySpec, e_tokens: int) -> int:
    """Size-independent lower bound T_l on the overlap threshold."""
    fn, q, e = spec.function, spec.q, e_tokens
    if fn is Sim.ED:
        return e - spec.tau * q
    d = spec.delta
    if fn is Sim.JAC:
        return ceil_guard(e * d)
    if fn is Sim.COS:
        return ceil_guard(e * d * d)
    if fn is Sim.DICE:
        return ceil_guard(e * d / (2 - d))
    return ceil_guard(e - (e + q - 1) * (1 - d) * q / d)


# --------------------------------------------------------------------------
# bounded edit distance


def bounded_edit_distance(a: Sequence, b: Sequence, bound: int):
    """ED(a, b) if it is at most ``bound``, otherwise :data:`EXCEEDED`.

    Only the diagonal band that can still lead to a distance within the
    bound is filled, and the scan stops as soon as every cell in a row has
    an expected final distance above the bound.
    """
    if bound < 0:
        return EXCEEDED
    if len(a) > len(b):
        a, b = b, a
    n, m = len(a), len(b)
    delta = m - n
    if delta > bound:
        return EXCEEDED
    if n == 0:
        return m
    lo_off = (bound - delta) // 2
    hi_off = (bound + delta) // 2
    big = bound + 1
    prev = [big] * (m + 1)
    top = min(m, hi_off)
    for j in range(top + 1):
        prev[j] = j
    for i in range(1, n + 1):
        ca = a[i - 1]
        jlo = i - lo_off
        jhi = i + hi_off
        if jhi > m:
            jhi = m
        cur = [big] * (m + 1)
        if jlo <= 0:
            cur[0] = i if i < big else big
            jlo = 1
        best = big
        rest = n - i
        for j in range(jlo, jhi + 1):
            v = prev[j - 1] + (ca != b[j - 1])
            x = prev[j] + 1
            if x < v:
                v = x
            x = cur[j - 1] + 1
            if x < v:
                v = x
            if v > big:
                v = big
            cur[j] = v
            gap = (m - j) - rest
            e = v + (gap if gap >= 0 else -gap)
            if e < best:
                best = e
        if jlo == 1 and cur[0] < big:
            gap = m - rest
            e = cur[0] + (gap if gap >= 0 else -gap)
            if e < best:
                best = e
        if best > bound:
            return EXCEEDED
        prev = cur
    d = prev[m]
    return d if d <= bound else EXCEEDED
