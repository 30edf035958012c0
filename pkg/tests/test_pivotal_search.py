import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simtol.core import EXCEEDED, InputError, ParameterError, RunStats
from simtol.oracle import brute_pivots, brute_search, brute_sed, ed
from simtol.pivotal_search import (
    PivotError,
    PivotMode,
    alignment_filter,
    boundary_grams,
    build_index,
    first_fit_pivots,
    generate_candidates,
    search,
    search_many,
    sed,
    select_pivots,
    substring_ed,
)
from simtol.tokenize import GlobalOrder, PositionalGram as G, ordered_grams, qgrams

from workloads import mutate, string_corpus

RECORDS = ["imyouteca", "ubuntucom", "utubbecou", "youtbecom", "yoytubeca"]
RANKING = "im my te bu un nt uc bb tb oy yt ca om yo ou ut ub co tu be ec".split()
FREQ = dict(zip(RANKING, [1] * 11 + [2, 2] + [3] * 7 + [4]))
ORDER = GlobalOrder.from_ranking(RANKING, FREQ)


def test_select_pivots_fixtures():
    grams = [G("ot", 2), G("om", 8), G("yo", 1), G("ub", 4), G("co", 7)]
    piv = select_pivots(grams, [0, 2, 3, 2, 1], 2, 2)
    assert {g.text for g in piv.grams} == {"ot", "ub", "co"} and piv.weight == 3
    grams = [G("bb", 4), G("ou", 8), G("ut", 1), G("ub", 3), G("co", 7)]
    piv = select_pivots(grams, [1, 3, 3, 3, 3], 2, 2)
    assert piv.weight == 7 and {"ut", "bb"} <= {g.text for g in piv.grams}
    piv = select_pivots(grams, [4, 2, 9, 1, 5], 0, 2)
    assert piv.grams == (G("ub", 3),)
    with pytest.raises(PivotError):
        select_pivots([G("ab", 1), G("bc", 2)], [1, 1], 1, 2)


@given(st.lists(st.tuples(st.integers(1, 20), st.integers(0, 9)), min_size=1, max_size=10), st.integers(0, 3), st.integers(1, 3))
@settings(max_examples=300, deadline=None)
def test_select_pivots_is_minimum(items, tau, q):
    grams = [G(chr(97 + k) * q, p) for k, (p, _) in enumerate(items)]
    weights = [w for _, w in items]
    best = brute_pivots([(g.text, g.pos) for g in grams], weights, tau, q)
    if best is None:
        with pytest.raises(PivotError):
            select_pivots(grams, weights, tau, q)
    else:
        assert select_pivots(grams, weights, tau, q).weight == best
        assert first_fit_pivots(grams, weights, tau, q).weight >= best


def test_boundary_grams_fixture():
    srt = ordered_grams(qgrams("youtbecom", 2), ORDER)
    assert [srt[k].text for k in boundary_grams(srt, 2, 3)] == ["tb", "om", "yo", "be"]


def test_single_level_index():
    idx = build_index(RECORDS, 2, 0, ORDER)
    for rid, r in enumerate(RECORDS, 1):
        least = ordered_grams(qgrams(r, 2), ORDER)[0]
        assert any(e[1] == rid and e[2] == least.pos for e in idx.minus[0][least.text].entries)


@pytest.mark.parametrize("tau", [0, 1, 2, 3])
def test_prefix_levels_cover_the_boundary_prefix(tau):
    idx = build_index(RECORDS, 2, 3, ORDER)
    for rid, r in enumerate(RECORDS, 1):
        srt = ordered_grams(qgrams(r, 2), ORDER)
        ks = boundary_grams(srt, 2, 3)
        if len(ks) <= tau:
            continue
        got = {(t, e[2]) for lvl in range(tau + 1) for t, p in idx.plus[lvl].items() for e in p.entries if e[1] == rid}
        assert got == {(g.text, g.pos) for g in srt[:ks[tau] + 1]}
        assert len(got) <= 2 * tau + 1


def test_worked_fixture_search():
    idx = build_index(RECORDS, 2, 2, ORDER, incremental=False)
    cands, _ = generate_candidates(idx, "yotubecom", 2)
    assert cands == {3, 4, 5}
    assert search(idx, "yotubecom", 2) == [(4, 2)]
    assert brute_search(RECORDS, "yotubecom", 2) == [(4, 2)]
    for mode in PivotMode:
        inc = build_index(RECORDS, 2, 2, ORDER, pivots=mode)
        assert search(inc, "yotubecom", 2, mode) == [(4, 2)]


def test_search_trivial_cases():
    idx = build_index(RECORDS, 2, 3)
    assert search(idx, "ubuntucom", 0) == [(2, 0)]
    short = build_index(["ab", "abc", "b" * 9], 2, 3)
    assert search(short, "zz", 3) == brute_search(["ab", "abc", "b" * 9], "zz", 3)
    with pytest.raises(ParameterError):
        search(idx, "abc", 4)
    with pytest.raises(InputError):
        build_index(["a"], 2, 1)


def test_sed_fixtures():
    assert sed("ot", "yoytu") == 1
    assert sed("om", "beca") == 2
    assert sed("ub", "yoytubeca") == 0
    assert sed("om", "beca", 1) is EXCEEDED


@given(st.text("abc", min_size=1, max_size=4), st.text("abc", max_size=8))
@settings(max_examples=300, deadline=None)
def test_sed_is_best_substring_distance(g, window):
    assert sed(g, window) == brute_sed(g, window)


def test_alignment_filter():
    pivots = [G("ot", 2), G("ub", 4), G("om", 8)]
    assert substring_ed("ot", "yoytubeca", 2, 2, 2) == 1
    assert alignment_filter(pivots, "yoytubeca", 2) is False
    s = "yotubecom"
    assert alignment_filter([g for g in qgrams(s, 2)][::3], s, 0) is True


@given(st.integers(0, 10_000))
@settings(max_examples=200, deadline=None)
def test_alignment_never_prunes_similar_pairs(seed):
    rng = random.Random(seed)
    s = "".join(rng.choices("abcd", k=rng.randint(6, 14)))
    r = mutate(rng, s, rng.randint(0, 3), "abcd")
    tau = rng.randint(0, 3)
    piv = first_fit_pivots(qgrams(s, 2), [0] * (len(s) - 1), min(tau, (len(s) - 1) // 2 - 1), 2)
    if ed(r, s) <= tau:
        assert alignment_filter(piv.grams, r, tau)


@pytest.mark.parametrize("incremental", [True, False])
@pytest.mark.parametrize("mode", list(PivotMode))
@pytest.mark.parametrize("align", [True, False])
def test_small_random_search(incremental, mode, align):
    data = string_corpus(3, 300, 4, 16)
    rng = random.Random(8)
    queries = [mutate(rng, rng.choice(data), rng.randint(0, 3)) for _ in range(40)]
    idx = build_index(data, 2, 3, pivots=mode, incremental=incremental)
    for tau in range(4):
        got = search_many(idx, queries, tau, mode, align, threads=2)
        want = [(qi, rid, d) for qi, s in enumerate(queries, 1) for rid, d in brute_search(data, s, tau)]
        assert got == want


def test_counters():
    data = string_corpus(5, 200, 6, 14)
    idx = build_index(data, 2, 2)
    stats = RunStats()
    out = search_many(idx, data[:20], 2, stats=stats)
    assert len(out) == stats.results <= stats.candidates <= stats.probed
