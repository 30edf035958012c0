from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simtol.core import (
    EXCEEDED,
    ParameterError,
    RunStats,
    Sim,
    SimilaritySpec,
    SizeBounds,
    bounded_edit_distance,
    edit_distance,
    is_similar,
    lazy_threshold,
    overlap_threshold,
    run_chunks,
    similarity,
    token_count_bounds,
)
from simtol.oracle import ed as oracle_ed

X1 = {"x1", "x2", "x5", "x6", "x7", "x10", "x11", "x13", "x14"}
X2 = {"x2", "x4", "x5", "x6", "x9", "x11", "x13", "x14", "x15"}


def test_similarity_values():
    assert similarity(SimilaritySpec.ed(2), "surajit", "surauijt") == 2
    assert similarity(SimilaritySpec.of("eds", "0.5"), "surajit", "surauijt") == Fraction(3, 4)
    assert similarity(SimilaritySpec.of("jac", 1), X1, X1) == 1
    assert similarity(SimilaritySpec.of("jac", "0.5"), X1, X2) == Fraction(1, 2)


def test_similarity_cos_and_dice():
    a, b = ["a", "b", "c", "d"], ["a", "b", "c"]
    assert similarity(SimilaritySpec.of("dice", "0.5"), a, b) == Fraction(6, 7)
    assert similarity(SimilaritySpec.of("cos", "0.5"), a, b) == pytest.approx(3 / 12 ** 0.5)


def test_similarity_rejects_empty_records():
    with pytest.raises(ParameterError):
        similarity(SimilaritySpec.of("eds", "0.8"), "", "abc")
    with pytest.raises(ParameterError):
        similarity(SimilaritySpec.of("jac", "0.8"), [], ["a"])


@pytest.mark.parametrize(
    "name, threshold",
    [("ed", -1), ("ed", 1.5), ("jac", 0), ("jac", "1.2"), ("cos", "-0.1"), ("dice", "abc")],
)
def test_spec_domain(name, threshold):
    with pytest.raises(ParameterError):
        SimilaritySpec.of(name, threshold)


def test_spec_unknown_function_and_q():
    with pytest.raises(ParameterError):
        SimilaritySpec.of("hamming", 1)
    with pytest.raises(ParameterError):
        SimilaritySpec.of("ed", 1, q=0)


def test_spec_threshold_is_exact():
    spec = SimilaritySpec.of("jac", 0.73)
    assert spec.threshold == Fraction(73, 100)
    assert SimilaritySpec.of("ed", 2.0).tau == 2


def test_overlap_threshold():
    assert overlap_threshold(SimilaritySpec.ed(2, 2), 9, 10) == 6
    for k in range(1, 12):
        assert overlap_threshold(SimilaritySpec.of("jac", 1), k, k) == k
    assert overlap_threshold(SimilaritySpec.of("dice", "0.8"), 8, 9) == 7


def test_token_count_bounds():
    assert token_count_bounds(SimilaritySpec.of("eds", "0.8", 2), 9) == SizeBounds(7, 11)
    assert token_count_bounds(SimilaritySpec.ed(2, 2), 8) == SizeBounds(6, 10)
    for k in range(1, 12):
        assert token_count_bounds(SimilaritySpec.of("jac", 1), k) == SizeBounds(k, k)


def test_lazy_threshold():
    assert lazy_threshold(SimilaritySpec.ed(2, 2), 8) == 4
    assert lazy_threshold(SimilaritySpec.ed(1, 2), 9) == 7
    for k in range(1, 12):
        assert lazy_threshold(SimilaritySpec.of("jac", 1), k) == k


@pytest.mark.parametrize("name", ["jac", "cos", "dice"])
@given(e=st.integers(1, 40), s=st.integers(1, 40), inter=st.integers(0, 40), d=st.sampled_from(["0.5", "0.73", "0.8", "0.9", "1"]))
@settings(max_examples=300, deadline=None)
def test_set_bounds_are_sound(name, e, s, inter, d):
    """Any overlap/size combination meeting the threshold respects T, the
    size window and the lazy bound."""
    inter = min(inter, e, s)
    spec = SimilaritySpec.of(name, d)
    a = ["t%d" % k for k in range(e)]
    b = ["t%d" % k for k in range(inter)] + ["u%d" % k for k in range(s - inter)]
    if is_similar(spec, a, b):
        assert inter >= overlap_threshold(spec, e, s)
        assert s in token_count_bounds(spec, e)
        assert inter >= lazy_threshold(spec, e)


@given(a=st.text("abc", max_size=10), b=st.text("abc", max_size=10), bound=st.integers(0, 6))
@settings(max_examples=500, deadline=None)
def test_bounded_edit_distance_matches_full_dp(a, b, bound):
    d = oracle_ed(a, b)
    assert edit_distance(a, b) == d
    got = bounded_edit_distance(a, b, bound)
    assert got == (d if d <= bound else EXCEEDED)


def test_bounded_edit_distance_fixtures():
    assert bounded_edit_distance("kaushuk chadhui", "caushik chakrabar", 3) is EXCEEDED
    assert bounded_edit_distance("vldb", "vldb", 0) == 0
    assert bounded_edit_distance("surajit", "surauijt", 2) == 2
    assert bounded_edit_distance("a", "b", -1) is EXCEEDED


def test_run_stats_merge_and_chunks():
    total = RunStats()

    def work(chunk):
        local = RunStats(candidates=len(chunk), probed=1)
        local.bump("seen", len(chunk))
        return [x * 2 for x in chunk], local

    out = run_chunks(work, list(range(10)), 3, total)
    assert sorted(out) == [x * 2 for x in range(10)]
    assert (total.candidates, total.probed, total.extra["seen"]) == (10, 3, 10)


def test_sim_flags():
    assert Sim.JAC.is_set_sim and not Sim.EDS.is_set_sim
    assert SimilaritySpec.of("eds", "0.8").char_based
    assert not SimilaritySpec.of("cos", "0.8").char_based
