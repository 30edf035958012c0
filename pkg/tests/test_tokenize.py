import math

from hypothesis import given
from hypothesis import strategies as st

from simtol.tokenize import GlobalOrder, PositionalGram, build_global_order, ordered_grams, qgrams, word_tokens

RECORDS = ["imyouteca", "ubuntucom", "utubbecou", "youtbecom", "yoytubeca"]


def test_qgrams():
    got = qgrams("surajit ch", 2)
    assert [g.text for g in got] == ["su", "ur", "ra", "aj", "ji", "it", "t ", " c", "ch"]
    assert [g.pos for g in got] == list(range(1, 10))
    assert qgrams("abc", 3) == [PositionalGram("abc", 1)]
    assert qgrams("ab", 3) == []


def test_word_tokens():
    assert [g.text for g in word_tokens("vldb journal 2013")] == ["vldb", "journal", "2013"]
    assert word_tokens("") == []
    assert word_tokens("  a  b ") == [PositionalGram("a", 1), PositionalGram("b", 2)]


def test_global_order_on_search_fixture():
    order = build_global_order([[g.text for g in qgrams(r, 2)] for r in RECORDS])
    assert order.rank["im"] == 1 and order.freq["im"] == 1
    assert order.rank["ec"] == 21 and order.freq["ec"] == 4
    assert len(order) == 21


def test_global_order_single_record_text_ties():
    order = build_global_order([["b", "c", "a"]], ties="text")
    assert [order.rank[t] for t in "abc"] == [1, 2, 3]
    assert set(order.freq.values()) == {1}


def test_unseen_tokens_sort_last():
    order = GlobalOrder.from_ranking(["x", "y"])
    assert math.isinf(order.rank_of("zz"))
    assert order.key("y") < order.key("aa") < order.key("zz")


def test_ordered_grams_prefix():
    order = build_global_order([[g.text for g in qgrams(r, 2)] for r in RECORDS])
    pre = ordered_grams(qgrams(RECORDS[0], 2), order)[:5]
    assert [(g.text, g.pos) for g in pre] == [("im", 1), ("my", 2), ("te", 6), ("ca", 8), ("yo", 3)]
    assert ordered_grams([], order) == []


@given(st.text("ab", min_size=2, max_size=20))
def test_ordered_grams_ties_by_position(s):
    order = build_global_order([[g.text for g in qgrams(s, 2)]])
    out = ordered_grams(qgrams(s, 2), order)
    assert sorted(out, key=lambda g: g.pos) == qgrams(s, 2)
    for a, b in zip(out, out[1:]):
        if a.text == b.text:
            assert a.pos < b.pos
