import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simtol.core import ParameterError, RunStats
from simtol.oracle import brute_allocation, brute_join_set
from simtol.set_join import (
    NoAllocation,
    PartitionScheme,
    Selection,
    fnv1a_64,
    greedy_allocation,
    group_boundaries,
    join_set,
    one_deletions,
    optimal_allocation,
    partition_set,
    sim_params,
)

TABLE = [
    {1, 2, 5, 6, 7, 10, 11, 13, 14},
    {2, 4, 5, 6, 9, 11, 13, 14, 15},
    {1, 3, 6, 7, 9, 10, 11, 13, 14},
    {3, 4, 5, 7, 8, 10, 12, 13, 14},
    {1, 2, 3, 4, 5, 6, 7, 10, 11, 13, 14},
]
FIXED = PartitionScheme(4, {x: (x - 1) // 4 + 1 for x in range(1, 16)})
COSTS = [(0, 0, 0), (0, 1, 3), (0, 1, 2), (0, 3, 3)]

cost_triples = st.lists(
    st.tuples(st.integers(0, 20), st.integers(0, 20)).map(lambda t: (0, min(t), max(t))), min_size=1, max_size=8
)


def test_sim_params():
    p = sim_params("jac", "0.73", 9, 11)
    assert p.h_l + 1 == 4 and p.h_ls + 1 == 4
    exact = sim_params("jac", 1, 7, 7)
    assert (exact.h_l, exact.h_ls, exact.lower, exact.upper) == (0, 0, 7, 7)
    with pytest.raises(ParameterError):
        sim_params("ed", "0.8", 3)


def test_partition_and_deletions():
    assert partition_set(TABLE[0], FIXED) == [(1, 2), (5, 6, 7), (10, 11), (13, 14)]
    assert partition_set(set(), FIXED) == [(), (), (), ()]
    assert set(one_deletions((5, 6, 7))) == {(5, 6), (6, 7), (5, 7)}
    assert one_deletions(()) == []
    assert one_deletions(("a",)) == [()]


def test_fnv_reference_value():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


@given(st.sets(st.integers(0, 40), max_size=20), st.sets(st.integers(0, 40), max_size=20), st.integers(1, 7))
def test_partition_is_homomorphic(X, Y, m):
    scheme = PartitionScheme(m)
    fx, fy = partition_set(X, scheme), partition_set(Y, scheme)
    assert sum(len(set(a) ^ set(b)) for a, b in zip(fx, fy)) == len(X ^ Y)


def test_allocation_fixtures():
    opt = optimal_allocation(COSTS, 4)
    assert (opt.vector, opt.cost) == ((2, 0, 2, 0), 2)
    greedy = greedy_allocation(COSTS, 4)
    assert greedy.vector == (2, 1, 1, 0)
    assert greedy.cost == 2 <= 2 * opt.cost
    assert optimal_allocation([(0, 0, 0)] * 3, 4).cost == 0
    with pytest.raises(NoAllocation):
        optimal_allocation(COSTS, 9)
    with pytest.raises(ParameterError):
        greedy_allocation([(0, 3, 1)], 1)


@given(cost_triples, st.integers(0, 16))
@settings(max_examples=300, deadline=None)
def test_allocations_against_exhaustive(costs, target):
    if target > 2 * len(costs):
        return
    opt = optimal_allocation(costs, target)
    greedy = greedy_allocation(costs, target)
    assert opt.total == greedy.total == target
    assert opt.cost == brute_allocation(costs, target)
    assert opt.cost == sum(c[v] for c, v in zip(costs, opt.vector))
    assert opt.cost <= greedy.cost <= 2 * opt.cost


def test_group_boundaries():
    # a set of size 10 has partners in [7, 10] at delta 0.7
    probed = lambda floors: sum(1 for k, f in enumerate(floors) if f <= 10 and (k + 1 == len(floors) or floors[k + 1] > 7))
    assert probed(group_boundaries(7, 10, 0.7)) == 1
    assert probed(group_boundaries(7, 10, 0.8)) == 2
    assert group_boundaries(7, 10, 1) == [7, 8, 9, 10]
    with pytest.raises(ParameterError):
        group_boundaries(1, 5, 0.3)


def test_worked_fixture_join():
    assert join_set(TABLE, None, "jac", "0.73") == [(1, 5, Fraction(9, 11))]
    scheme = lambda m: FIXED if m == 4 else PartitionScheme(m)  # noqa: E731
    for selection in Selection:
        assert join_set(TABLE, None, "jac", "0.73", selection, scheme=scheme) == [(1, 5, Fraction(9, 11))]


def test_identical_sets_only_at_one():
    R = [{1, 2}, {2, 1}, {1, 2, 3}, {4}]
    assert join_set(R, None, "dice", 1) == [(1, 2, Fraction(1))]


def test_rejects_bad_input():
    with pytest.raises(ParameterError):
        join_set([{1}], None, "jac", "0.8", alpha=0.2)
    with pytest.raises(ParameterError):
        join_set([{1}], None, "eds", "0.8")


@pytest.mark.parametrize("selection", list(Selection))
@pytest.mark.parametrize("sim", ["jac", "cos", "dice"])
def test_small_random_joins(selection, sim):
    rng = random.Random(11)
    for trial in range(25):
        U = rng.randint(5, 30)
        R = [rng.sample(range(U), rng.randint(1, min(U, 15))) for _ in range(rng.randint(0, 25))]
        S = [rng.sample(range(U), rng.randint(1, min(U, 15))) for _ in range(rng.randint(0, 10))] if trial % 2 else None
        d = rng.choice(["0.5", "0.6", "0.75", "0.85", "1"])
        alpha = rng.choice([0.5, 0.7, 0.9, 1.0])
        got = join_set(R, S, sim, d, selection, alpha, threads=2)
        assert got == brute_join_set(R, S, sim, d)


def test_probe_volume_ordering():
    rng = random.Random(4)
    R = [rng.sample(range(200), rng.randint(5, 30)) for _ in range(300)]
    R += [sorted(set(r[:-1]) | {rng.randrange(200)}) for r in R[:100]]
    probed = {}
    for selection in Selection:
        stats = RunStats()
        out = join_set(R, None, "jac", "0.8", selection, stats=stats)
        assert stats.results == len(out) <= stats.candidates
        probed[selection] = stats.probed
    assert probed[Selection.OPTIMAL] <= probed[Selection.GREEDY] <= probed[Selection.ALL_ONES]
