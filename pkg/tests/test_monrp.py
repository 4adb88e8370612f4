import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nextrelease.monrp import (
    InstanceError,
    MonrpInstance,
    ParetoFront,
    ReleaseCandidate,
    SearchParams,
    brute_force_front,
    candidate,
    crowding_distance,
    dominates,
    evaluate,
    fast_nondominated_sort,
    front_from_csv,
    front_to_csv,
    front_to_plot_data,
    hypervolume,
    instance_from_csv,
    instance_to_csv,
    nsga2_search,
    random_instance,
    scores,
)


def inst_from(score, cost):
    """One stakeholder with weight 1, so scores equal the value row."""
    return MonrpInstance([1.0], [score], cost)


def pairs(front):
    return [(c.bits, c.value_total, c.cost_total) for c in front]


# -- scores / evaluate -----------------------------------------------------


def test_scores_identity_weight():
    assert scores(inst_from([3, 0], [1, 1])).tolist() == [3.0, 0.0]


def test_scores_weighted():
    inst = MonrpInstance([0.5, 0.5], [[2, 0], [4, 0]], [1, 1])
    assert scores(inst)[0] == 3.0


def test_scores_zero():
    inst = MonrpInstance([0.2, 0.8], np.zeros((2, 4)), np.ones(4))
    assert not scores(inst).any()


def test_evaluate_examples():
    inst = inst_from([3, 1], [5, 5])
    assert evaluate(inst, [0, 0]) == (0.0, 0.0)
    assert evaluate(inst, [1, 1]) == (4.0, 10.0)
    assert evaluate(inst, [1, 0]) == (3.0, 5.0)


def test_evaluate_length_mismatch():
    with pytest.raises(InstanceError, match="length 3, expected 2"):
        evaluate(inst_from([3, 1], [5, 5]), [1, 0, 1])


def test_evaluate_non_binary():
    with pytest.raises(InstanceError):
        evaluate(inst_from([3, 1], [5, 5]), [2, 0])


@settings(max_examples=200)
@given(st.integers(1, 4), st.integers(1, 8), st.integers(0, 10**6), st.integers(1, 64))
def test_score_linearity(m, n, seed, k):
    inst = random_instance(m, n, seed)
    scaled = MonrpInstance(inst.weights, inst.value * k, inst.cost)
    assert np.allclose(scores(scaled), k * scores(inst), rtol=1e-12, atol=0)


# -- instance construction -------------------------------------------------


@pytest.mark.parametrize(
    "weights, value, cost, message",
    [
        ([0.6, 0.6], np.ones((2, 2)), [1, 1], "weights sum 1.2"),
        ([0.5, 0.4], np.ones((2, 2)), [1, 1], "weights sum 0.9"),
        ([0.5, 0.5], np.ones((2, 2)), [1, 1, 1], r"shape \(2, 2\), expected \(2, 3\)"),
        ([1.0], [[1.0, -1.0]], [1, 1], "negative"),
        ([1.0], [[1.0, np.nan]], [1, 1], "non-finite"),
        ([1.0], [[1.0]], [-2], "negative"),
        ([], np.ones((0, 1)), [1], "non-empty"),
        ([1.5, -0.5], np.ones((2, 1)), [1], "negative"),
    ],
)
def test_instance_validation(weights, value, cost, message):
    with pytest.raises(InstanceError, match=message):
        MonrpInstance(weights, value, cost)


def test_instance_is_immutable():
    inst = inst_from([1, 2], [3, 4])
    with pytest.raises(ValueError):
        inst.cost[0] = 9


# -- dominance -------------------------------------------------------------


def rc(value, cost):
    return ReleaseCandidate((), value, cost)


@pytest.mark.parametrize(
    "a, b, expected",
    [((10, 5), (1, 5), True), ((10, 5), (10, 5), False), ((10, 9), (1, 2), False), ((10, 4), (10, 5), True)],
)
def test_dominates(a, b, expected):
    assert dominates(rc(*a), rc(*b)) is expected


# -- exact front -----------------------------------------------------------


def test_exact_co_monotone_keeps_all():
    # 00 (0,0), 10 (1,1), 01 (10,10), 11 (11,11): value and cost rise together
    front = brute_force_front(inst_from([1, 10], [1, 10]))
    assert pairs(front) == [("00", 0, 0), ("10", 1, 1), ("01", 10, 10), ("11", 11, 11)]
    assert front.provenance == "Exact"


def test_exact_drops_dominated():
    # 00 (0,0), 10 (10,5), 01 (1,5), 11 (11,10); 01 is beaten by 10
    front = brute_force_front(inst_from([10, 1], [5, 5]))
    assert pairs(front) == [("00", 0, 0), ("10", 10, 5), ("11", 11, 10)]


def test_exact_single_feature():
    front = brute_force_front(inst_from([2.5], [4]))
    assert pairs(front) == [("0", 0, 0), ("1", 2.5, 4)]


def test_exact_keeps_ties_from_distinct_vectors():
    front = brute_force_front(inst_from([2, 2], [3, 3]))
    assert pairs(front) == [("00", 0, 0), ("01", 2, 3), ("10", 2, 3), ("11", 4, 6)]


def test_exact_zero_value_feature_never_selected():
    front = brute_force_front(inst_from([0, 4], [1, 1]))
    assert pairs(front) == [("00", 0, 0), ("01", 4, 1)]


def test_exact_size_guard():
    with pytest.raises(InstanceError, match="n <= 20"):
        brute_force_front(random_instance(2, 21, 0))


def naive_front(inst):
    """Pairwise-dominance filter over all 2**n candidates."""
    cands = [candidate(inst, x) for x in itertools.product((0, 1), repeat=inst.n)]
    keep = [c for c in cands if not any(dominates(o, c) for o in cands)]
    return sorted(keep, key=lambda c: (c.cost_total, -c.value_total, c.x))


@pytest.mark.parametrize("seed", range(8))
def test_exact_matches_naive_enumeration(seed):
    inst = random_instance(3, 7, seed)
    assert list(brute_force_front(inst).candidates) == naive_front(inst)


# -- sorting helpers -------------------------------------------------------


def test_fast_nondominated_sort_ranks():
    objs = np.array([[0, 0], [1, 1], [0, 2], [2, 0], [3, 3], [1, 1]])
    assert fast_nondominated_sort(objs).tolist() == [0, 1, 1, 1, 2, 1]


def test_crowding_boundaries_infinite():
    d = crowding_distance(np.array([[0.0, 3.0], [1.0, 2.0], [3.0, 0.0]]))
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert d[1] == pytest.approx(3 / 3 + 3 / 3)


# -- hypervolume -----------------------------------------------------------


def grid_hypervolume(points, ref):
    """Union area of [p, ref] boxes by summing dominated grid cells."""
    xs = sorted({p[0] for p in points if p[0] < ref[0]} | {ref[0]})
    ys = sorted({p[1] for p in points if p[1] < ref[1]} | {ref[1]})
    area = 0.0
    for x0, x1 in zip(xs, xs[1:]):
        for y0, y1 in zip(ys, ys[1:]):
            if any(px <= x0 and py <= y0 for px, py in points):
                area += (x1 - x0) * (y1 - y0)
    return area


def test_hypervolume_ideal_point():
    inst = inst_from([2, 3], [4, 6])
    front = [ReleaseCandidate((1, 1), 5.0, 0.0)]
    assert hypervolume(front, inst) == pytest.approx(1.01 * 5 * 1.01 * 10)


def test_hypervolume_nadir_sliver():
    inst = inst_from([2, 3], [4, 6])
    front = [ReleaseCandidate((0, 0), 0.0, 10.0)]
    assert hypervolume(front, inst) == pytest.approx(0.01 * 5 * 0.01 * 10)


def test_hypervolume_empty_front():
    with pytest.raises(ValueError):
        hypervolume([], inst_from([1], [1]))


@pytest.mark.parametrize("seed", range(6))
def test_hypervolume_matches_grid_oracle(seed):
    inst = random_instance(3, 8, seed)
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(12, inst.n))
    cands = [candidate(inst, x) for x in X]
    total_s, total_c = scores(inst).sum(), inst.cost.sum()
    pts = [(total_s - c.value_total, c.cost_total) for c in cands]
    expected = grid_hypervolume(pts, (1.01 * total_s, 1.01 * total_c))
    assert hypervolume(cands, inst) == pytest.approx(expected, rel=1e-12)


def test_hypervolume_exact_beats_subset():
    inst = random_instance(4, 10, 3)
    exact = brute_force_front(inst)
    meta = nsga2_search(inst, SearchParams(population=8, generations=3, seed=1))
    assert hypervolume(exact, inst) >= hypervolume(meta, inst)


# -- metaheuristic ---------------------------------------------------------


def test_search_params_validation():
    for kw in [{"population": 5}, {"population": 2}, {"crossover_rate": 1.5}, {"mutation_rate": -0.1}]:
        with pytest.raises(ValueError):
            SearchParams(**kw)


def test_nsga2_same_seed_same_front():
    inst = random_instance(4, 15, 11)
    a = nsga2_search(inst, SearchParams(population=40, generations=30, seed=5))
    b = nsga2_search(inst, SearchParams(population=40, generations=30, seed=5))
    assert front_to_csv(a) == front_to_csv(b)
    assert a.provenance == "Metaheuristic"
    assert a.meta["seed"] == 5


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_nsga2_recovers_exact_front_n12(seed):
    inst = random_instance(5, 12, 100 + seed)
    exact = brute_force_front(inst)
    meta = nsga2_search(inst, SearchParams(seed=seed))
    assert meta.objective_pairs() == exact.objective_pairs()


def test_nsga2_front_is_sorted_and_sound():
    inst = random_instance(6, 25, 4)
    front = nsga2_search(inst, SearchParams(population=60, generations=60, seed=2))
    keys = [(c.cost_total, -c.value_total, c.x) for c in front]
    assert keys == sorted(keys)
    assert len({c.x for c in front}) == len(front)
    for a in front:
        assert evaluate(inst, a.x) == (a.value_total, a.cost_total)
        assert not any(dominates(b, a) for b in front)


# -- random instances and CSV ----------------------------------------------


def test_random_instance_determinism():
    assert random_instance(3, 9, 7) == random_instance(3, 9, 7)
    assert random_instance(3, 9, 7) != random_instance(3, 9, 8)


def test_random_instance_no_interest():
    assert not random_instance(4, 6, 1, interest_prob=0).value.any()


def test_random_instance_poc_scale():
    inst = random_instance(10, 40, 42)
    assert inst.value.shape == (10, 40)
    assert abs(inst.weights.sum() - 1) <= 1e-9


@pytest.mark.parametrize(
    "kw", [{"cost_range": (0, 5)}, {"value_range": (5, 1)}, {"interest_prob": 1.5}, {"m": 0}]
)
def test_random_instance_invalid(kw):
    args = {"m": 2, "n": 3, "seed": 0} | kw
    with pytest.raises(InstanceError):
        random_instance(**args)


def test_instance_csv_round_trip():
    inst = random_instance(3, 5, 2)
    text = instance_to_csv(inst)
    rows = text.splitlines()
    assert len(rows) == 3 + 4
    assert rows[0] == "s1,s2,s3"
    assert rows[-1] == "f1,f2,f3,f4,f5"
    assert instance_from_csv(text) == inst


def test_instance_csv_errors():
    with pytest.raises(InstanceError):
        instance_from_csv("a,b\n0.5,0.5\n1,2\n")
    with pytest.raises(InstanceError, match="non-numeric"):
        instance_from_csv("a\n1\nx\n1\nf1\n")


def test_front_csv_round_trip():
    inst = inst_from([10, 1], [5, 5])
    front = brute_force_front(inst)
    text = front_to_csv(front)
    assert text.splitlines()[0] == "candidate_id,value_total,cost_total,x_bits"
    assert text.splitlines()[2] == "1,10.0,5.0,10"
    assert front_from_csv(text) == ParetoFront(front.candidates, "Exact")
    plot = front_to_plot_data(front).splitlines()
    assert plot == ["# cost_total,value_total", "0.0,0.0", "5.0,10.0", "10.0,11.0"]
