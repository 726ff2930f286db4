import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import mask, naive_opt, random_submodular
from subcurv.greedy import (
    OptResult,
    Trajectory,
    best_prefix_greedy,
    classic_greedy,
    distorted_greedy,
    exact_opt,
    greedy_prefixes,
    greedy_prune,
    random_greedy,
    standard_greedy,
)
from subcurv.objectives import CutFunction
from subcurv.oracle import (
    DecomposableFunction,
    InfeasibleError,
    ModularFunction,
    TableFunction,
    members,
)


def hand_instance():
    # weighted coverage: 0 covers {a,b}, 1 covers {b,c}, 2 covers {c}; w = (3, 2, 1)
    g = TableFunction([0, 5, 3, 6, 1, 6, 3, 6])
    return DecomposableFunction(g, [1.0, 0.5, 0.3])


def test_hand_trajectory():
    f = hand_instance()
    t = greedy_prune(f, 3)
    assert [s.selected for s in t.steps] == [0, 2, None]
    assert t.active_sets() == [0, 0b001, 0b101, 0b101]
    assert t.final_value == pytest.approx(4.7)
    assert t.stopped_early and t.prune_events == 0


def test_pruning_on_path_graph():
    # path 0-1-2: after {1}, adding 0 or 2 lowers the cut; cut({0,2}) = 2 = cut({1})
    f = CutFunction(3, [(0, 1), (1, 2)])
    t = classic_greedy(f, 2)
    assert members(t.final) == [0, 1]
    t = greedy_prune(f, 2)
    assert t.active_sets() == [0, 0b010, 0b010]


def test_prune_removes_dominated_element():
    t = np.zeros(8)
    t[0b001], t[0b010], t[0b100] = 2.0, 1.8, 1.0
    t[0b011], t[0b101], t[0b110] = 3.0, 2.0, 2.9
    t[0b111] = 3.0
    f = TableFunction(t)
    traj = greedy_prune(f, 3)
    # A1={0}; A2={0,1}; step 3: 2 adds 0 -> stop
    assert traj.active_sets()[:3] == [0, 1, 3]
    t[0b111] = 3.2
    t[0b110] = 3.1
    traj = greedy_prune(TableFunction(t), 3)
    s3 = traj.steps[2]
    assert s3.selected == 2 and s3.pruned == []
    t[0b110] = 3.2
    # once 1 and 2 together reach 3.2, element 0 contributes nothing
    traj = greedy_prune(TableFunction(t), 3)
    s3 = traj.steps[2]
    assert s3.pruned == [0] and s3.active == [1, 2]


@given(st.integers(0, 2**31 - 1), st.integers(3, 9), st.data())
@settings(max_examples=60, deadline=None)
def test_pruning_invariant(seed, n, data):
    f = random_submodular(np.random.default_rng(seed), n)
    k = data.draw(st.integers(1, n))
    traj = greedy_prune(f, k)
    assert len(traj.active_sets()) == k + 1
    for A in traj.active_sets():
        fA = f.value(A)
        for a in members(A):
            assert fA - f.value(A & ~(1 << a)) > 0
        assert len(members(A)) <= k
    vals = [f.value(A) for A in traj.active_sets()]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@given(st.integers(0, 2**31 - 1), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_exact_opt_matches_brute(seed, n):
    f = random_submodular(np.random.default_rng(seed), n)
    k = max(1, n // 2)
    opt = exact_opt(f, k)
    best, sets = naive_opt(f, k)
    assert opt.value == pytest.approx(best, abs=1e-9)
    assert set(opt.optimal_sets) == {mask(S) for S in sets}


def test_exact_opt_lists_ties():
    f = ModularFunction([1.0, 1.0, 0.0])
    opt = exact_opt(f, 1)
    assert opt.value == 1.0 and opt.optimal_sets == [1, 2]
    opt = exact_opt(f, 3)
    assert opt.optimal_sets == [3, 7]


def test_exact_opt_size_limit():
    with pytest.raises(InfeasibleError):
        exact_opt(ModularFunction(np.ones(25)), 2)


def test_k_validation():
    f = ModularFunction([1.0, 2.0])
    for alg in (greedy_prune, standard_greedy, classic_greedy, greedy_prefixes):
        with pytest.raises(ValueError):
            alg(f, 0)
        with pytest.raises(ValueError):
            alg(f, 3)


def test_ties_to_lower_index():
    f = ModularFunction([1.0, 1.0, 1.0])
    assert members(greedy_prune(f, 2).final) == [0, 1]


def test_standard_vs_classic():
    f = CutFunction(3, [(0, 1), (1, 2)])
    assert standard_greedy(f, 3).final == 0b010
    assert classic_greedy(f, 3).final == 0b111
    assert classic_greedy(f, 3).final_value == 0.0


def test_trajectory_json_roundtrip():
    traj = greedy_prune(hand_instance(), 3)
    back = Trajectory.from_json(traj.to_json())
    assert back.active_sets() == traj.active_sets()
    opt = exact_opt(hand_instance(), 3)
    assert OptResult.from_json(opt.to_json()) == opt


def test_distorted_greedy_skips_costly_steps():
    g = ModularFunction([1.0, 1.0])
    dec = DecomposableFunction(g, [0.2, 5.0])
    assert distorted_greedy(dec, 2) == 0b01
    with pytest.raises(TypeError):
        distorted_greedy(g, 1)


def test_distorted_greedy_zero_cost_is_greedy():
    g = ModularFunction([3.0, 1.0, 2.0])
    assert members(distorted_greedy(DecomposableFunction(g, np.zeros(3)), 2)) == [0, 2]


def test_random_greedy_deterministic_and_feasible():
    f = ModularFunction([3.0, 1.0, 2.0, -1.0])
    a = random_greedy(f, 2, seed=5)
    assert a == random_greedy(f, 2, seed=5)
    for s in range(20):
        S = random_greedy(f, 2, seed=s)
        assert len(members(S)) <= 2 and not (S >> 3) & 1


def test_prefixes_and_best_prefix():
    f = CutFunction(3, [(0, 1), (1, 2)])
    assert greedy_prefixes(f, 3) == [0, 0b010, 0b011, 0b111]
    assert best_prefix_greedy(f, 3) == 0b010
