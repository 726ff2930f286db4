import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import naive_CF, naive_F, naive_mixed_maxima, random_coverage, random_submodular
from subcurv.curvature import cc_curvature_total, curvature_global, guarantee, removal_ratio
from subcurv.greedy import exact_opt, greedy_prune
from subcurv.multilinear import (
    ConstraintFamily,
    FractionalTrajectory,
    F_exact,
    F_sampled,
    certificate_removal_fractional,
    cF_divergence_witness,
    dmcgp,
    fractional_greedy_curvature,
    gradient,
    minimal_negative_set,
    mixed_partial_maxima,
    multilinear_diagnostics,
    remainder_KF,
    slope,
    slope_invariant_ok,
    smoothness_CF,
    wdmcgp,
)
from subcurv.objectives import CutFunction, gen_coverage
from subcurv.oracle import DecomposableFunction, InfeasibleError, ModularFunction, members

K2 = CutFunction(2, [(0, 1)])


def indicator(n, S):
    x = np.zeros(n)
    x[list(S)] = 1.0
    return x


# ------------------------------------------------------------ F and slopes


def test_F_vertices_and_origin():
    f = random_coverage(np.random.default_rng(0), 6)
    for S in (0, 0b101, 0b111111):
        assert F_exact(f, indicator(6, members(S))) == pytest.approx(f.value(S))
    assert F_exact(f, np.zeros(6)) == 0.0


def test_F_k2_half():
    assert F_exact(K2, [0.5, 0.5]) == pytest.approx(0.5)


@given(st.integers(0, 2**31 - 1), st.integers(1, 7))
@settings(max_examples=30, deadline=None)
def test_F_matches_naive_sum(seed, n):
    rng = np.random.default_rng(seed)
    f = random_submodular(rng, max(n, 2))
    x = rng.random(f.n)
    assert F_exact(f, x) == pytest.approx(naive_F(f, x), abs=1e-10)


def test_F_rejects_bad_points():
    with pytest.raises(ValueError):
        F_exact(K2, [0.5])
    with pytest.raises(ValueError):
        F_exact(K2, [1.5, 0.0])
    with pytest.raises(InfeasibleError):
        F_exact(ModularFunction(np.ones(21)), np.zeros(21))


def test_slopes():
    f = ModularFunction([3.0, -1.0, 2.0])
    x = np.array([0.2, 0.9, 0.4])
    assert np.allclose(gradient(f, x), [3.0, -1.0, 2.0])
    assert slope(K2, [0.0, 0.0], 0) == 1.0


@given(st.integers(0, 2**31 - 1), st.integers(2, 7))
@settings(max_examples=30, deadline=None)
def test_slope_is_central_difference(seed, n):
    rng = np.random.default_rng(seed)
    f = random_submodular(rng, n)
    x = rng.uniform(0.1, 0.9, n)
    g = gradient(f, x)
    h = 0.05
    for j in range(n):
        up, dn = x.copy(), x.copy()
        up[j] += h
        dn[j] -= h
        # F is affine in x_j, so the central difference is exact
        assert g[j] == pytest.approx((F_exact(f, up) - F_exact(f, dn)) / (2 * h), abs=1e-9)
        assert g[j] == pytest.approx(slope(f, x, j), abs=1e-12)


def test_F_sampled():
    est, se = F_sampled(K2, [0.5, 0.5], 100_000, seed=1)
    assert abs(est - 0.5) <= 3 * se
    est, se = F_sampled(K2, [1.0, 0.0], 50, seed=1)
    assert (est, se) == (1.0, 0.0)
    est, se = F_sampled(K2, [0.5, 0.5], 1, seed=3)
    assert est in (0.0, 1.0) and se == 0.0
    with pytest.raises(ValueError):
        F_sampled(K2, [0.5, 0.5], 0)


def test_F_sampled_unbiased():
    rng = np.random.default_rng(5)
    f = random_coverage(rng, 6)
    x = rng.random(6)
    exact = F_exact(f, x)
    hits = 0
    for t in range(1000):
        est, se = F_sampled(f, x, 200, seed=t)
        hits += abs(est - exact) <= 4 * se
    assert hits >= 990


# ------------------------------------------------------------ smoothness


def test_CF_values():
    assert smoothness_CF(ModularFunction([1.0, 2.0, 3.0])) == 0.0
    assert smoothness_CF(K2) == pytest.approx(2.0)


def test_CF_matches_grid_corners_coverage_n8():
    _, inst = gen_coverage(0, n=8, m=16)
    g = inst.gain()
    assert smoothness_CF(g) == pytest.approx(naive_CF(g), abs=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(2, 6))
@settings(max_examples=20, deadline=None)
def test_mixed_partials_match_naive(seed, n):
    f = random_submodular(np.random.default_rng(seed), n)
    M = mixed_partial_maxima(f)
    assert np.allclose(M, naive_mixed_maxima(f), atol=1e-10)
    assert M[2] == pytest.approx(smoothness_CF(f))
    assert remainder_KF(f) == pytest.approx(sum(math.comb(n, r) * M[r] for r in range(2, n + 1)))


def test_diagnostics_error_bound():
    d = multilinear_diagnostics(K2, 10)
    assert d.C_F == 2.0 and d.error_bound == pytest.approx(2 * 1 * 2.0 / 10)


# ------------------------------------------------------------ families


def test_family_best_set():
    fam = ConstraintFamily.cardinality(2)
    assert fam.best_set([1.0, 3.0, 3.0, -1.0]) == [1, 2]
    assert fam.best_set([-1.0, 0.0, 0.5]) == [2]
    part = ConstraintFamily.partition([[0, 1], [2, 3]], [1, 1])
    assert part.best_set([2.0, 1.0, 0.5, 4.0]) == [0, 3]
    assert part.max_size(4) == 2
    assert len(part.members(4)) == 9


def test_family_validation_and_json():
    with pytest.raises(ValueError):
        ConstraintFamily.cardinality(0)
    with pytest.raises(ValueError):
        ConstraintFamily.partition([[0, 1], [1, 2]], [1, 1])
    with pytest.raises(ValueError):
        ConstraintFamily.partition([[0], [1]], [0, 0])
    with pytest.raises(ValueError):
        ConstraintFamily.partition([[0]], [1]).best_set([1.0, 1.0])
    for fam in (ConstraintFamily.cardinality(3), ConstraintFamily.partition([[0, 2], [1]], [1, 1])):
        assert ConstraintFamily.from_json(fam.to_json()) == fam


def test_exact_opt_over_partition():
    f = ModularFunction([2.0, 1.0, 0.5, 4.0])
    opt = exact_opt(f, 4, family=ConstraintFamily.partition([[0, 1], [2, 3]], [1, 1]))
    assert opt.value == 6.0 and opt.optimal_sets == [0b1001]


# ------------------------------------------------------------ DMCG-P


def test_dmcgp_modular_top_k():
    w = np.array([0.5, 3.0, 1.0, 2.0, -1.0])
    f = ModularFunction(w)
    ft = dmcgp(f, ConstraintFamily.cardinality(2), 100)
    assert np.allclose(ft.final, [0, 1, 0, 1, 0])
    assert ft.final_value == pytest.approx(5.0, abs=1e-9)
    assert not ft.prunes


def test_dmcgp_t1_integral():
    f = ModularFunction([1.0, 2.0, 3.0])
    ft = dmcgp(f, ConstraintFamily.cardinality(1), 1)
    assert ft.final.tolist() == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        dmcgp(f, ConstraintFamily.cardinality(1), 0)


@given(st.integers(0, 2**31 - 1), st.integers(3, 7), st.integers(1, 3), st.integers(1, 30))
@settings(max_examples=30, deadline=None)
def test_dmcgp_feasibility_and_slopes(seed, n, k, T):
    f = random_submodular(np.random.default_rng(seed), n)
    fam = ConstraintFamily.cardinality(min(k, n))
    ft = dmcgp(f, fam, T)
    assert len(ft.iterates) == T + 1
    for i, x in enumerate(ft.iterates):
        assert np.all(x <= i / T + 1e-12)
        assert fam.in_hull(x)
    assert slope_invariant_ok(f, ft)
    # a prune pass never lowers F
    for pre, post in zip(ft.pre_prune, ft.iterates[1:]):
        assert F_exact(f, post) >= F_exact(f, pre) - 1e-12


def test_dmcgp_prunes_on_path_cut():
    # mass on both endpoints and the middle: the endpoint slopes 1 - 2 x_1 vanish at x_1 = 1/2
    f = CutFunction(3, [(0, 1), (1, 2)])
    ft = dmcgp(f, ConstraintFamily.cardinality(3), 4)
    assert ft.prunes == [(2, 0), (2, 2)]
    assert ft.final.tolist() == [0.0, 1.0, 0.0]
    assert ft.final_value == pytest.approx(2.0)


@given(st.integers(0, 2**31 - 1), st.integers(3, 7), st.integers(2, 20))
@settings(max_examples=40, deadline=None)
def test_prune_strict_when_slope_negative(seed, n, T):
    f = random_submodular(np.random.default_rng(seed), n)
    ft = dmcgp(f, ConstraintFamily.cardinality(max(2, n // 2)), T)
    for step in {s for s, _ in ft.prunes}:
        pre, post = ft.pre_prune[step - 1], ft.iterates[step]
        first = next(c for s, c in ft.prunes if s == step)
        if slope(f, pre, first) < -1e-9:
            assert F_exact(f, post) > F_exact(f, pre)


@pytest.mark.parametrize("seed", range(6))
def test_dmcgp_bound_positive_monotone(seed):
    rng = np.random.default_rng(seed)
    g = random_coverage(rng, 8)
    k, T = 3, 100
    ft = dmcgp(g, ConstraintFamily.cardinality(k), T)
    opt = exact_opt(g, k)
    alpha = cc_curvature_total(g)
    err = g.n * (g.n - 1) * smoothness_CF(g) / T
    assert ft.final_value >= guarantee(alpha, monotone=True) * opt.value - err - 1e-6
    assert fractional_greedy_curvature(g, ft, opt) <= curvature_global(g) + 1e-9


def test_dmcgp_json_roundtrip():
    ft = dmcgp(K2, ConstraintFamily.cardinality(1), 5)
    back = FractionalTrajectory.from_json(ft.to_json())
    assert back.T == 5 and all(np.array_equal(a, b) for a, b in zip(back.iterates, ft.iterates))


def test_dmcgp_sampled_runs():
    f = random_coverage(np.random.default_rng(1), 8)
    ft = dmcgp(f, ConstraintFamily.cardinality(2), 10, samples=200, seed=3)
    assert ConstraintFamily.cardinality(2).in_hull(ft.final)


# ------------------------------------------------------------ wDMCG-P


@given(st.integers(0, 2**31 - 1), st.integers(3, 8), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_wdmcgp_coordinate_bound(seed, n, k):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < 0.5
    f = CutFunction(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))
    ft = wdmcgp(f, ConstraintFamily.cardinality(min(k, n)), k)
    for i, x in enumerate(ft.iterates):
        assert x.max() <= 1 - (1 - 1 / k) ** i + 1e-12


def test_wdmcgp_modular_selection():
    w = np.array([1.0, 3.0, 2.0])
    ft = wdmcgp(ModularFunction(w), ConstraintFamily.cardinality(2), 3)
    for x, B in zip(ft.iterates, ft.chosen_sets):
        assert B == sorted(np.argsort(-(1 - x) * w, kind="stable")[:2].tolist())
    # residual room shifts the choice: (1 - 5/9) * 2 < 1
    assert ft.chosen_sets == [[1, 2], [1, 2], [0, 1]]


def test_wdmcgp_rejects_negative():
    with pytest.raises(ValueError):
        wdmcgp(ModularFunction([1.0, -1.0]), ConstraintFamily.cardinality(1), 2)


@pytest.mark.parametrize("seed", range(5))
def test_wdmcgp_bound_on_cuts(seed):
    rng = np.random.default_rng(seed)
    n, k = 8, 4
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < 0.4
    f = CutFunction(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))
    ft = wdmcgp(f, ConstraintFamily.cardinality(k), k)
    opt = exact_opt(f, k)
    assert ft.final_value >= (1 - 1 / k) ** (k - 1) * opt.value - remainder_KF(f) / k - 1e-9


# ------------------------------------------------------------ fractional certificate


def _dec(seed, n=7):
    rng = np.random.default_rng(seed)
    g = random_coverage(rng, n)
    gs = np.array([g.value(1 << e) for e in range(n)])
    return DecomposableFunction(g, rng.uniform(0.1, 0.7, n) * gs)


@pytest.mark.parametrize("seed", range(5))
def test_discrete_limit_of_fractional_removal_ratio(seed):
    dec = _dec(seed)
    traj = greedy_prune(dec, 4)
    xs = [indicator(dec.n, members(A)) for A in traj.active_sets()]
    forced = FractionalTrajectory(4, xs, [], [], dec.value(traj.final))
    assert certificate_removal_fractional(dec, forced) == pytest.approx(removal_ratio(dec, traj), abs=1e-12)


def test_fractional_removal_hand():
    # g = coverage over items a,b,c as in the discrete hand case, x = (0.5, 0, 1)
    from subcurv.oracle import TableFunction

    g = TableFunction([0, 5, 3, 6, 1, 6, 3, 6])
    dec = DecomposableFunction(g, [1.0, 0.5, 0.3])
    x = np.array([0.5, 0.0, 1.0])
    ft = FractionalTrajectory(1, [np.zeros(3), x], [], [], 0.0)
    # dG/dx0 = g(0,2)-g(2) = 5, dG/dx2 = 0.5*(g(0,2)-g(0)) + 0.5*(g(2)-0) = 1
    assert certificate_removal_fractional(dec, ft) == pytest.approx(max(1.0 / 5, 0.3 / 1))


@pytest.mark.parametrize("seed", range(6))
def test_fractional_certificate_soundness(seed):
    dec = _dec(seed)
    k = 3
    ft = dmcgp(dec, ConstraintFamily.cardinality(k), 50)
    opt = exact_opt(dec, k)
    r = certificate_removal_fractional(dec, ft)
    assert r < 1
    alpha = cc_curvature_total(dec.g)
    assert fractional_greedy_curvature(dec, ft, opt) <= alpha / (1 - r) + 1e-9


def test_fractional_zero_costs():
    g = random_coverage(np.random.default_rng(2), 6)
    dec = DecomposableFunction(g, np.zeros(6))
    ft = dmcgp(dec, ConstraintFamily.cardinality(2), 10)
    assert certificate_removal_fractional(dec, ft) == 0.0
    assert fractional_greedy_curvature(ModularFunction([1.0, 2.0]),
                                       dmcgp(ModularFunction([1.0, 2.0]), ConstraintFamily.cardinality(1), 5),
                                       exact_opt(ModularFunction([1.0, 2.0]), 1)) == 0.0


# ------------------------------------------------------------ divergence witness


def test_witness_found():
    dec = DecomposableFunction(ModularFunction([1.0, 1.0, 1.0]), [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        cF_divergence_witness(dec)
    # g saturates at 1.5 so any two elements cost more than they earn
    from subcurv.oracle import FunctionOracle

    g = FunctionOracle(3, lambda S: min(1.5, float(bin(S).count("1"))))
    dec = DecomposableFunction(g, [0.8, 0.8, 0.8])
    assert minimal_negative_set(dec) == 0b011
    w = cF_divergence_witness(dec)
    assert w.negative_set == [0, 1] and w.e_prime == 0
    assert w.ratio < -1e6 and w.denominator > 0
    assert w.steps <= 60


def test_witness_needs_positive_singletons():
    with pytest.raises(ValueError):
        cF_divergence_witness(ModularFunction([1.0, -1.0]))
