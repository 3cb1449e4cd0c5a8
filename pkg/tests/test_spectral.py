import math

import numpy as np
import pytest

from vvcantor import (Catalog, ContractionMap, DIRICHLET,
                      InsufficientDataError, MonteCarloNeckEvaluator,
                      NoisyRootError, WeightedIFS, Xoshiro256StarStar,
                      assemble, bracketing_check, build_tree,
                      cutset_stats_check, cut_set, decompose,
                      empirical_exponent, f_exact_homogeneous, f_monte_carlo,
                      gamma_exact_homogeneous, inertia_counts, solve_gamma,
                      solve_gamma_recursive, stream_seed)
from vvcantor.vtree import sample_environment

GAMMA_CANTOR = math.log(2.0) / math.log(6.0)


def rng_for(seed):
    return Xoshiro256StarStar(stream_seed(seed, 0))


# ---------------------------------------------------------------------------
# exact evaluators and roots

def test_f_exact_cantor_root_and_origin(cantor):
    assert abs(f_exact_homogeneous(cantor, GAMMA_CANTOR)) < 1e-14
    assert abs(f_exact_homogeneous(cantor, 1e-12) - math.log(2.0)) < 1e-10


def test_f_exact_strictly_decreasing(two_system):
    xs = np.linspace(0.05, 2.0, 40)
    vals = [f_exact_homogeneous(two_system, float(x)) for x in xs]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_exact_two_system_root_against_scalar_oracle(two_system):
    # independent oracle: bisection on the product form of the root equation
    def product_form(g):
        return 0.5 * math.log(2.0 * 6.0 ** -g) + 0.5 * math.log(3.0 * 15.0 ** -g)

    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if product_form(mid) > 0:
            lo = mid
        else:
            hi = mid
    oracle = 0.5 * (lo + hi)
    rep = gamma_exact_homogeneous(two_system, tolerance=1e-13)
    assert rep.method == "exact-homogeneous"
    assert abs(rep.gamma - oracle) < 1e-12


def test_solve_gamma_cantor_closed_form(cantor):
    rep = gamma_exact_homogeneous(cantor)
    assert rep.method == "exact-selfsimilar"
    assert abs(rep.gamma - GAMMA_CANTOR) <= 1e-10


def test_solve_gamma_lebesgue_weyl_exponent(lebesgue):
    rep = gamma_exact_homogeneous(lebesgue)
    assert abs(rep.gamma - 0.5) <= 1e-10


def test_recursive_root(cantor, two_system):
    assert abs(solve_gamma_recursive(cantor) - GAMMA_CANTOR) <= 1e-10
    # oracle: bisect sum_j p_j sum_i (r m)^g = 1 directly
    def mean_form(g):
        return 0.5 * (2.0 * 6.0 ** -g) + 0.5 * (3.0 * 15.0 ** -g) - 1.0

    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_form(mid) > 0:
            lo = mid
        else:
            hi = mid
    assert abs(solve_gamma_recursive(two_system) - 0.5 * (lo + hi)) < 1e-10


def test_exponent_ordering_diagnostic(two_system):
    hom = gamma_exact_homogeneous(two_system).gamma
    rec = solve_gamma_recursive(two_system)
    ev = MonteCarloNeckEvaluator(two_system, 2, 2000, master_seed=11)
    mc = solve_gamma(ev).gamma
    for g in (hom, rec, mc):
        assert 0.0 < g < 1.0
    assert hom <= rec  # convexity of the mixture


# ---------------------------------------------------------------------------
# Monte Carlo estimates

def test_single_type_blocks_have_unit_length(two_system):
    ev = MonteCarloNeckEvaluator(two_system, 1, 200, master_seed=3)
    assert (ev.neck_waits == 1).all()


def test_single_system_block_identity(cantor):
    # one system: each block's log sum is n(1) * log(sum of map factors)
    ev = MonteCarloNeckEvaluator(cantor, 2, 100, master_seed=5)
    x = 0.3
    per = math.log(2.0 * (1 / 6) ** x)
    ls = ev.log_sums(x)
    assert np.allclose(ls, ev.neck_waits * per, rtol=1e-12)


def test_monte_carlo_matches_exact_within_3se(two_system):
    ev = MonteCarloNeckEvaluator(two_system, 1, 10_000, master_seed=7)
    for x in (0.15, 0.25, 0.35, 0.45, 0.6):
        fhat, se = ev.f(x)
        assert se > 0
        assert abs(fhat - f_exact_homogeneous(two_system, x)) <= 3 * se


def test_monte_carlo_deterministic(two_system):
    a = f_monte_carlo(two_system, 2, 0.4, 300, master_seed=9)
    b = f_monte_carlo(two_system, 2, 0.4, 300, master_seed=9)
    assert a == b


def test_common_random_numbers_make_estimate_decreasing(two_system):
    ev = MonteCarloNeckEvaluator(two_system, 2, 500, master_seed=13)
    xs = np.linspace(0.1, 1.5, 15)
    vals = [ev.f(float(x))[0] for x in xs]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_mc_root_interval_covers_exact_root(two_system):
    ev = MonteCarloNeckEvaluator(two_system, 1, 10_000, master_seed=7)
    rep = solve_gamma(ev)
    exact = gamma_exact_homogeneous(two_system).gamma
    assert rep.ci is not None
    assert rep.ci[0] <= exact <= rep.ci[1]
    assert rep.method == "monte-carlo-neck"
    assert rep.blocks == 10_000


def test_f_by_root_type_reports_every_type(two_system):
    ev = MonteCarloNeckEvaluator(two_system, 2, 400, master_seed=15)
    cond = ev.f_by_root_type(0.5)
    assert set(cond) == {0, 1}


def test_neck_timeout_with_tiny_cap(two_system):
    from vvcantor import NeckTimeoutError

    with pytest.raises(NeckTimeoutError):
        # V=2 first environments are rarely necks; a cap of 1 trips fast
        MonteCarloNeckEvaluator(two_system, 2, 50, master_seed=1, env_cap=1)


def test_thread_count_does_not_change_results(two_system):
    a = MonteCarloNeckEvaluator(two_system, 2, 200, master_seed=31, threads=1)
    b = MonteCarloNeckEvaluator(two_system, 2, 200, master_seed=31, threads=4)
    assert np.array_equal(a.neck_waits, b.neck_waits)
    assert a.f(0.5) == b.f(0.5)


def test_noisy_root_raised_when_growth_capped():
    # mixture dominated by a system whose root sits exactly on a probe point
    cat = Catalog(0.0, 1.0, (
        WeightedIFS((ContractionMap(0.5, 0.0), ContractionMap(0.5, 0.5)),
                    (0.5, 0.5)),
        WeightedIFS((ContractionMap(1 / 3, 0.0), ContractionMap(1 / 3, 2 / 3)),
                    (0.5, 0.5)),
    ), (0.9, 0.1))
    for seed in range(200):
        ev = MonteCarloNeckEvaluator(cat, 1, 4, master_seed=seed)
        v, se = ev.f(0.5)
        if se > 0 and abs(v) <= 3 * se:  # ambiguous at the first halving probe
            with pytest.raises(NoisyRootError):
                solve_gamma(ev, max_growth=1)
            return
    pytest.fail("no seed produced an ambiguous probe")


def test_block_average_converges_along_one_sequence(two_system):
    # running a single environment sequence through 20 necks is the same
    # estimator as averaging 20 blocks
    from vvcantor import build_tree, scale_sum_at_neck

    def envs_until(v, k, rng):
        envs, necks = [], 0
        while necks < k:
            e = sample_environment(two_system, v, rng)
            envs.append(e)
            necks += e.is_neck
        return envs

    x = 0.5
    rng = rng_for(123)
    root = rng.randint(2)
    envs = envs_until(2, 20, rng)
    deep = build_tree(two_system, 2, 0, root_type=root, environments=envs)
    lhs = scale_sum_at_neck(deep, x, 20).log_direct / 20.0
    ev = MonteCarloNeckEvaluator(two_system, 2, 2000, master_seed=99)
    fhat, se = ev.f(x)
    se_20 = se * math.sqrt(2000 / 20.0)
    assert abs(lhs - fhat) <= 5 * se_20


# ---------------------------------------------------------------------------
# empirical slope

def test_empirical_exponent_insufficient_data():
    xs = np.geomspace(1, 100, 20)
    with pytest.raises(InsufficientDataError):
        empirical_exponent((xs, np.zeros(20)), (1, 100))
    with pytest.raises(InsufficientDataError):
        empirical_exponent((xs, np.full(20, 5.0)), (1, 100))  # one repeated count
    with pytest.raises(InsufficientDataError):
        empirical_exponent((xs[:4], np.arange(4) + 1), (1, 100))


def test_empirical_exponent_recovers_power_law():
    xs = np.geomspace(10, 1e5, 40)
    counts = np.floor(2.0 * xs ** 0.37)
    fit = empirical_exponent((xs, counts), (10, 1e5))
    assert abs(fit.slope - 0.37) < 0.01
    assert fit.n_points == 40


# ---------------------------------------------------------------------------
# bracketing and cut-set statistics

def _feasible_tree(catalog, v, k, depth, seeds, node_cap=2_000_000):
    from vvcantor import DepthExhaustedError, TreeTooLargeError

    for seed in seeds:
        try:
            tree = build_tree(catalog, v, depth, rng=rng_for(seed), node_cap=node_cap)
            cut_set(tree, k)
            return tree, seed
        except (DepthExhaustedError, TreeTooLargeError):
            continue
    pytest.fail("no feasible tree in the seed range")


def test_bracketing_k0_reduces_to_center(two_system):
    tree, _ = _feasible_tree(two_system, 2, 1, 10, range(40))
    xs = np.geomspace(2.0, 1e4, 8)
    res = bracketing_check(tree, 0, xs, 8)
    assert np.array_equal(res.lower, res.center_dirichlet)
    assert np.array_equal(res.upper, res.center_neumann)
    assert res.n_fail == 0 and res.n_warn == 0


def test_bracketing_holds_on_random_trees(two_system):
    tree, _ = _feasible_tree(two_system, 2, 3, 12, range(40))
    xs = np.geomspace(2.0, 5e4, 16)
    for k in (1, 2, 3):
        cs = cut_set(tree, k)
        level = min(tree.depth, int(cs.levels.max()) + 3)
        res = bracketing_check(tree, k, xs, level)
        assert res.n_fail == 0
        assert (res.lower <= res.center_dirichlet).all()
        assert (res.center_dirichlet <= res.center_neumann).all()
        assert (res.center_neumann <= res.upper).all()


def test_bracketing_small_shift_zeroes_dirichlet_side(two_system):
    tree, _ = _feasible_tree(two_system, 2, 1, 10, range(40))
    xs = np.array([0.25, 0.5])  # below 1/(b-a) = 1
    res = bracketing_check(tree, 1, xs, min(tree.depth, 9))
    assert (res.lower == 0).all()
    assert (res.center_dirichlet == 0).all()


def test_cutset_stats_cantor(cantor):
    tree = build_tree(cantor, 1, 10, rng=rng_for(1))
    rows = cutset_stats_check(tree, range(0, 6), level=8)
    for row in rows:
        assert row.chain_lower_ok and row.chain_upper_ok
        assert row.scale_lower_ok  # harmonic scale >= e^k
        if row.k >= 1:
            level = math.ceil(row.k / math.log(6.0))
            assert row.harmonic_scale == 6.0 ** level
            assert row.size == 2 ** level
    assert rows[0].size == 1 and rows[0].harmonic_scale == 1.0


def test_cutset_stats_reports_count_ratios(two_system):
    tree, _ = _feasible_tree(two_system, 2, 2, 10, range(40))
    rows = cutset_stats_check(tree, [1, 2], level=min(10, tree.depth))
    for row in rows:
        assert row.nd_at_scale is not None
        assert row.ratio_nd_over_size is not None
