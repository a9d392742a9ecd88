from fractions import Fraction

import numpy as np
import pytest

from pagerank_limits.errors import ConfigError, ResourceError, UsageError
from pagerank_limits.generators import BiDegreeLaw, RngStream
from pagerank_limits.graph import canonical_code
from pagerank_limits.limits import (
    LimitTree,
    PolyaParams,
    attach_generalized_weights,
    gw_root_rank_pool,
    malthusian,
    read_pool_csv,
    root_pagerank,
    root_pagerank_generalized,
    sample_ctbp_limit,
    sample_gw_limit,
    sample_polya_limit,
    solve_fixed_point_mc,
    tree_neighborhood,
    write_pool_csv,
)

from _oracles import (
    exact_gw_mean,
    tree_root_rank_enum,
    tree_root_rank_enum_generalized,
)

UNIFORM33 = BiDegreeLaw([(h, l, 1 / 9) for h in (1, 2, 3) for l in (1, 2, 3)])
PATH_LAW = BiDegreeLaw([(1, 1, 1.0)])


class TestMalthusian:
    def test_closed_form_oracle(self):
        # the defining series telescopes to rate/(a-1), so a* = 1 + rate
        assert malthusian(1.0) == pytest.approx(2.0, abs=1e-9)
        assert malthusian(1.5) == pytest.approx(2.5, abs=1e-9)

    def test_random_rates(self):
        rng = RngStream(41).generator()
        for _ in range(20):
            theta = float(rng.uniform(0.1, 5.0))
            alpha = malthusian(theta)
            assert alpha == pytest.approx(1.0 + theta, abs=1e-8)
            # defining equation via the closed form
            assert theta / (alpha - 1.0) == pytest.approx(1.0, abs=1e-7)

    def test_bad_rate(self):
        with pytest.raises(ConfigError):
            malthusian(0.0)


class TestGwSampler:
    def test_deterministic_path(self):
        rng = RngStream(42).generator()
        t = sample_gw_limit(PATH_LAW, 4, rng)
        assert t.size == 5
        assert t.mark.tolist() == [1] * 5
        assert t.node_depth.tolist() == [0, 1, 2, 3, 4]
        assert root_pagerank(t, 0.5, 4) == pytest.approx(1 - 0.5 ** 5, abs=1e-15)

    def test_star_law_kills_dangling_marks(self):
        law = BiDegreeLaw([(0, 2, 0.5), (2, 0, 0.5)])
        rng = RngStream(43).generator()
        for _ in range(50):
            t = sample_gw_limit(law, 3, rng)
            assert (t.mark[1:] >= 1).all()  # non-root marks never 0

    def test_truncation_leaves_spawn_nothing(self):
        rng = RngStream(44).generator()
        t = sample_gw_limit(UNIFORM33, 2, rng)
        assert t.max_depth <= 2

    def test_mean_matches_exact_fraction_oracle(self):
        entries = [(h, l, Fraction(1, 9)) for h in (1, 2, 3) for l in (1, 2, 3)]
        want = exact_gw_mean(entries, Fraction(1, 2), 3)
        assert want == 1 - Fraction(1, 2) ** 4  # balanced dangling-free law
        rng = RngStream(45).generator()
        vals = [root_pagerank(sample_gw_limit(UNIFORM33, 3, rng), 0.5, 3)
                for _ in range(4000)]
        se = np.std(vals) / np.sqrt(len(vals))
        assert abs(np.mean(vals) - float(want)) < 3 * se

    def test_dangling_law_mean_oracle(self):
        # mass at out-degree 0 breaks the geometric-series identity
        entries = [(0, 1, Fraction(1, 4)), (1, 1, Fraction(1, 2)),
                   (2, 1, Fraction(1, 4)), (1, 0, Fraction(0))]
        entries = [(h, l, p) for h, l, p in entries if p > 0]
        law = BiDegreeLaw([(0, 1, 0.25), (1, 1, 0.5), (2, 1, 0.25)])
        want = exact_gw_mean(entries, Fraction(1, 2), 2)
        assert want != 1 - Fraction(1, 2) ** 3
        rng = RngStream(46).generator()
        vals = [root_pagerank(sample_gw_limit(law, 2, rng), 0.5, 2)
                for _ in range(4000)]
        se = np.std(vals) / np.sqrt(len(vals))
        assert abs(np.mean(vals) - float(want)) < 3 * se


class TestRootRank:
    def test_root_only(self):
        t = LimitTree(parent=np.array([-1]), mark=np.array([3]),
                      node_depth=np.array([0]), truncation_depth=None)
        assert root_pagerank(t, 0.3) == pytest.approx(0.7)

    def test_matches_path_enumeration(self):
        rng = RngStream(47).generator()
        for _ in range(40):
            t = sample_gw_limit(UNIFORM33, 3, rng)
            for N in range(4):
                got = root_pagerank(t, 0.5, N)
                want = tree_root_rank_enum(t, 0.5, N)
                assert abs(got - want) < 1e-12

    def test_monotone_in_depth(self):
        rng = RngStream(48).generator()
        for _ in range(20):
            t = sample_gw_limit(UNIFORM33, 4, rng)
            vals = [root_pagerank(t, 0.7, N) for N in range(5)]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_lower_bound(self):
        rng = RngStream(49).generator()
        for _ in range(30):
            t = sample_gw_limit(UNIFORM33, 2, rng)
            kids = np.nonzero(t.node_depth == 1)[0]
            bound = 0.5 * (1 + 0.5 * sum(1.0 / t.mark[k] for k in kids))
            assert root_pagerank(t, 0.5, 2) >= bound - 1e-12

    def test_depth_beyond_truncation_rejected(self):
        t = sample_gw_limit(UNIFORM33, 2, RngStream(50).generator())
        with pytest.raises(UsageError):
            root_pagerank(t, 0.5, 3)


class TestGeneralizedRank:
    def test_constant_reduction(self):
        rng = RngStream(51).generator()
        const_c = lambda r, size: np.full(size, 0.5)
        const_b = lambda r, size: np.full(size, 0.5)
        for _ in range(20):
            t = sample_gw_limit(UNIFORM33, 3, rng)
            tw = attach_generalized_weights(t, const_c, const_b, rng)
            assert root_pagerank_generalized(tw, 3) == pytest.approx(
                root_pagerank(t, 0.5, 3), abs=1e-12)

    def test_zero_c_returns_root_b(self):
        t = sample_gw_limit(UNIFORM33, 2, RngStream(52).generator())
        tw = attach_generalized_weights(
            t, lambda r, s: np.zeros(s), lambda r, s: np.full(s, 7.0),
            RngStream(53).generator())
        assert root_pagerank_generalized(tw, 2) == pytest.approx(7.0)

    def test_two_level_hand_recursion(self):
        # root with two children, marks 2 and 4
        t = LimitTree(parent=np.array([-1, 0, 0]), mark=np.array([1, 2, 4]),
                      node_depth=np.array([0, 1, 1]), truncation_depth=1)
        t.cvals = np.array([0.9, 0.5, 0.8])
        t.bvals = np.array([0.1, 0.2, 0.3])
        want = 0.1 + (0.5 / 2) * 0.2 + (0.8 / 4) * 0.3
        assert root_pagerank_generalized(t, 1) == pytest.approx(want, abs=1e-15)

    def test_matches_enumeration(self):
        rng = RngStream(54).generator()
        for _ in range(25):
            t = sample_gw_limit(UNIFORM33, 3, rng)
            tw = attach_generalized_weights(
                t, lambda r, s: r.uniform(0, 0.9, s),
                lambda r, s: r.exponential(0.2, s), rng)
            got = root_pagerank_generalized(tw, 3)
            want = tree_root_rank_enum_generalized(tw, 3)
            assert abs(got - want) < 1e-12

    def test_c_at_least_one_rejected(self):
        t = sample_gw_limit(UNIFORM33, 1, RngStream(55).generator())
        tw = attach_generalized_weights(
            t, lambda r, s: np.full(s, 1.0), lambda r, s: np.zeros(s),
            RngStream(56).generator())
        with pytest.raises(ConfigError):
            root_pagerank_generalized(tw, 1)

    def test_missing_weights(self):
        t = sample_gw_limit(UNIFORM33, 1, RngStream(57).generator())
        with pytest.raises(UsageError):
            root_pagerank_generalized(t, 1)


class TestCtbpLimit:
    def test_root_only_probability(self):
        # P(no birth before the window) = a*/(a* + theta) = 2/3 for theta=1
        rng = RngStream(58).generator()
        M = 6000
        lone = sum(sample_ctbp_limit(1.0, 2.0, rng).size == 1 for _ in range(M))
        assert abs(lone / M - 2 / 3) < 3 * np.sqrt(2 / 9 / M)

    def test_window_distribution(self):
        rng = RngStream(59).generator()
        windows = [sample_ctbp_limit(1.0, 2.0, rng).window for _ in range(4000)]
        assert abs(np.mean(windows) - 0.5) < 3 * 0.5 / np.sqrt(4000)

    def test_all_marks_one(self):
        rng = RngStream(60).generator()
        for _ in range(50):
            t = sample_ctbp_limit(1.0, 2.0, rng)
            assert (t.mark == 1).all()
            assert (t.birth_time < t.window).all()

    def test_rank_collapses_to_generation_sum(self):
        rng = RngStream(61).generator()
        c = 0.5
        for _ in range(50):
            t = sample_ctbp_limit(1.0, 2.0, rng)
            zs = np.bincount(t.node_depth)
            want = (1 - c) * sum((c ** k) * z for k, z in enumerate(zs.tolist()))
            assert root_pagerank(t, c) == pytest.approx(want, abs=1e-12)

    def test_node_cap(self):
        rng = RngStream(62).generator()
        with pytest.raises(ResourceError):
            for _ in range(5000):
                sample_ctbp_limit(1.0, 2.0, rng, max_nodes=3)

    def test_rank_monotone_up_to_full_value(self):
        rng = RngStream(76).generator()
        for _ in range(30):
            t = sample_ctbp_limit(1.0, 2.0, rng)
            full = root_pagerank(t, 0.5)
            prev = 0.0
            for N in range(t.max_depth + 1):
                v = root_pagerank(t, 0.5, N)
                assert prev - 1e-12 <= v <= full + 1e-12
                prev = v
            assert prev == pytest.approx(full, abs=1e-12)


class TestPolyaLimit:
    def test_params(self):
        with pytest.raises(ConfigError, match="m >= 2"):
            PolyaParams(m=1, delta=0.0)
        p = PolyaParams(m=2, delta=1.0)
        assert p.chi == pytest.approx(0.6)
        assert p.psi == pytest.approx(2 / 3)

    def test_root_position_law(self):
        # P(x <= t) = t^(1/chi)
        rng = RngStream(63).generator()
        p = PolyaParams(m=2, delta=1.0)
        xs = np.array([sample_polya_limit(p, 0, rng).position[0] for _ in range(4000)])
        for t in (0.2, 0.5, 0.8):
            want = t ** (1 / p.chi)
            got = (xs <= t).mean()
            assert abs(got - want) < 3 * np.sqrt(want * (1 - want) / xs.size) + 1e-3

    def test_root_offspring_mean_given_position(self):
        # conditional mean (m+delta)(x^-psi - 1); forced x = 0.25 with delta=0
        p = PolyaParams(m=2, delta=0.0)

        class ForcedFirstUniform:
            def __init__(self, inner, value):
                self.inner = inner
                self.value = value

            def random(self, *args, **kw):
                if self.value is not None:
                    v, self.value = self.value, None
                    return v
                return self.inner.random(*args, **kw)

            def __getattr__(self, name):
                return getattr(self.inner, name)

        rng = RngStream(64).generator()
        forced = 0.25 ** (1 / p.chi)
        counts = []
        for _ in range(3000):
            t = sample_polya_limit(p, 1, ForcedFirstUniform(rng, forced))
            assert t.position[0] == pytest.approx(0.25)
            counts.append(t.size - 1)
        want = (p.m + p.delta) * (0.25 ** (-p.psi) - 1.0)  # = 3m = 6
        assert want == pytest.approx(6.0)
        se = np.std(counts) / np.sqrt(len(counts))
        assert abs(np.mean(counts) - want) < 3 * se

    def test_marks_and_positions(self):
        rng = RngStream(65).generator()
        p = PolyaParams(m=3, delta=-0.5)
        for _ in range(30):
            t = sample_polya_limit(p, 2, rng)
            assert (t.mark == 3).all()
            for i in range(1, t.size):
                assert t.position[i] > t.position[int(t.parent[i])]
                assert t.position[i] <= 1.0
            assert t.strength.size == t.size  # leaves carry strengths too


class TestFixedPointPool:
    def test_deterministic_law_converges_to_one(self):
        rng = RngStream(66).generator()
        for depth in (0, 1, 3, 8):
            pool = solve_fixed_point_mc(PATH_LAW, 0.5, depth, 200, rng)
            assert np.allclose(pool, 1 - 0.5 ** (depth + 1), atol=1e-12)

    def test_leaf_only_law(self):
        law = BiDegreeLaw([(1, 0, 1.0)], mean_tol=float("inf"))
        pool = solve_fixed_point_mc(law, 0.3, 4, 200, RngStream(67).generator())
        assert np.allclose(pool, 0.7, atol=1e-12)

    def test_matches_direct_sampler(self):
        from pagerank_limits.census import TailSample, ks_distance

        rng = RngStream(68).generator()
        pool = solve_fixed_point_mc(UNIFORM33, 0.5, 4, 30_000, rng)
        direct = gw_root_rank_pool(UNIFORM33, 0.5, 4, 30_000, rng)
        assert ks_distance(TailSample(pool), TailSample(direct)) < 0.02

    def test_direct_matches_object_sampler(self):
        from pagerank_limits.census import TailSample, ks_distance

        rng = RngStream(69).generator()
        direct = gw_root_rank_pool(UNIFORM33, 0.5, 3, 5000, rng)
        objs = np.array([
            root_pagerank(sample_gw_limit(UNIFORM33, 3, rng), 0.5, 3)
            for _ in range(5000)
        ])
        assert ks_distance(TailSample(direct), TailSample(objs)) < 0.04

    def test_generalized_pool_matches_generalized_direct(self):
        from pagerank_limits.census import TailSample, ks_distance

        rng = RngStream(70).generator()
        c_sampler = lambda r, s: r.uniform(0, 0.85, s)
        b_sampler = lambda r, s: r.exponential(0.15, s)
        pool = solve_fixed_point_mc(UNIFORM33, None, 4, 30_000, rng,
                                    c_sampler=c_sampler, b_sampler=b_sampler)
        direct = gw_root_rank_pool(UNIFORM33, None, 4, 30_000, rng,
                                   c_sampler=c_sampler, b_sampler=b_sampler)
        assert ks_distance(TailSample(pool), TailSample(direct)) < 0.02

    def test_needs_c_or_samplers(self):
        with pytest.raises(ConfigError):
            solve_fixed_point_mc(UNIFORM33, None, 3, 100, RngStream(71).generator())


class TestTreeNeighborhood:
    def test_valid_and_codes_stable(self):
        rng = RngStream(72).generator()
        for _ in range(20):
            t = sample_gw_limit(UNIFORM33, 2, rng)
            nb = tree_neighborhood(t, 2)
            nb.validate()
            assert canonical_code(nb).startswith(b"T")

    def test_depth_zero_class(self):
        t = sample_ctbp_limit(1.0, 2.0, RngStream(73).generator())
        nb = tree_neighborhood(t, 0)
        assert nb.size == 1 and nb.marks == [1]

    def test_beyond_truncation_rejected(self):
        t = sample_gw_limit(UNIFORM33, 1, RngStream(74).generator())
        with pytest.raises(UsageError):
            tree_neighborhood(t, 2)


class TestPoolCsv:
    def test_roundtrip(self, tmp_path):
        vals = RngStream(75).generator().random(100)
        write_pool_csv(vals, tmp_path / "pool.csv")
        back = read_pool_csv(tmp_path / "pool.csv")
        assert np.array_equal(back, vals)
