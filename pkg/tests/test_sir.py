import numpy as np
import pytest

from icanrank.graph import Graph, degree_stats, karate_club
from icanrank.netgen import GenSpec, generate
from icanrank.sir import (
    DegenerateNetworkError,
    SirConfig,
    epidemic_threshold,
    influence_scores,
    label_header,
    resolve_gamma,
    simulate_once,
)

from conftest import complete, cycle, path, random_graph, star


def regular_ring(n: int, k: int) -> Graph:
    """Circulant k-regular graph (k even)."""
    return Graph.from_edges(n, [(i, (i + s) % n) for i in range(n) for s in range(1, k // 2 + 1)])


def p3_end_expectation(gamma: float) -> float:
    """Seed at an end of P3 with delta = 1: 1 + gamma + gamma^2 over the branches."""
    # branches: no infection (1), infect middle then not the end (2), both (3)
    return 1 * (1 - gamma) + 2 * gamma * (1 - gamma) + 3 * gamma * gamma


class TestEpidemicThreshold:
    def test_regular(self):
        assert epidemic_threshold(degree_stats(regular_ring(20, 4))) == pytest.approx(1 / 3, abs=0)

    @pytest.mark.parametrize("k", [2, 4, 6, 8])
    def test_regular_exact(self, k):
        assert epidemic_threshold(degree_stats(regular_ring(30, k))) == 1 / (k - 1)

    def test_triangle(self):
        assert epidemic_threshold(degree_stats(complete(3))) == 1.0

    def test_star(self):
        assert epidemic_threshold(degree_stats(star(4))) == pytest.approx(2 / 3, rel=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateNetworkError):
            epidemic_threshold(degree_stats(Graph.from_edges(4, [(0, 1), (2, 3)])))

    def test_gamma_clamped(self):
        gamma, gc = resolve_gamma(complete(3), SirConfig())
        assert gc == 1.0 and gamma == 1.0


class TestSimulateOnce:
    def test_no_spread(self):
        g = karate_club()
        assert simulate_once(g, 0, SirConfig(gamma=0.0), 5) == (1, False)

    def test_full_cascade(self):
        g = karate_club()
        for v in range(g.n):
            assert simulate_once(g, v, SirConfig(gamma=1.0), v)[0] == g.n

    def test_generator_argument(self):
        g = path(3)
        c, _ = simulate_once(g, 0, SirConfig(gamma=0.5), np.random.default_rng(0))
        assert 1 <= c <= 3

    def test_bad_seed_node(self):
        with pytest.raises(IndexError):
            simulate_once(path(3), 3, SirConfig(gamma=0.5), 0)

    def test_truncation_flag(self):
        g = path(50)
        c, t = simulate_once(g, 0, SirConfig(gamma=1.0, max_steps=5), 0)
        assert t and c < 50

    def test_partial_recovery_still_terminates(self):
        g = cycle(10)
        c, t = simulate_once(g, 0, SirConfig(gamma=0.7, delta=0.3), 11)
        assert not t and 1 <= c <= 10


class TestInfluenceScores:
    def test_full_cascade_karate(self):
        y = influence_scores(karate_club(), SirConfig(gamma=1.0, sims_per_node=3)).y
        assert np.array_equal(y, np.full(34, 34.0))

    def test_zero_gamma(self):
        y = influence_scores(karate_club(), SirConfig(gamma=0.0, sims_per_node=3)).y
        assert np.array_equal(y, np.ones(34))

    def test_p3_end_seed_converges(self):
        res = influence_scores(path(3), SirConfig(gamma=0.5, sims_per_node=100_000, seed=3), nodes=[0])
        assert p3_end_expectation(0.5) == 1.75
        assert abs(res.y[0] - 1.75) <= 0.01

    def test_middle_seed_expectation(self):
        res = influence_scores(path(3), SirConfig(gamma=0.3, sims_per_node=100_000, seed=1), nodes=[1])
        assert abs(res.y[0] - (1 + 2 * 0.3)) <= 0.01

    def test_bounds(self, rng):
        g = random_graph(rng, 40, 0.1)
        y = influence_scores(g, SirConfig(gamma=0.4, sims_per_node=20)).y
        assert np.all(y >= 1) and np.all(y <= g.n)

    def test_deterministic(self):
        g = generate(GenSpec("BA", 200, 4.0, seed=1))
        a = influence_scores(g, SirConfig(sims_per_node=20, seed=9)).y
        b = influence_scores(g, SirConfig(sims_per_node=20, seed=9)).y
        assert np.array_equal(a, b)
        c = influence_scores(g, SirConfig(sims_per_node=20, seed=10)).y
        assert not np.array_equal(a, c)

    def test_subset_matches_full(self):
        g = karate_club()
        cfg = SirConfig(sims_per_node=30, seed=2)
        full = influence_scores(g, cfg).y
        part = influence_scores(g, cfg, nodes=[5, 0, 33]).y
        np.testing.assert_array_equal(part, full[[5, 0, 33]])

    def test_default_gamma(self):
        g = karate_club()
        res = influence_scores(g, SirConfig(sims_per_node=2))
        assert res.gamma == pytest.approx(1.5 * res.gamma_c)
        assert "gamma=" in label_header(res)

    def test_hubs_spread_more(self):
        g = star(10)
        y = influence_scores(g, SirConfig(gamma=0.5, sims_per_node=2000)).y
        assert y[0] > y[1:].max()


class TestMonotonicity:
    @pytest.mark.parametrize("seed", range(5))
    def test_non_decreasing_in_gamma(self, seed):
        g = random_graph(np.random.default_rng(seed), 30, 0.12)
        gammas = np.linspace(0.0, 1.0, 11)
        for v in range(0, g.n, 7):
            for rep in range(20):
                counts = [simulate_once(g, v, SirConfig(gamma=gm), 1000 * seed + rep)[0] for gm in gammas]
                assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_mean_non_decreasing(self):
        g = karate_club()
        ys = [influence_scores(g, SirConfig(gamma=gm, sims_per_node=50, seed=4)).y for gm in (0.1, 0.2, 0.4)]
        assert np.all(ys[0] <= ys[1]) and np.all(ys[1] <= ys[2])


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SirConfig(sims_per_node=0)
        with pytest.raises(ValueError):
            SirConfig(delta=1.5)
