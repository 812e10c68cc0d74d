from dataclasses import replace

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from icanrank.embed import WalkConfig
from icanrank.evaluate import (
    HarnessConfig,
    Target,
    config_hash,
    kendall_tau,
    kendall_tau_bruteforce,
    run_benchmark,
    topk_degree_hist,
)
from icanrank.graph import karate_club
from icanrank.ican import IcanConfig
from icanrank.netgen import GenSpec
from icanrank.ranking import Ranking
from icanrank.sir import SirConfig

from conftest import star

small_ints = st.lists(st.integers(-3, 3), min_size=2, max_size=40)


class TestKendall:
    def test_identical(self):
        assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]).tau == 1.0

    def test_reversed(self):
        assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]).tau == -1.0

    def test_one_swap(self):
        assert kendall_tau([1, 2, 3], [1, 3, 2]).tau == pytest.approx(1 / 3)

    def test_ties_count_as_neither(self):
        r = kendall_tau([1, 1, 2], [1, 2, 3])
        assert (r.concordant, r.discordant, r.ties_x) == (2, 0, 1)
        assert r.tau == pytest.approx(2 / 3)

    def test_all_tied(self):
        r = kendall_tau([5, 5, 5], [1, 2, 3])
        assert r.tau == 0.0 and np.isnan(r.tau_b)

    def test_errors(self):
        with pytest.raises(ValueError):
            kendall_tau([1], [1])
        with pytest.raises(ValueError):
            kendall_tau([1, 2], [1, 2, 3])

    @settings(max_examples=200, deadline=None)
    @given(small_ints, st.data())
    def test_matches_bruteforce(self, x, data):
        y = data.draw(st.lists(st.integers(-3, 3), min_size=len(x), max_size=len(x)))
        a, b = kendall_tau(x, y), kendall_tau_bruteforce(x, y)
        assert a.concordant == b.concordant and a.discordant == b.discordant
        assert (a.ties_x, a.ties_y, a.ties_xy) == (b.ties_x, b.ties_y, b.ties_xy)
        assert a.tau == pytest.approx(b.tau, abs=1e-15)

    def test_tau_b_matches_scipy(self, rng):
        x = rng.integers(0, 6, 300)
        y = x + rng.integers(0, 4, 300)
        want = scipy.stats.kendalltau(x, y, variant="b").statistic
        assert kendall_tau(x, y).tau_b == pytest.approx(want, abs=1e-12)

    def test_tau_a_large(self, rng):
        x, y = rng.normal(size=3000), rng.normal(size=3000)
        y = x + y
        want = scipy.stats.kendalltau(x, y).statistic  # no ties, so a and b agree
        assert kendall_tau(x, y).tau == pytest.approx(want, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=30, unique=True), st.randoms())
    def test_monotone_invariance(self, x, r):
        x = np.array(x)
        y = np.array([r.random() for _ in x])
        base = kendall_tau(x, y).tau
        assert kendall_tau(np.exp(x / 100.0), y).tau == base
        assert kendall_tau(x, -y).tau == -base

    def test_symmetric(self, rng):
        x, y = rng.integers(0, 5, 50), rng.integers(0, 5, 50)
        assert kendall_tau(x, y) == kendall_tau_bruteforce(x, y)
        assert kendall_tau(x, y).tau == kendall_tau(y, x).tau


class TestTopK:
    def test_star(self):
        g = star(9)
        r = Ranking.from_scores(g.degrees.astype(float))
        hist, scatter = topk_degree_hist(g, r, 0.1)
        assert hist == [(9, 1.0)]
        assert scatter == [(0, 9, 9.0)]

    def test_fraction_sums(self):
        g = karate_club()
        r = Ranking.from_scores(-np.arange(34.0))
        hist, scatter = topk_degree_hist(g, r, 0.1)
        assert len(scatter) == 4
        assert sum(f for _, f in hist) == pytest.approx(1.0)
        assert [s[0] for s in scatter] == [0, 1, 2, 3]

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            topk_degree_hist(star(3), Ranking.from_scores(np.zeros(4)), 0.0)


SMALL = HarnessConfig(
    sir=SirConfig(sims_per_node=20),
    walk=WalkConfig(walks_per_node=2, walk_length=10, window=3, epochs=1),
    ican=IcanConfig(hidden=4, feature_dim=8, rank_hidden=4, outer_iters=2, inner_steps=5),
)


class TestHarness:
    def test_config_hash(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})
        assert len(config_hash({})) == 16

    def test_benchmark_deterministic(self):
        targets = [Target("karate", karate_club())]
        spec = GenSpec("BA", 60, 4.0)
        a = run_benchmark(spec, targets, ["ICAN", "DC"], [0, 1], SMALL)
        b = run_benchmark(spec, targets, ["ICAN", "DC"], [0, 1], SMALL)
        assert a.to_csv() == b.to_csv()
        assert not a.failures
        assert len(a.records) == 4
        # baselines ignore the model seed; labels are fixed per target
        dc = a.taus("DC", "karate")
        assert dc[0] == dc[1]
        lines = a.to_csv().splitlines()
        assert lines[0].startswith("# config_hash=") and lines[1] == "method,train_model,target,seed,tau"

    def test_report_write(self, tmp_path):
        import json

        rep = run_benchmark(GenSpec("BA", 40, 4.0), [Target("karate", karate_club())], ["DC", "EC"], [0], SMALL)
        j, c = rep.write(tmp_path)
        blob = json.loads(j.read_text())
        assert blob["config_hash"] == rep.config_hash
        assert set(blob["means"]) == {"DC", "EC"}
        assert c.read_text() == rep.to_csv()

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            run_benchmark(GenSpec("BA", 40, 4.0), [], ["Nope"], [0], SMALL)

    def test_label_seed_changes_truth(self):
        t = [Target("karate", karate_club())]
        spec = GenSpec("BA", 40, 4.0)
        a = run_benchmark(spec, t, ["DC"], [0], SMALL)
        b = run_benchmark(spec, t, ["DC"], [0], replace(SMALL, label_seed=1))
        assert a.config_hash != b.config_hash
        assert a.records[0].tau != b.records[0].tau
