import numpy as np
import pytest

from botma.cma import CmaConfig
from botma.ga import GaConfig
from botma.grid import GridSpec, grid_cell_count
from botma.harness import (
    RunRecord,
    check_thresholds,
    compare_solvers,
    noise_sweep,
    run_monte_carlo,
    run_streams,
    summarize,
)
from botma.objective import Candidate
from botma.scenarios import load_preset

SMALL_CMA = CmaConfig(feval_budget=2000)
COARSE = GridSpec.from_counts((14, 18, 10))
TINY_GA = GaConfig(population_size=8, narrowing_generations=2, main_generations=3, inner_runs=2, outer_runs=1)


@pytest.fixture(scope="module")
def trial08():
    return load_preset("trial08")


class TestSummarize:
    def test_two_point(self):
        recs = [RunRecord(0, 4000.0, 90.0, 10.0, 0.0, 1), RunRecord(1, 4012.0, 90.0, 10.0, 0.0, 1)]
        s = summarize(recs, Candidate(4006.0, 90.0, 10.0), "x", 0.0)
        assert s.mean["r0"] == 4006.0
        assert s.std["r0"] == pytest.approx(8.485, abs=1e-3)
        assert s.abs_dev["r0"] == 0.0
        assert s.total_fevals == 2

    def test_single_run(self):
        s = summarize([RunRecord(0, 4100.0, 91.0, 9.0, 0.1, 5)], Candidate(4006.0, 90.0, 10.0), "x", 0.0)
        assert s.std == {"r0": 0.0, "course": 0.0, "speed": 0.0}
        assert s.mean == {"r0": 4100.0, "course": 91.0, "speed": 9.0}
        assert s.abs_dev["r0"] == pytest.approx(94.0)

    def test_course_wraps_around_truth(self):
        recs = [RunRecord(0, 1.0, 359.0, 1.0, 0.0, 1), RunRecord(1, 1.0, 1.0, 1.0, 0.0, 1)]
        s = summarize(recs, Candidate(1.0, 0.0, 1.0), "x", 0.0)
        assert s.mean["course"] == pytest.approx(0.0)
        assert s.std["course"] == pytest.approx(np.sqrt(2.0))

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([], Candidate(1.0, 1.0, 1.0), "x", 0.0)


class TestStreams:
    def test_independent_of_run_count(self):
        a = run_streams(5, 3)[0].random(4)
        b = run_streams(5, 3)[0].random(4)
        c = run_streams(5, 4)[0].random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_noise_and_solver_differ(self):
        noise, solver = run_streams(0, 0)
        assert noise.random() != solver.random()


class TestMonteCarlo:
    def test_m1(self, trial08):
        s = run_monte_carlo(SMALL_CMA, trial08, 1, master_seed=3)
        assert s.runs == 1
        assert s.std == {"r0": 0.0, "course": 0.0, "speed": 0.0}
        r = s.records[0]
        assert s.mean == {"r0": r.r0, "course": r.course, "speed": r.speed}

    def test_prefix_stable(self, trial08):
        three = run_monte_carlo(SMALL_CMA, trial08, 3, master_seed=9)
        five = run_monte_carlo(SMALL_CMA, trial08, 5, master_seed=9)
        assert [(r.r0, r.cost) for r in three.records] == [(r.r0, r.cost) for r in five.records[:3]]

    def test_reproducible(self, trial08):
        a = run_monte_carlo(SMALL_CMA, trial08, 4, master_seed=1)
        b = run_monte_carlo(SMALL_CMA, trial08, 4, master_seed=1)
        assert (a.mean, a.std, a.total_fevals) == (b.mean, b.std, b.total_fevals)

    def test_parallel_matches_serial(self, trial08):
        a = run_monte_carlo(SMALL_CMA, trial08, 3, master_seed=2, jobs=1)
        b = run_monte_carlo(SMALL_CMA, trial08, 3, master_seed=2, jobs=2)
        assert (a.mean, a.std, a.total_fevals) == (b.mean, b.std, b.total_fevals)

    def test_counter_conservation(self, trial08):
        s = run_monte_carlo(SMALL_CMA, trial08, 3)
        assert s.total_fevals == sum(r.fevals for r in s.records) == 3 * 2000

    def test_noiseless_grid_is_degenerate(self, trial07):
        s = run_monte_carlo(COARSE, trial07, 4)
        assert s.std == {"r0": 0.0, "course": 0.0, "speed": 0.0}
        assert len({(r.r0, r.course, r.speed) for r in s.records}) == 1

    def test_ga_runs(self, trial07):
        s = run_monte_carlo(TINY_GA, trial07, 2)
        assert s.solver == "ga"
        assert s.total_fevals == 2 * TINY_GA.fevals_per_run()
        assert all("narrowing_misses" in r.details for r in s.records)

    def test_bad_m(self, trial07):
        with pytest.raises(ValueError):
            run_monte_carlo(COARSE, trial07, 0)


class TestSweep:
    def test_rows(self, trial07):
        res = noise_sweep(SMALL_CMA, trial07, [0, 0.5, 1, 2], 2)
        assert res.sigmas == [0.0, 0.5, 1.0, 2.0]
        assert [s.noise_sigma for _, s in res.rows] == res.sigmas

    def test_zero_only_matches_mc(self, trial07):
        res = noise_sweep(SMALL_CMA, trial07, [0], 3, master_seed=4)
        mc = run_monte_carlo(SMALL_CMA, trial07, 3, master_seed=4)
        assert res.rows[0][1].mean == mc.mean
        assert res.rows[0][1].std == mc.std

    @pytest.mark.parametrize("sigmas", [[], [1, 0.5], [0.5, 0.5]])
    def test_rejects_unsorted(self, trial07, sigmas):
        with pytest.raises(ValueError):
            noise_sweep(SMALL_CMA, trial07, sigmas, 1)


class TestCompare:
    def test_ratio_from_counters(self, trial08):
        cmp = compare_solvers(trial08, {"ga": TINY_GA, "cma": SMALL_CMA}, 1)
        assert cmp.fevals("ga") == TINY_GA.fevals_per_run()
        assert cmp.feval_ratio("ga", "cma") == TINY_GA.fevals_per_run() / 2000

    def test_same_solver_twice(self, trial08):
        cmp = compare_solvers(trial08, [SMALL_CMA, SMALL_CMA], 2, master_seed=6)
        assert [label for label, _ in cmp.rows] == ["cma", "cma2"]
        a, b = cmp.summary("cma"), cmp.summary("cma2")
        assert (a.mean, a.std) == (b.mean, b.std)

    def test_grid_fevals(self, trial07):
        cmp = compare_solvers(trial07, {"grid": COARSE, "cma": SMALL_CMA}, 2)
        assert cmp.fevals("grid") == 2 * grid_cell_count(COARSE)

    def test_needs_two(self, trial07):
        with pytest.raises(ValueError):
            compare_solvers(trial07, [COARSE], 1)

    def test_unknown_label(self, trial07):
        cmp = compare_solvers(trial07, {"a": COARSE, "b": COARSE}, 1)
        with pytest.raises(KeyError):
            cmp.summary("c")


class TestThresholds:
    def test_pass_and_fail(self, trial07):
        s = run_monte_carlo(COARSE, trial07, 2)
        assert check_thresholds(s, {"max_std": {"r0": 1.0}}) == []
        assert check_thresholds(s, {"max_abs_dev": {"r0": 1e-6}})

    def test_monotone(self, trial07):
        res = noise_sweep(SMALL_CMA, trial07, [0, 5], 3)
        lo, hi = res.rows[0][1].std["r0"], res.rows[1][1].std["r0"]
        problems = check_thresholds(res, {"monotone_std": ["r0"]})
        assert bool(problems) == (hi < lo)

    def test_unknown_key(self, trial07):
        s = run_monte_carlo(COARSE, trial07, 1)
        assert check_thresholds(s, {"bogus": 1}) == ["unknown threshold keys: bogus"]
