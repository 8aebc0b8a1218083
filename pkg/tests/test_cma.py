import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from botma.cma import (
    CmaConfig,
    CmaState,
    StrategyParameters,
    cma_recombine,
    cma_sample,
    cma_update,
    denormalize,
    normalize,
    recombination_weights,
    run_cma,
)
from botma.grid import GridSpec, grid_search
from botma.kinematics import observer_track, synthesize_bearings
from botma.objective import RCS_BOUNDS, BearingObjective, Candidate
from botma.scenarios import load_preset


class TestNormalize:
    def test_corners_and_center(self):
        np.testing.assert_array_equal(normalize(Candidate(0.0, 0.0, 0.0), RCS_BOUNDS), [0, 0, 0])
        np.testing.assert_array_equal(normalize(Candidate(28000.0, 360.0, 25.0), RCS_BOUNDS), [1, 1, 1])
        np.testing.assert_allclose(normalize(Candidate(14000.0, 180.0, 12.5), RCS_BOUNDS), [0.5, 0.5, 0.5])

    @given(st.lists(st.floats(-1.0, 2.0), min_size=3, max_size=3))
    def test_round_trip(self, z):
        back = normalize(denormalize(z, RCS_BOUNDS), RCS_BOUNDS)
        np.testing.assert_allclose(back, z, atol=1e-12)


class TestWeights:
    @given(st.integers(1, 500))
    def test_constraints(self, mu):
        w = recombination_weights(mu)
        assert len(w) == mu
        assert np.all(w > 0)
        assert np.all(np.diff(w) <= 0)
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_mu3(self):
        raw = np.array([math.log(3.5) - math.log(i) for i in (1, 2, 3)])
        np.testing.assert_allclose(recombination_weights(3), raw / raw.sum(), rtol=0, atol=1e-15)

    def test_bad_mu(self):
        with pytest.raises(ValueError):
            recombination_weights(0)


class TestSample:
    def test_zero_sigma(self, rng):
        st_ = CmaState.initial([0.2, 0.4, 0.6], 0.0)
        np.testing.assert_array_equal(cma_sample(st_, 20, rng), np.tile([0.2, 0.4, 0.6], (20, 1)))

    def test_identity_std(self, rng):
        x = cma_sample(CmaState.initial([0.0, 0.0, 0.0], 0.3), 10_000, rng, box=None)
        assert np.all(np.abs(x.std(axis=0, ddof=1) / 0.3 - 1.0) <= 0.05)

    def test_shaped_std(self, rng):
        st_ = CmaState(np.zeros(3), 0.1, np.diag([4.0, 1.0, 1.0]), np.zeros(3), np.zeros(3))
        s = cma_sample(st_, 10_000, rng, box=None).std(axis=0)
        assert s[0] / s[1] == pytest.approx(2.0, rel=0.05)

    def test_box_repair(self, rng):
        x = cma_sample(CmaState.initial([0.95, 0.05, 0.5], 0.3), 2000, rng)
        assert np.all((x >= 0) & (x <= 1))

    def test_resampling_keeps_interior_distribution(self, rng):
        # far from the walls nothing is resampled or clamped
        st_ = CmaState.initial([0.5, 0.5, 0.5], 1e-3)
        a = cma_sample(st_, 100, np.random.default_rng(4))
        b = cma_sample(st_, 100, np.random.default_rng(4), box=None)
        np.testing.assert_array_equal(a, b)


class TestRecombine:
    def test_single_weight(self):
        np.testing.assert_array_equal(cma_recombine([[1, 2, 3], [9, 9, 9]], [1.0]), [1, 2, 3])

    def test_midpoint(self):
        np.testing.assert_allclose(cma_recombine([[0, 0, 0], [2, 4, 6]], [0.5, 0.5]), [1, 2, 3])

    def test_log_weights(self):
        x = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.7, 0.8, 0.95], [5.0, 5.0, 5.0]])
        raw = [math.log(4) - math.log(i) for i in (1, 2, 3)]
        total = sum(raw)
        expected = [sum(raw[i] / total * x[i][j] for i in range(3)) for j in range(3)]
        w = np.array(raw) / total
        np.testing.assert_allclose(cma_recombine(x, w), expected, rtol=0, atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            cma_recombine([[0, 0, 0]], [0.5, 0.5])


def _sphere_run(generations, rng, mean=(0.9, 0.9, 0.9), lam=100, mu=100):
    params = StrategyParameters.default(3, mu)
    state = CmaState.initial(mean, 0.3)
    sigmas = [state.sigma]
    for _ in range(generations):
        z = cma_sample(state, lam, rng, box=None)
        order = np.argsort(np.sum(z**2, axis=1))
        state = cma_update(state, z[order], params)
        state.refactor()
        sigmas.append(state.sigma)
    return state, sigmas


class TestUpdate:
    def test_stationary_path_length(self):
        # random selection keeps p_sigma ~ N(0, I), so ||p_sigma|| / chi_n averages 1 and the
        # per-generation log sigma change (c_sigma / d_sigma) * (ratio - 1) averages 0
        rng = np.random.default_rng(21)
        params = StrategyParameters.default(3, 100)
        state = CmaState.initial([0.5, 0.5, 0.5], 0.3)
        ratios = []
        for _ in range(1000):
            z = cma_sample(state, 100, rng, box=None)
            state = cma_update(state, z[rng.permutation(100)], params)
            state.refactor()
            ratios.append(np.linalg.norm(state.p_sigma) / params.chi_n)
        assert abs(np.mean(ratios[100:]) - 1.0) <= 0.10

    def test_sphere_sigma_decreases(self):
        state, sigmas = _sphere_run(200, np.random.default_rng(3))
        assert sigmas[-1] < sigmas[0]
        assert np.linalg.norm(state.mean) < 0.01

    def test_symmetry_each_update(self, rng):
        params = StrategyParameters.default(3, 100)
        state = CmaState.initial([0.5, 0.5, 0.5], 0.3)
        for _ in range(50):
            z = cma_sample(state, 100, rng)
            state = cma_update(state, z[rng.permutation(100)], params)
            assert np.max(np.abs(state.C - state.C.T)) <= 1e-12
            state.refactor()

    def test_positive_definite_over_many_updates(self):
        rng = np.random.default_rng(99)
        params = StrategyParameters.default(3, 10)
        state = CmaState.initial([0.5, 0.5, 0.5], 0.3)
        worst = math.inf
        for _ in range(10_000):
            z = cma_sample(state, 10, rng)
            state = cma_update(state, z[np.argsort(rng.random(10))], params)
            state.refactor()
            worst = min(worst, float(np.linalg.eigvalsh(state.C).min()))
            assert state.sigma > 0
        assert worst > 0

    def test_nonfinite_resets(self, rng):
        params = StrategyParameters.default(3, 2)
        state = CmaState.initial([0.5, 0.5, 0.5], 0.3)
        new = cma_update(state, [[np.inf, 0, 0], [0, 0, 0]], params)
        np.testing.assert_array_equal(new.C, np.eye(3))
        np.testing.assert_array_equal(new.mean, state.mean)

    def test_default_rates_dimension3(self):
        p = StrategyParameters.default(3, 100)
        assert 0 < p.c_1 < 1 and 0 < p.c_mu < 1 and p.c_1 + p.c_mu <= 1
        assert 0 < p.c_sigma < 1 and p.d_sigma >= 1 and 0 < p.c_c <= 1
        assert p.mu_eff == pytest.approx(1.0 / np.sum(recombination_weights(100) ** 2))

    def test_override(self):
        p = StrategyParameters.for_config(CmaConfig(c_1=0.01))
        assert p.c_1 == 0.01


class TestRunCma:
    def test_trial07_recovery(self, trial07_obs):
        rep = run_cma(*trial07_obs, CmaConfig(), np.random.default_rng(0))
        e = rep.estimate
        assert abs(e.r0 - 4006.0) <= 10.0
        assert abs(e.course - 90.0) <= 0.1
        assert abs(e.speed - 10.0) <= 0.05
        assert rep.fevals <= 50_000

    def test_budget_respected_on_noisy_data(self, rng):
        sc = load_preset("trial10")
        _, noisy = synthesize_bearings(sc)
        obj = BearingObjective(noisy, observer_track(sc))
        rep = run_cma(noisy, observer_track(sc), CmaConfig(), rng, objective=obj)
        assert rep.fevals == obj.evaluations <= 50_000
        assert rep.details["stop"] == "budget"

    def test_small_budget(self, trial07_obs, rng):
        rep = run_cma(*trial07_obs, CmaConfig(feval_budget=1234), rng)
        assert rep.fevals == 1200

    def test_budget_below_one_generation(self, trial07_obs, rng):
        with pytest.raises(ValueError):
            run_cma(*trial07_obs, CmaConfig(feval_budget=50), rng)

    def test_best_monotone(self, trial07_obs, rng):
        trace = []
        run_cma(*trial07_obs, CmaConfig(feval_budget=5000), rng, trace=trace)
        best = [row[2] for row in trace]
        assert len(trace) == 50
        assert all(b <= a for a, b in zip(best, best[1:]))

    def test_deterministic(self, trial07_obs):
        a = run_cma(*trial07_obs, CmaConfig(feval_budget=3000), np.random.default_rng(8))
        b = run_cma(*trial07_obs, CmaConfig(feval_budget=3000), np.random.default_rng(8))
        assert a == b

    def test_max_generations(self, trial07_obs, rng):
        rep = run_cma(*trial07_obs, CmaConfig(max_generations=3), rng)
        assert rep.details["generations"] == 3 and rep.fevals == 300
        assert rep.details["stop"] == "max_generations"

    def test_dominates_coarse_grid(self, trial07_obs):
        grid = grid_search(BearingObjective(*trial07_obs), GridSpec.from_counts((28, 36, 25)))
        rep = run_cma(*trial07_obs, CmaConfig(), np.random.default_rng(1))
        assert rep.cost <= grid.cost

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CmaConfig(parent_size=200, offspring_size=100)
        with pytest.raises(ValueError):
            CmaConfig(sigma0=0.0)
