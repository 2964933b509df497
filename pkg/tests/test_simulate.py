import numpy as np
import pytest
import scipy.stats

from feedbackq import (
    ModelParams,
    SimConfig,
    payoff_vector_n,
    payoff_vector_r_all,
    renege_probability,
    simulate_renege_fraction,
    simulate_stationary,
    simulate_tagged,
    sojourn_vector,
    stationary_threshold,
    total_payoff,
)


def within(estimate, target, k=3.0):
    return abs(estimate.mean - target) <= k * estimate.se


class TestDeterminism:
    def test_tagged_runs_bit_identical_under_a_seed(self):
        cfg = SimConfig(params=ModelParams(1.0, 0.8, 0.4, 7.8), x=2.073, reps=20_000, seed=99)
        a = simulate_tagged(cfg, (2, 2))
        b = simulate_tagged(cfg, (2, 2))
        assert a.estimates["sojourn"] == b.estimates["sojourn"]
        assert a.estimates["payoff"] == b.estimates["payoff"]

    def test_stationary_runs_bit_identical_under_a_seed(self):
        cfg = SimConfig(params=ModelParams(1.0, 0.8, 0.8), x=2.5, mode="r", events=100_000, seed=7)
        a = simulate_stationary(cfg)
        b = simulate_stationary(cfg)
        np.testing.assert_array_equal(a.histogram, b.histogram)

    def test_seeds_differ(self):
        base = dict(params=ModelParams(1.0, 0.8, 0.4, 7.8), x=2.073, reps=5_000)
        a = simulate_tagged(SimConfig(seed=1, **base), (1, 1))
        b = simulate_tagged(SimConfig(seed=2, **base), (1, 1))
        assert a.estimates["sojourn"].mean != b.estimates["sojourn"].mean


class TestTagged:
    def test_lone_customer_sojourn(self):
        cfg = SimConfig(params=ModelParams(0.4, 0.6, 0.7), x=0.5, reps=60_000, seed=3)
        res = simulate_tagged(cfg, (1, 1))
        assert within(res.estimates["sojourn"], 1.0 / 0.42)

    def test_no_feedback_single_service(self):
        cfg = SimConfig(params=ModelParams(0.4, 0.9, 1.0), x=2.0, reps=60_000, seed=5)
        res = simulate_tagged(cfg, (1, 1))
        assert within(res.estimates["sojourn"], 1.0 / 0.9)
        assert res.estimates["success"].mean == 1.0

    def test_payoff_matches_solver_at_equilibrium(self):
        params = ModelParams(1.0, 0.8, 0.4, 7.8)
        cfg = SimConfig(params=params, x=2.073038608, reps=60_000, seed=11)
        res = simulate_tagged(cfg, (2, 2))
        assert within(res.estimates["payoff"], payoff_vector_n(params, 2.073038608).at(2, 2))

    def test_reneging_payoff_matches_solver(self):
        params = ModelParams(1.0, 0.8, 0.4, 7.8)
        cfg = SimConfig(params=params, x=2.326937720, mode="r", reps=60_000, seed=13)
        res = simulate_tagged(cfg, (3, 3))
        target = payoff_vector_r_all(params, 2.326937720).at(3, 3)
        assert target == pytest.approx(0.0, abs=1e-6)
        assert within(res.estimates["payoff"], target)

    def test_never_reneging_tagged_threshold(self):
        params = ModelParams(1.0, 0.8, 0.4, 7.5)
        cfg = SimConfig(params=params, x=2.5, x_tag=3.0, mode="r", reps=60_000, seed=17)
        res = simulate_tagged(cfg, (3, 3))
        assert res.estimates["success"].mean == 1.0  # she always stays until success
        from feedbackq import sojourn_vector_r_tagged

        assert within(res.estimates["sojourn"], sojourn_vector_r_tagged(params, 2.5).at(3, 3))

    def test_start_state_validation(self):
        cfg = SimConfig(params=ModelParams(1.0, 0.8, 0.4), x=2.5, mode="r", reps=10)
        with pytest.raises(ValueError):
            simulate_tagged(cfg, (1, 4))  # beyond the reneging depth
        with pytest.raises(ValueError):
            simulate_tagged(cfg, (2, 1))


class TestStationary:
    def test_histogram_matches_analytic_law(self):
        params = ModelParams(1.0, 0.8, 0.4)
        cfg = SimConfig(params=params, x=2.073, events=400_000, seed=19)
        res = simulate_stationary(cfg)
        ana = stationary_threshold(params, 2.073, "n").probs
        assert res.histogram.shape == ana.shape
        np.testing.assert_array_less(np.abs(res.histogram - ana), 3.0 * res.histogram_se + 1e-12)

    def test_integer_threshold_reneging_mode_matches_plain_mode(self):
        params = ModelParams(1.0, 0.8, 0.8)
        a = simulate_stationary(SimConfig(params=params, x=3.0, mode="n", events=200_000, seed=23))
        b = simulate_stationary(SimConfig(params=params, x=3.0, mode="r", events=200_000, seed=23))
        np.testing.assert_array_equal(a.histogram, b.histogram)

    def test_large_threshold_approaches_geometric_law(self):
        params = ModelParams(0.4, 0.6, 0.7)  # rho < 1
        cfg = SimConfig(params=params, x=50.0, events=400_000, seed=29)
        res = simulate_stationary(cfg)
        rho = params.rho
        geo = (1 - rho) * rho ** np.arange(len(res.histogram))
        np.testing.assert_array_less(
            np.abs(res.histogram - geo)[:10], 3.0 * res.histogram_se[:10] + 1e-3
        )

    def test_payoff_per_arrival_matches_population_payoff(self):
        params = ModelParams(1.0, 0.8, 0.4, 7.8)
        cfg = SimConfig(params=params, x=2.073038608, events=400_000, seed=31)
        res = simulate_stationary(cfg, track_payoffs=True)
        target = total_payoff(params, 2.073038608, 2.073038608)
        assert within(res.estimates["payoff_per_arrival"], target)


class TestRenege:
    def test_fraction_matches_closed_form(self):
        params = ModelParams(1.0, 0.8, 0.8)
        cfg = SimConfig(params=params, x=2.5, mode="r", events=400_000, seed=37)
        res = simulate_renege_fraction(cfg)
        assert within(res.estimates["renege_fraction"], renege_probability(params, 2.5))

    def test_integer_threshold_exactly_zero(self):
        cfg = SimConfig(params=ModelParams(1.0, 0.8, 0.8), x=3.0, mode="r", events=100_000, seed=41)
        res = simulate_renege_fraction(cfg)
        assert res.estimates["renege_fraction"].mean == 0.0

    def test_no_feedback_exactly_zero(self):
        cfg = SimConfig(params=ModelParams(0.5, 0.9, 1.0), x=2.5, mode="r", events=100_000, seed=43)
        res = simulate_renege_fraction(cfg)
        assert res.estimates["renege_fraction"].mean == 0.0

    def test_mode_validation(self):
        cfg = SimConfig(params=ModelParams(1.0, 0.8, 0.8), x=2.5, mode="n", events=1_000)
        with pytest.raises(ValueError):
            simulate_renege_fraction(cfg)


class TestEventStream:
    def test_event_type_proportions(self):
        # among busy-period events, arrivals and services split the race in
        # proportion to their rates
        params = ModelParams(1.0, 0.8, 0.4)
        rng = np.random.default_rng(47)
        lam, mu = params.lam, params.mu
        n_events = 500_000
        draws = rng.random(n_events)
        arrivals = int((draws < lam / (lam + mu)).sum())
        observed = [arrivals, n_events - arrivals]
        expected = [n_events * lam / (lam + mu), n_events * mu / (lam + mu)]
        assert scipy.stats.chisquare(observed, expected).pvalue > 0.001

    def test_busy_holding_times_are_exponential(self):
        params = ModelParams(1.0, 0.8, 0.4)
        rng = np.random.default_rng(53)
        sample = rng.exponential(1.0 / (params.lam + params.mu), 200_000)
        stat = scipy.stats.kstest(sample, "expon", args=(0.0, 1.0 / 1.8))
        assert stat.pvalue > 0.001

    def test_config_validation(self):
        params = ModelParams(1.0, 0.8, 0.4)
        with pytest.raises(ValueError):
            SimConfig(params=params, x=2.0, mode="x")
        with pytest.raises(ValueError):
            SimConfig(params=params, x=2.0, reps=0)
        with pytest.raises(ValueError):
            SimConfig(params=params, x=2.0, warmup=1.0)
        with pytest.raises(ValueError):
            SimConfig(params=params, x=-1.0)
