import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incentive_rec.agents import AgentPopulation
from incentive_rec.config import ExperimentConfig
from incentive_rec.core import AgentContext, ProbabilityVector, RoundRecord, ValidationError
from incentive_rec.engine import (
    AggregateResult,
    fairness_audit,
    percentile_band,
    regret,
    replicate,
    replication_seeds,
    run_episode,
    true_loss,
    welfare_regret,
)
from incentive_rec.policy_marp import MARP
from incentive_rec.rewards import BetaCost, ConstantCost, FixedMeans

MU = (0.5, 0.3)


def records(arms, followed):
    p = ProbabilityVector((0.5, 0.5))
    return [
        RoundRecord(t, a, y, MU[a - 1] if y else None, p, "marp")
        for t, (a, y) in enumerate(zip(arms, followed), start=1)
    ]


class TestLoss:
    def test_true_loss(self):
        assert true_loss(MU, 2, 1) == pytest.approx(0.2)
        assert true_loss(MU, 2, 0) == pytest.approx(0.5)
        assert true_loss(MU, 1, 1) == 0.0

    def test_regret_best_arm_zero(self):
        assert regret(records([1, 1, 1], [1, 1, 1]), MU) == pytest.approx(0.0)

    def test_regret_three_rounds(self):
        assert regret(records([2, 2, 1], [1, 1, 1]), MU) == pytest.approx(0.4)

    def test_regret_all_ignored(self):
        assert regret(records([2, 1, 2], [0, 0, 0]), MU) == pytest.approx(0.0)

    def test_welfare_regret_charges_ignored_rounds(self):
        assert welfare_regret(records([2, 1], [1, 0]), MU) == pytest.approx(0.2 + 0.5)

    @given(st.lists(st.tuples(st.integers(1, 2), st.integers(0, 1)), min_size=1, max_size=30))
    def test_regret_bounds(self, plays):
        recs = records([a for a, _ in plays], [y for _, y in plays])
        r = regret(recs, MU)
        assert -1e-12 <= r <= welfare_regret(recs, MU) + 1e-12


class TestFairnessAudit:
    def test_examples(self):
        assert fairness_audit(AgentContext(0.2), 1, (0.8, 0.1), 0.2, 0.0)
        assert not fairness_audit(AgentContext(0.2), 2, (0.8, 0.1), 0.2, 0.5)
        assert fairness_audit(AgentContext(0.2, 5, 5), 2, (0.8, 0.1), 0.2, 1.0)


class TestPercentileBand:
    def test_known_list(self):
        lo, hi = percentile_band(range(1, 101))
        assert (lo, hi) == pytest.approx((5.95, 95.05))

    def test_single_value(self):
        assert percentile_band([3.0]) == (3.0, 3.0)


def _marp_cfg(**kw):
    base = dict(policy="marp", m=3, T=200, n_reps=1, seed=5, cost_model="beta")
    base.update(kw)
    return ExperimentConfig.from_mapping(base, env={})


class TestRunEpisode:
    def test_same_seed_identical(self):
        cfg = _marp_cfg()
        a = cfg.run_replication(0, keep_records=True)
        b = cfg.run_replication(0, keep_records=True)
        assert a.records == b.records
        assert np.array_equal(a.regret_path, b.regret_path)
        assert np.array_equal(a.welfare_path, b.welfare_path)

    def test_paths_match_record_metrics(self):
        res = _marp_cfg().run_replication(1, keep_records=True)
        assert res.regret == pytest.approx(regret(res.records, res.true_means))
        assert res.welfare_regret == pytest.approx(welfare_regret(res.records, res.true_means))

    def test_horizon_validated(self):
        with pytest.raises(ValidationError):
            run_episode(MARP(horizon=1), FixedMeans(MU), AgentPopulation(ConstantCost(0.2)), 0)

    def test_reward_only_when_followed(self):
        res = _marp_cfg().run_replication(2, keep_records=True)
        assert all((r.reward is not None) == bool(r.followed) for r in res.records)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_follow_rate_matches_records(self, seed):
        res = run_episode(MARP(horizon=50), FixedMeans((0.6, 0.1)), AgentPopulation(BetaCost(1, 2)), 50, seed=seed)
        assert res.follow_rate == pytest.approx(np.mean([r.followed for r in res.records]))


class TestReplicate:
    def test_single_rep_degenerate_band(self):
        agg = replicate(_marp_cfg(), 1)
        assert agg.ci_low == agg.ci_high == agg.mean_regret == agg.regrets[0]

    def test_adding_reps_keeps_earlier_ones(self):
        small = replicate(_marp_cfg(), 3)
        big = replicate(_marp_cfg(), 5)
        assert np.array_equal(small.regrets, big.regrets[:3])

    def test_parallel_matches_serial(self):
        cfg = _marp_cfg()
        assert np.array_equal(replicate(cfg, 4).regrets, replicate(cfg, 4, jobs=2).regrets)

    def test_seed_streams_independent(self):
        env, dyn = replication_seeds(0, 3)
        a = np.random.default_rng(env).random(4)
        b = np.random.default_rng(dyn).random(4)
        assert not np.array_equal(a, b)

    def test_band_contains_mean(self):
        agg = replicate(_marp_cfg(T=100), 10)
        assert agg.ci_low <= agg.mean_regret <= agg.ci_high
        assert isinstance(agg, AggregateResult) and len(agg.mean_path) == 100

    def test_zero_reps(self):
        with pytest.raises(ValidationError):
            replicate(_marp_cfg(), 0)
