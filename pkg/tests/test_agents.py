import numpy as np
import pytest
from scipy import stats

from incentive_rec.agents import AgentPopulation, VariantMismatch, belief, decide, next_agent, update_fairness
from incentive_rec.core import (
    AgentContext,
    ArpExplore,
    ArpInitial,
    ArpStage,
    HistoryView,
    MarpRound,
    RewardHistory,
    Transparent,
    ValidationError,
)
from incentive_rec.rewards import BetaCost, ConstantCost


def history(*values):
    h = RewardHistory()
    for v in values:
        h.append(v)
    return HistoryView(h, len(h))


class TestDecide:
    def test_initial_message(self):
        assert decide(ArpInitial(True, 0.0), 0.2) == 1

    def test_stage_blend(self):
        # rounds_observed=10 with total 1.0 gives M_hat=0.1; the stage mean is 0.8
        msg = ArpStage(0.5, history(0.8, 0.2), rounds_observed=10, stage_bounds=(1,))
        assert belief(msg) == pytest.approx(0.5 * 0.1 + 0.5 * 0.8)
        assert decide(msg, 0.4) == 1

    def test_stage_ignored_rounds_count_as_zero(self):
        msg = ArpStage(1.0, history(0.6), rounds_observed=3, stage_bounds=(1,))
        assert belief(msg) == pytest.approx(0.2)

    def test_marp_round(self):
        assert decide(MarpRound(history(0.1, 0.3)), 0.3) == 0

    def test_marp_empty_history_uses_prior(self):
        assert belief(MarpRound(history()), prior=0.5) == 0.5

    def test_explore_optimistic_bound(self):
        msg = ArpExplore((1, 2), (0.3, 0.95), 0.1)
        assert belief(msg) == pytest.approx((0.4 + 1.0) / 2)

    def test_transparent_beliefs(self):
        msg = Transparent(history(0.2, 0.4), arm_mean=0.9)
        assert belief(msg) == pytest.approx(0.3)
        assert belief(msg, baseline_belief="arm") == pytest.approx(0.9)

    def test_phase_mismatch(self):
        with pytest.raises(VariantMismatch):
            decide(MarpRound(history()), 0.2, phase="sampling")

    def test_tie_follows(self):
        assert decide(MarpRound(history(0.3)), 0.3) == 1


class TestUpdateFairness:
    def test_unsatisfactory_follow(self):
        new = update_fairness(AgentContext(0.25), 1, 0.1)
        assert (new.visits, new.bad_outcomes) == (1, 1)

    def test_ignored(self):
        new = update_fairness(AgentContext(0.25, visits=3, bad_outcomes=1), 0, None)
        assert (new.visits, new.bad_outcomes) == (4, 1)

    def test_satisfactory_follow(self):
        new = update_fairness(AgentContext(0.25, visits=3, bad_outcomes=1), 1, 0.9)
        assert (new.visits, new.bad_outcomes) == (4, 1)

    def test_reward_presence_checked(self):
        with pytest.raises(ValidationError):
            update_fairness(AgentContext(0.25), 1, None)


class TestPopulation:
    def test_fresh_agents_have_no_history(self):
        pop = AgentPopulation(ConstantCost(0.2))
        rng = np.random.default_rng(0)
        for _ in range(5):
            ctx = next_agent(pop, rng)
            assert (ctx.visits, ctx.bad_outcomes) == (0, 0)

    def test_single_member_pool_accumulates(self):
        pop = AgentPopulation(ConstantCost(0.2), pool_size=1)
        rng = np.random.default_rng(0)
        for i in range(3):
            agent_id, ctx = pop.next_agent(rng)
            assert agent_id == 0 and ctx.visits == i
            pop.record(agent_id, ctx, 1, 0.1)
        assert pop.members[0].bad_outcomes == 3

    def test_pool_members_sampled_uniformly(self):
        pop = AgentPopulation(BetaCost(1, 2), pool_size=10)
        rng = np.random.default_rng(1)
        ids = [pop.next_agent(rng)[0] for _ in range(100_000)]
        counts = np.bincount(ids, minlength=10)
        assert stats.chisquare(counts).pvalue > 0.001

    def test_pool_members_keep_their_cost(self):
        pop = AgentPopulation(BetaCost(1, 2), pool_size=3)
        rng = np.random.default_rng(2)
        costs = {}
        for _ in range(50):
            agent_id, ctx = pop.next_agent(rng)
            assert costs.setdefault(agent_id, ctx.cost) == ctx.cost

    def test_tolerance_callable(self):
        pop = AgentPopulation(ConstantCost(0.2), tolerance=lambda rng: 0.3)
        assert next_agent(pop, np.random.default_rng(0)).tolerance == 0.3

    def test_bad_pool_size(self):
        with pytest.raises(ValidationError):
            AgentPopulation(ConstantCost(0.2), pool_size=0)
