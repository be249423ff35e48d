import numpy as np
import pytest

from incentive_rec.agents import AgentPopulation
from incentive_rec.core import AgentContext, Transparent, ValidationError
from incentive_rec.engine import run_episode
from incentive_rec.policy_baselines import (
    UCB1,
    EvenDarElimination,
    FirstBestElimination,
    FullTransparency,
    Thompson,
    even_dar_radius,
)
from incentive_rec.rewards import ConstantCost, FixedMeans

CTX = AgentContext(0.2)


def feed(policy, t, arm, reward):
    policy.update(t, arm, 1, reward)


class TestFullTransparency:
    def test_no_history_recommends_arm_one(self):
        policy = FullTransparency(0.2).reset(3, np.random.default_rng(0), mu1=0.3)
        assert policy.recommend(1, CTX, np.random.default_rng(0)).arm == 1

    def test_greedy_on_history(self):
        policy = FullTransparency(0.2).reset(3, np.random.default_rng(0), mu1=0.3)
        feed(policy, 1, 3, 0.9)
        assert policy.recommend(2, CTX, np.random.default_rng(0)).arm == 3

    def test_withheld_when_all_below_cost(self):
        policy = FullTransparency(0.5).reset(2, np.random.default_rng(0), mu1=0.3)
        rec = policy.recommend(1, CTX, np.random.default_rng(0))
        assert rec.withheld and rec.phase == "withheld"

    def test_disclosure_is_transparent(self):
        policy = FullTransparency(0.2).reset(2, np.random.default_rng(0), mu1=0.3)
        assert isinstance(policy.recommend(1, CTX, np.random.default_rng(0)).disclosure, Transparent)


class TestFirstBest:
    def test_identical_arms_alternate(self):
        policy = FirstBestElimination(horizon=100, theta=10).reset(2, np.random.default_rng(0), mu1=0.5)
        arms = []
        for t in range(1, 9):
            arm = policy.recommend(t, CTX, None).arm
            arms.append(arm)
            feed(policy, t, arm, 0.5)
        assert arms == [1, 2] * 4 and policy.active_ == [1, 2]

    def test_bad_arm_removed_permanently(self):
        policy = FirstBestElimination(horizon=10, theta=1).reset(2, np.random.default_rng(0), mu1=0.9)
        for t in range(1, 41):
            arm = policy.recommend(t, CTX, None).arm
            feed(policy, t, arm, 1.0 if arm == 1 else 0.0)
        assert policy.active_ == [1]
        assert {policy.recommend(t, CTX, None).arm for t in range(41, 60)} == {1}

    def test_ignored_round_is_retried_under_followed_feedback(self):
        policy = FirstBestElimination().reset(2, np.random.default_rng(0), mu1=0.5)
        policy.update(1, 1, 0, None)
        assert policy.recommend(2, CTX, None).arm == 1


class TestEvenDar:
    def test_radius_formula(self):
        assert even_dar_radius(1, 2) == pytest.approx(np.sqrt(np.log(10 * 2 / 0.05) / 2))
        assert even_dar_radius(1, 2) > 1.0

    def test_no_elimination_at_n_one(self):
        policy = EvenDarElimination().reset(2, np.random.default_rng(0))
        feed(policy, 1, 1, 0.5)
        feed(policy, 2, 2, 0.5)
        assert policy.active_ == [1, 2]

    def test_separated_arms_eliminated_by_200(self):
        assert 0.9 - 0.1 > 2 * even_dar_radius(200, 2)
        policy = EvenDarElimination().reset(2, np.random.default_rng(0))
        for t in range(1, 401):
            arm = policy.recommend(t, CTX, None).arm
            feed(policy, t, arm, 0.9 if arm == 1 else 0.1)
        assert policy.active_ == [1]

    def test_smaller_delta_widens_radius(self):
        assert even_dar_radius(50, 5, delta=0.01) > even_dar_radius(50, 5, delta=0.05)

    def test_payoff_feedback_counts_ignored_round_as_zero(self):
        policy = EvenDarElimination(feedback="payoff").reset(2, np.random.default_rng(0))
        policy.update(1, 1, 0, None)
        assert policy.stats_[0].pulls == 1 and policy.stats_[0].reward_sum == 0.0
        assert policy.seen_[0].pulls == 0 and len(policy.history_) == 0
        assert policy.recommend(2, CTX, None).arm == 2

    def test_followed_feedback_skips_ignored_round(self):
        policy = EvenDarElimination(feedback="followed").reset(2, np.random.default_rng(0))
        policy.update(1, 1, 0, None)
        assert policy.stats_[0].pulls == 0
        assert policy.recommend(2, CTX, None).arm == 1

    def test_unknown_feedback(self):
        with pytest.raises(ValidationError):
            EvenDarElimination(feedback="nope").reset(2, np.random.default_rng(0))


class TestUCB:
    def test_initial_sweep_in_order(self):
        policy = UCB1().reset(4, np.random.default_rng(0))
        arms = []
        for t in range(1, 5):
            arm = policy.recommend(t, CTX, None).arm
            arms.append(arm)
            feed(policy, t, arm, 0.5)
        assert arms == [1, 2, 3, 4]

    def test_lower_count_has_higher_index(self):
        policy = UCB1().reset(2, np.random.default_rng(0))
        for t, arm in enumerate([1, 1, 1, 2], start=1):
            feed(policy, t, arm, 0.5)
        idx = policy.index(5)
        assert idx[1] > idx[0]

    def test_dominant_arm_chosen(self):
        hits = 0
        total = 0
        for seed in range(3):
            res = run_episode(
                UCB1(), FixedMeans((0.2, 0.9, 0.4)), AgentPopulation(ConstantCost(1e-9)), 5000, seed=seed
            )
            arms = [r.arm for r in res.records[999:]]
            hits += arms.count(2)
            total += len(arms)
        assert hits / total >= 0.9


class TestThompson:
    def test_symmetric_prior_uniform_choice(self):
        policy = Thompson(posterior="beta").reset(4, np.random.default_rng(0))
        rng = np.random.default_rng(1)
        counts = np.bincount([policy.recommend(1, CTX, rng).arm for _ in range(10_000)], minlength=5)[1:]
        assert np.all(np.abs(counts / 10_000 - 0.25) < 0.02)

    def test_concentrated_posterior(self):
        policy = Thompson(posterior="beta").reset(2, np.random.default_rng(0))
        policy.a_[:] = (100.0, 1.0)
        policy.b_[:] = (1.0, 100.0)
        rng = np.random.default_rng(2)
        picks = [policy.recommend(1, CTX, rng).arm for _ in range(10_000)]
        assert picks.count(1) / len(picks) > 0.999

    def test_gaussian_posterior_concentrates(self):
        policy = Thompson().reset(2, np.random.default_rng(0))
        for t in range(1, 2001):
            feed(policy, t, 1, 0.8)
            feed(policy, t, 2, 0.2)
        rng = np.random.default_rng(3)
        assert all(policy.recommend(1, CTX, rng).arm == 1 for _ in range(1000))

    def test_fractional_beta_update(self):
        policy = Thompson(posterior="beta").reset(2, np.random.default_rng(0))
        feed(policy, 1, 2, 0.25)
        policy.update(2, 1, 0, None)
        assert tuple(policy.a_) == (1.0, 1.25) and tuple(policy.b_) == (2.0, 1.75)

    def test_bad_posterior(self):
        with pytest.raises(ValidationError):
            Thompson(posterior="laplace").reset(2, np.random.default_rng(0))

    def test_get_params(self):
        assert Thompson(posterior="beta").get_params()["posterior"] == "beta"
