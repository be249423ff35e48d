"""Comparison policies. None of them accounts for incentives.

Learning signal (``feedback``):

``"payoff"``
    every recommendation yields the observed payoff ``X * y``, so an ignored
    recommendation counts as a zero reward.
``"followed"``
    only followed rounds are learned from; ignored rounds are skipped.

Either way, the message shown to agents carries only realized rewards from
followed rounds.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .base import Policy, Recommendation
from .core import ArmStats, HistoryView, ProbabilityVector, RewardHistory, Transparent, ValidationError


FEEDBACK = ("payoff", "followed")


class _Baseline(Policy):
    feedback = "followed"

    def reset(self, m, rng, mu1=None, true_means=None):
        if self.feedback not in FEEDBACK:
            raise ValidationError(f"feedback must be one of {FEEDBACK}, got {self.feedback!r}")
        self.m_ = m
        self.stats_ = [ArmStats() for _ in range(m)]  # learning samples
        self.seen_ = [ArmStats() for _ in range(m)]  # realized rewards, as disclosed
        self.history_ = RewardHistory()
        return self

    def _arm_mean(self, arm: int) -> Optional[float]:
        s = self.seen_[arm - 1]
        return s.mean if s.pulls else None

    def _sample(self, followed: int, reward: Optional[float]) -> Optional[float]:
        """The learning sample for this round, ``None`` when there is none."""
        if followed:
            return reward
        return 0.0 if self.feedback == "payoff" else None

    def _recommend(self, arm: int, phase: str = "baseline", withheld: bool = False) -> Recommendation:
        msg = Transparent(HistoryView(self.history_, len(self.history_)), self._arm_mean(arm))
        return Recommendation(arm, ProbabilityVector.point_mass(arm, self.m_), msg, phase, withheld)

    def update(self, t, arm, followed, reward):
        if followed:
            self.seen_[arm - 1].add(reward)
            self.history_.append(reward)
        x = self._sample(followed, reward)
        if x is not None:
            self.stats_[arm - 1].add(x)


class FullTransparency(_Baseline):
    """Greedy on ``{mu_1} U {empirical means of other pulled arms}``.

    When the greedy value is below the cost the recommendation is withheld
    (the round is logged as not followed).
    """

    name = "full_transparency"
    requires_known_cost = True

    def __init__(self, c_star: float = 0.2):
        self.c_star = c_star

    def reset(self, m, rng, mu1=None, true_means=None):
        if mu1 is None:
            raise ValidationError("full transparency needs the known mean of arm 1")
        self.mu1_ = mu1
        return super().reset(m, rng)

    def greedy_arm(self) -> tuple:
        best, value = 1, self.mu1_
        for arm in range(2, self.m_ + 1):
            mu = self._arm_mean(arm)
            if mu is not None and mu > value:
                best, value = arm, mu
        return best, value

    def recommend(self, t, ctx, rng):
        arm, value = self.greedy_arm()
        if value >= self.c_star:
            return self._recommend(arm)
        return self._recommend(arm, "withheld", withheld=True)


class _RoundRobinElimination(_Baseline):
    """Round-robin over the active set; a slot is retried until it yields a sample."""

    def reset(self, m, rng, mu1=None, true_means=None):
        super().reset(m, rng)
        self.active_ = list(range(1, m + 1))
        self.ptr_ = 0
        self.n_ = 0  # completed sweeps, i.e. rewards per active arm
        return self

    def recommend(self, t, ctx, rng):
        return self._recommend(self.active_[self.ptr_])

    def update(self, t, arm, followed, reward):
        super().update(t, arm, followed, reward)
        if self._sample(followed, reward) is not None and arm == self.active_[self.ptr_]:
            self.ptr_ += 1
            if self.ptr_ == len(self.active_):
                self.ptr_ = 0
                self.n_ += 1
                if len(self.active_) > 1:
                    self.active_ = self._survivors()

    def _sweep_means(self) -> dict:
        return {a: self.stats_[a - 1].mean_of_first(self.n_) for a in self.active_}


class FirstBestElimination(_RoundRobinElimination):
    """Active-arms elimination that ignores incentives.

    Arm ``i`` is dropped when ``mean_i + sqrt(ln(T theta) / (2 l)) < best mean``.
    Before any sample every arm's estimate is ``mu_1``, so nothing is dropped.
    """

    name = "first_best"

    def __init__(self, horizon: int = 5000, theta: float = 100.0):
        self.horizon = horizon
        self.theta = theta

    def reset(self, m, rng, mu1=None, true_means=None):
        self.mu1_ = mu1
        return super().reset(m, rng)

    def _survivors(self):
        means = self._sweep_means()
        radius = math.sqrt(math.log(self.horizon * self.theta) / (2.0 * self.n_))
        best = max(means.values())
        return [a for a in self.active_ if means[a] + radius >= best]


def even_dar_radius(n: int, m: int, c: float = 10.0, delta: float = 0.05) -> float:
    """``sqrt(ln(c n^2 m / delta) / (2 n))``."""
    return math.sqrt(math.log(c * n * n * m / delta) / (2.0 * n))


class EvenDarElimination(_RoundRobinElimination):
    """Successive elimination: drop ``i`` when ``mean_i < best - 2 * radius(n)``."""

    name = "elimination"

    def __init__(self, c: float = 10.0, delta: float = 0.05, feedback: str = "payoff"):
        self.c = c
        self.delta = delta
        self.feedback = feedback

    def _survivors(self):
        means = self._sweep_means()
        r = even_dar_radius(self.n_, self.m_, self.c, self.delta)
        best = max(means.values())
        return [a for a in self.active_ if not means[a] < best - 2.0 * r]


class UCB1(_Baseline):
    """UCB1; arms without a sample first, in index order."""

    name = "ucb"

    def __init__(self, feedback: str = "payoff"):
        self.feedback = feedback

    def index(self, t: int) -> np.ndarray:
        n = np.array([s.pulls for s in self.stats_], dtype=float)
        sums = np.array([s.reward_sum for s in self.stats_])
        with np.errstate(divide="ignore", invalid="ignore"):
            idx = sums / n + np.sqrt(2.0 * math.log(max(t, 1)) / n)
        idx[n == 0] = np.inf
        return idx

    def recommend(self, t, ctx, rng):
        for arm, s in enumerate(self.stats_, start=1):
            if s.pulls == 0:
                return self._recommend(arm)
        return self._recommend(int(np.argmax(self.index(t))) + 1)


class Thompson(_Baseline):
    """Thompson sampling.

    Parameters
    ----------
    posterior : {"gaussian", "beta"}, default="gaussian"
        ``"gaussian"`` samples ``N(S_i / (n_i + 1), noise_var / (n_i + 1))``,
        the conjugate posterior under a ``N(0, 1)`` prior and unit noise.
        ``"beta"`` keeps a Beta posterior with fractional updates
        ``a += X, b += 1 - X``.
    noise_var : float, default=1.0
        Assumed reward variance of the Gaussian posterior.
    prior_a, prior_b : float, default=1.0
        Beta prior.
    feedback : {"payoff", "followed"}, default="payoff"
    """

    name = "thompson"

    def __init__(
        self,
        posterior: str = "gaussian",
        noise_var: float = 1.0,
        prior_a: float = 1.0,
        prior_b: float = 1.0,
        feedback: str = "payoff",
    ):
        self.posterior = posterior
        self.noise_var = noise_var
        self.prior_a = prior_a
        self.prior_b = prior_b
        self.feedback = feedback

    def reset(self, m, rng, mu1=None, true_means=None):
        if self.posterior not in ("gaussian", "beta"):
            raise ValidationError(f"unknown posterior {self.posterior!r}")
        if self.prior_a <= 0 or self.prior_b <= 0 or self.noise_var <= 0:
            raise ValidationError("posterior parameters must be positive")
        super().reset(m, rng)
        self.a_ = np.full(m, float(self.prior_a))
        self.b_ = np.full(m, float(self.prior_b))
        return self

    def sample_theta(self, rng) -> np.ndarray:
        if self.posterior == "beta":
            return rng.beta(self.a_, self.b_)
        n = np.array([s.pulls for s in self.stats_], dtype=float)
        sums = np.array([s.reward_sum for s in self.stats_])
        return rng.normal(sums / (n + 1.0), np.sqrt(self.noise_var / (n + 1.0)))

    def recommend(self, t, ctx, rng):
        return self._recommend(int(np.argmax(self.sample_theta(rng))) + 1)

    def update(self, t, arm, followed, reward):
        super().update(t, arm, followed, reward)
        x = self._sample(followed, reward)
        if x is not None:
            self.a_[arm - 1] += x
            self.b_[arm - 1] += 1.0 - x
