"""Adaptive recommendation policy (ARP) for a known, homogeneous opportunity cost.

Four phases: arm 1 to the first agents; one stage per remaining arm that mixes
the new arm with the best arm seen so far at an adaptive rate; round-robin
elimination with a confidence radius that also competes against the cost;
exploitation of the survivor.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .base import Policy, Recommendation, fairness_gate
from .core import (
    AgentContext,
    ArmStats,
    ArpExplore,
    ArpInitial,
    ArpStage,
    HistoryView,
    ProbabilityVector,
    RewardHistory,
    ValidationError,
    sample_arm,
)

log = logging.getLogger(__name__)

# "auto" margin as a fraction of its admissible maximum; the slack absorbs the
# noise in a k-sample exploit estimate when k is far below the incentive bound
AUTO_MARGIN_FRACTION = 0.5


class AssumptionViolated(ValidationError):
    """Arm 1's known mean does not exceed the cost."""


class DegeneratePrior(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class CostDominates(UserWarning):
    """Every active arm fell below the cost by more than the radius."""


class StrictKWarning(UserWarning):
    pass


def lambda_max(mu1: float, c_star: float) -> float:
    """Largest admissible margin, ``0.75 * (mu1 - c_star)``."""
    if not mu1 > c_star:
        raise AssumptionViolated(f"need mu1 > c_star, got mu1={mu1}, c_star={c_star}")
    return 0.75 * (mu1 - c_star)


def theta_tau(m: int, tau: float, min_prior_prob: float) -> float:
    """``4 m^2 / (tau * min_prior_prob)``."""
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    if min_prior_prob <= 0.0:
        raise DegeneratePrior("min_i P(mu_i - c_star >= tau) is zero")
    if min_prior_prob > 1.0:
        raise ValidationError(f"min_prior_prob must be at most 1, got {min_prior_prob}")
    return 4.0 * m * m / (tau * min_prior_prob)


def k_theoretical(lam: float, m: int, horizon: int, theta: float) -> int:
    """Smallest per-arm sample budget satisfying both incentive conditions."""
    first = 9.0 / (2.0 * lam * lam) * math.log(20.0 * m / lam)
    second = theta * theta * math.log(horizon * theta)
    return math.ceil(max(first, second))


def exploration_rate(lam: float, c_star: float, m_hat: float) -> float:
    if m_hat >= c_star:
        return 1.0
    return lam / (2.0 * (c_star - m_hat) + lam)


def select_exploit_arm(means: Sequence[Optional[float]], rng: np.random.Generator) -> int:
    """Arm (1-based) with the largest k-sample mean; ties broken uniformly."""
    if not means or any(mu is None for mu in means):
        raise InsufficientSamples("every candidate arm needs its k rewards first")
    best = max(means)
    ties = [j + 1 for j, mu in enumerate(means) if mu == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def elimination_radius(horizon: int, theta: float, q: int) -> float:
    return math.sqrt(math.log(horizon * theta) / (2.0 * q))


def elimination_step(
    means: dict,
    q: int,
    horizon: int,
    theta: float,
    c_star: float,
) -> list:
    """Active arms (sorted) that survive one elimination check.

    ``means`` maps each active arm to its ``q``-sample mean. An arm stays iff
    ``mean + radius >= max(best mean, c_star)``. If that leaves nothing, the
    empirical best is kept and :class:`CostDominates` is warned.
    """
    if len(means) <= 1:
        return sorted(means)
    radius = elimination_radius(horizon, theta, q)
    best = max(means.values())
    bar = max(best, c_star)
    keep = sorted(i for i, mu in means.items() if mu + radius >= bar)
    if not keep:
        top = max(sorted(means), key=lambda i: means[i])
        warnings.warn(f"all arms below cost at q={q}; keeping arm {top}", CostDominates, stacklevel=2)
        keep = [top]
    return keep


@dataclass(frozen=True)
class ArpParams:
    margin: float
    tau: float
    theta_tau: float
    k: int
    c_star: float
    mu1: float
    horizon: int

    def __post_init__(self):
        if not 0.0 < self.margin <= lambda_max(self.mu1, self.c_star) + 1e-12:
            raise ValidationError(
                f"margin {self.margin} outside (0, {lambda_max(self.mu1, self.c_star)}]"
            )
        if not 0.0 < self.tau < 1.0 - self.c_star:
            raise ValidationError(f"tau must lie in (0, 1 - c_star), got {self.tau}")
        if self.theta_tau <= 0 or self.k < 1:
            raise ValidationError("theta_tau must be positive and k at least 1")


class ARP(Policy):
    """Adaptive recommendation policy.

    Parameters
    ----------
    c_star : float
        Known opportunity cost shared by all agents.
    horizon : int
        Number of agents ``T``; enters the elimination radius.
    k : int, default=10
        Rewards collected per arm during sampling.
    margin : float or "auto", default="auto"
        The margin parameter; ``"auto"`` uses half of its admissible maximum.
    tau : float, default=0.2
    min_prior_prob : float, default=1.0
        ``min_i P(mu_i - c_star >= tau)`` under the designer's prior.
    fallback : {"known", "exploit"}, default="known"
        Arm recommended when the fairness gate fails. ``"known"`` uses arm 1,
        the only arm whose mean is known to beat the cost; ``"exploit"`` uses
        the current empirical best.
    strict : bool, default=False
        Warn when ``k`` is below :func:`k_theoretical`.
    """

    name = "arp"
    requires_known_cost = True

    def __init__(
        self,
        c_star: float = 0.2,
        horizon: int = 5000,
        k: int = 10,
        margin="auto",
        tau: float = 0.2,
        min_prior_prob: float = 1.0,
        fallback: str = "known",
        strict: bool = False,
    ):
        self.c_star = c_star
        self.horizon = horizon
        self.k = k
        self.margin = margin
        self.tau = tau
        self.min_prior_prob = min_prior_prob
        self.fallback = fallback
        self.strict = strict

    # -- setup -------------------------------------------------------------

    def reset(self, m, rng, mu1=None, true_means=None):
        if mu1 is None:
            raise ValidationError("ARP needs the known mean of arm 1")
        if self.fallback not in ("known", "exploit"):
            raise ValidationError(f"unknown fallback {self.fallback!r}")
        lam_cap = lambda_max(mu1, self.c_star)
        lam = AUTO_MARGIN_FRACTION * lam_cap if self.margin == "auto" else float(self.margin)
        theta = theta_tau(m, self.tau, self.min_prior_prob)
        self.params_ = ArpParams(lam, self.tau, theta, int(self.k), self.c_star, mu1, int(self.horizon))
        self.k_bound_ = k_theoretical(lam, m, self.horizon, theta)
        if self.strict and self.k < self.k_bound_:
            warnings.warn(f"k={self.k} is below the incentive bound {self.k_bound_}", StrictKWarning, stacklevel=2)

        self.m_ = m
        self.stats_ = [ArmStats() for _ in range(m)]
        self.history_ = RewardHistory()
        self.phase_ = "sampling"
        self.stage_ = 1
        self.stage_ready_ = True
        self.tau_count_ = 0
        self.stage_rounds_ = 0
        self.stage_lengths_ = []
        self.stage_bounds_ = []
        self.rounds_ = 0
        self.k_means_ = [None] * m
        self.exploit_arm_ = 1
        self.explore_rate_ = 0.0
        self.m_hat_ = None
        self.probs_ = ProbabilityVector.point_mass(1, m)
        self.disclosure_ = ArpInitial(True, 0.0)
        self.active_ = []
        self.q_ = 0
        self.ptr_ = 0
        self.transitions_ = []
        return self

    # -- recommendation ----------------------------------------------------

    def _begin_stage(self, rng):
        i = self.stage_
        p = self.params_
        self.m_hat_ = self.history_.total() / self.rounds_ if self.rounds_ else 0.0
        self.explore_rate_ = exploration_rate(p.margin, p.c_star, self.m_hat_)
        self.exploit_arm_ = select_exploit_arm(self.k_means_[: i - 1], rng)
        entries = [0.0] * self.m_
        entries[self.exploit_arm_ - 1] = 1.0 - self.explore_rate_
        entries[i - 1] = self.explore_rate_
        self.probs_ = ProbabilityVector(tuple(entries))
        view = HistoryView(self.history_, len(self.history_))
        self.disclosure_ = ArpStage(self.explore_rate_, view, self.rounds_, tuple(self.stage_bounds_))
        self.tau_count_ = 0
        self.stage_rounds_ = 0
        self.stage_ready_ = True

    def _fallback_arm(self) -> int:
        if self.fallback == "known":
            return 1
        if self.phase_ == "sampling":
            return self.exploit_arm_
        return max(self.active_, key=lambda a: self.stats_[a - 1].mean_of_first(self.q_))

    def recommend(self, t: int, ctx: AgentContext, rng: np.random.Generator) -> Recommendation:
        if self.phase_ == "sampling":
            if self.stage_ == 1:
                return Recommendation(1, self.probs_, self.disclosure_, "initial")
            if not self.stage_ready_:
                self._begin_stage(rng)
            if fairness_gate(ctx):
                arm = sample_arm(self.probs_, rng.random())
                probs = self.probs_
            else:
                arm = self._fallback_arm()
                probs = ProbabilityVector.point_mass(arm, self.m_)
            return Recommendation(arm, probs, self.disclosure_, "sampling")

        target = self.active_[self.ptr_] if self.phase_ == "exploration" else self.active_[0]
        arm = target if fairness_gate(ctx) else self._fallback_arm()
        return Recommendation(arm, ProbabilityVector.point_mass(arm, self.m_), self.disclosure_, self.phase_)

    # -- feedback ----------------------------------------------------------

    def update(self, t, arm, followed, reward):
        self.rounds_ += 1
        if followed:
            self.stats_[arm - 1].add(reward)
            self.history_.append(reward)

        if self.phase_ == "sampling":
            self.stage_rounds_ += 1
            if followed and arm == self.stage_:
                self.tau_count_ += 1
            if self.tau_count_ >= self.k:
                self._end_stage(t)
        elif self.phase_ == "exploration":
            if followed and arm == self.active_[self.ptr_]:
                self.ptr_ += 1
                if self.ptr_ == len(self.active_):
                    self.q_ += 1
                    self.ptr_ = 0
                    self._eliminate(t)

    def _end_stage(self, t):
        i = self.stage_
        self.k_means_[i - 1] = self.stats_[i - 1].mean_of_first(self.k)
        self.stage_lengths_.append(self.stage_rounds_)
        self.stage_bounds_.append(len(self.history_))
        if i < self.m_:
            self.stage_ = i + 1
            self.stage_ready_ = False
            return
        self._transition(t, "sampling", "exploration")
        self.phase_ = "exploration"
        self.active_ = list(range(1, self.m_ + 1))
        self.q_ = self.k
        self.ptr_ = 0
        self._eliminate(t)

    def _eliminate(self, t):
        q = self.q_
        means = {a: self.stats_[a - 1].mean_of_first(q) for a in self.active_}
        p = self.params_
        self.active_ = elimination_step(means, q, p.horizon, p.theta_tau, p.c_star)
        radius = elimination_radius(p.horizon, p.theta_tau, q)
        self.disclosure_ = ArpExplore(tuple(self.active_), tuple(means[a] for a in self.active_), radius)
        if len(self.active_) == 1 and self.phase_ == "exploration":
            self._transition(t, "exploration", "exploitation")
            self.phase_ = "exploitation"

    def _transition(self, t, src, dst):
        self.transitions_.append({"round": t, "from": src, "to": dst})
        log.debug("round %d: %s -> %s", t, src, dst)

    @property
    def sampling_rounds(self) -> int:
        """Total length of the sampling phase so far (``L_1 + ... + L_i``)."""
        return sum(self.stage_lengths_)

    def state_summary(self):
        return {
            "phase": self.phase_,
            "stage_lengths": list(self.stage_lengths_),
            "active": list(self.active_),
            "q": self.q_,
            "transitions": list(self.transitions_),
        }
