"""Modified adaptive recommendation policy (MARP) for private, heterogeneous costs.

Exponential weights over all arms, driven by importance-weighted estimates of
each arm's loss from followed rounds only.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .base import Policy, Recommendation, fairness_gate
from .core import HistoryView, MarpRound, ProbabilityVector, RewardHistory, ValidationError, sample_arm


class ZeroPropensity(ValidationError):
    pass


def eta(m: int, t: int, mode: str = "fixed", horizon: Optional[int] = None) -> float:
    """Learning rate: ``sqrt(8 ln m / T)`` (fixed) or ``sqrt(8 ln m / t)`` (anytime)."""
    if t < 1:
        raise ValidationError("t starts at 1")
    if mode == "fixed":
        if not horizon or horizon < 1:
            raise ValidationError("fixed learning rate needs a horizon T >= 1")
        return math.sqrt(8.0 * math.log(m) / horizon)
    if mode == "anytime":
        return math.sqrt(8.0 * math.log(m) / t)
    raise ValidationError(f"unknown eta mode {mode!r}")


def estimated_loss(i: int, arm: int, followed: int, reward: Optional[float], propensity: float) -> float:
    """``-X * y / p`` for the recommended arm, zero for every other arm."""
    if i != arm:
        return 0.0
    if propensity <= 0.0:
        raise ZeroPropensity(f"arm {arm} was recommended with probability {propensity}")
    if not followed:
        return 0.0
    return -reward / propensity


def update_weights(cum_losses: Sequence[float], eta_value: float) -> ProbabilityVector:
    """Softmax of ``-eta * L_i``, shifted by ``min L`` so the largest exponent is 0."""
    losses = np.asarray(cum_losses, dtype=float)
    z = np.exp(-eta_value * (losses - losses.min()))
    w = z / z.sum()
    return ProbabilityVector(tuple(w.tolist()))


class MARP(Policy):
    """Exponential-weights recommendation with a fairness gate.

    Parameters
    ----------
    horizon : int, optional
        ``T`` for the fixed learning rate; ignored in anytime mode.
    eta_mode : {"fixed", "anytime"}, default="fixed"
    full_information : bool, default=False
        Sanity variant: update every arm with its exact loss
        ``max_j mu_j - mu_i * y_t`` instead of the importance-weighted
        estimate. Needs the true means at :meth:`reset`.
    """

    name = "marp"

    def __init__(self, horizon: Optional[int] = 5000, eta_mode: str = "fixed", full_information: bool = False):
        self.horizon = horizon
        self.eta_mode = eta_mode
        self.full_information = full_information

    def reset(self, m, rng, mu1=None, true_means=None):
        if self.full_information:
            if true_means is None:
                raise ValidationError("the full-information variant needs the true means")
            self.true_means_ = np.asarray(true_means, dtype=float)
        eta(m, 1, self.eta_mode, self.horizon)  # validates the mode
        self.m_ = m
        self.cum_loss_ = np.zeros(m)
        self.history_ = RewardHistory()
        self.propensity_ = 1.0
        self.weights_ = ProbabilityVector.uniform(m)
        return self

    def current_weights(self, t: int) -> ProbabilityVector:
        if t == 1:
            return ProbabilityVector.uniform(self.m_)
        return update_weights(self.cum_loss_, eta(self.m_, t, self.eta_mode, self.horizon))

    def recommend(self, t, ctx, rng):
        disclosure = MarpRound(HistoryView(self.history_, len(self.history_)))
        if fairness_gate(ctx):
            probs = self.current_weights(t)
            arm = sample_arm(probs, rng.random())
            self.propensity_ = probs[arm]
        else:
            # np.argmin returns the lowest index among ties
            arm = int(np.argmin(self.cum_loss_)) + 1
            probs = ProbabilityVector.point_mass(arm, self.m_)
            self.propensity_ = 1.0
        self.weights_ = probs
        return Recommendation(arm, probs, disclosure, "marp")

    def update(self, t, arm, followed, reward):
        if followed:
            self.history_.append(reward)
        if self.full_information:
            mu = self.true_means_
            self.cum_loss_ += mu.max() - mu * followed
        elif followed:
            self.cum_loss_[arm - 1] += estimated_loss(arm, arm, followed, reward, self.propensity_)

    def state_summary(self):
        return {"cum_loss": self.cum_loss_.tolist()}
