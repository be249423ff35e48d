"""Policy interface shared by ARP, MARP and the baselines.

Policies follow the scikit-learn estimator convention: ``__init__`` only
stores hyperparameters (so ``get_params``/``clone`` work), and everything
learned during an episode lives in trailing-underscore attributes created
by :meth:`Policy.reset`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .core import AgentContext, Disclosure, ProbabilityVector


@dataclass(frozen=True)
class Recommendation:
    arm: int
    probs: ProbabilityVector
    disclosure: Disclosure
    phase: str
    withheld: bool = False


def fairness_gate(ctx: AgentContext) -> bool:
    """``(beta + 1) / (alpha + 1) <= gamma``: the agent tolerates one more bad outcome."""
    return (ctx.bad_outcomes + 1) / (ctx.visits + 1) <= ctx.tolerance


class Policy(BaseEstimator):
    name = "policy"
    requires_known_cost = False
    full_information = False

    def reset(
        self,
        m: int,
        rng: np.random.Generator,
        mu1: Optional[float] = None,
        true_means: Optional[Sequence[float]] = None,
    ) -> "Policy":
        raise NotImplementedError

    def recommend(self, t: int, ctx: AgentContext, rng: np.random.Generator) -> Recommendation:
        raise NotImplementedError

    def update(self, t: int, arm: int, followed: int, reward: Optional[float]) -> None:
        raise NotImplementedError

    def state_summary(self) -> dict:
        return {}
