"""Myopic agents: belief formation per message type, the follow rule, and
fairness bookkeeping for fresh or returning agents."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .core import (
    AgentContext,
    ArpExplore,
    ArpInitial,
    ArpStage,
    Disclosure,
    MarpRound,
    Transparent,
    ValidationError,
)
from .rewards import CostModel

DEFAULT_PRIOR = 0.5

# which message types each policy phase may emit
PHASE_VARIANTS = {
    "initial": (ArpInitial,),
    "sampling": (ArpStage,),
    "exploration": (ArpExplore,),
    "exploitation": (ArpExplore,),
    "marp": (MarpRound,),
    "baseline": (Transparent,),
    "withheld": (Transparent,),
}


class VariantMismatch(ValidationError):
    pass


def belief(disclosure: Disclosure, prior: float = DEFAULT_PRIOR, baseline_belief: str = "history") -> float:
    """The agent's estimate of the recommended arm's expected reward."""
    if isinstance(disclosure, ArpInitial):
        return 1.0 if disclosure.mu1_exceeds_cost else prior

    if isinstance(disclosure, ArpStage):
        p = disclosure.explore_rate
        total = disclosure.history.total()
        m_hat = total / disclosure.rounds_observed if disclosure.rounds_observed else prior
        means = disclosure.stage_means()
        exploit = max(means) if means else prior
        return p * m_hat + (1.0 - p) * exploit

    if isinstance(disclosure, ArpExplore):
        # every surviving arm passed mean + radius >= cost; credit it with that bound
        vals = [min(1.0, mu + disclosure.radius) for mu in disclosure.sample_means]
        return sum(vals) / len(vals) if vals else prior

    if isinstance(disclosure, MarpRound):
        mean = disclosure.history.mean()
        return prior if mean is None else mean

    if isinstance(disclosure, Transparent):
        if baseline_belief == "arm":
            return prior if disclosure.arm_mean is None else disclosure.arm_mean
        mean = disclosure.history.mean()
        return prior if mean is None else mean

    raise TypeError(f"unknown disclosure {type(disclosure).__name__}")


def decide(
    disclosure: Disclosure,
    cost: float,
    prior: float = DEFAULT_PRIOR,
    phase: Optional[str] = None,
    baseline_belief: str = "history",
) -> int:
    """Follow (1) iff the belief about the recommended arm is at least ``cost``."""
    if phase is not None:
        allowed = PHASE_VARIANTS.get(phase)
        if allowed is None or not isinstance(disclosure, allowed):
            raise VariantMismatch(f"{type(disclosure).__name__} is not a {phase!r} message")
    return int(belief(disclosure, prior, baseline_belief) >= cost)


def update_fairness(ctx: AgentContext, followed: int, reward: Optional[float], cost: Optional[float] = None) -> AgentContext:
    """One more visit; one more bad outcome iff followed with reward below cost."""
    if (reward is not None) != bool(followed):
        raise ValidationError("reward must be present exactly when followed")
    cost = ctx.cost if cost is None else cost
    bad = ctx.bad_outcomes + int(bool(followed) and reward < cost)
    return replace(ctx, visits=ctx.visits + 1, bad_outcomes=bad)


def returns(ctx: AgentContext) -> bool:
    """Whether an agent with this history comes back: ``beta <= gamma * alpha``."""
    return ctx.bad_outcomes <= ctx.tolerance * ctx.visits


Tolerance = Union[float, Callable[[np.random.Generator], float]]


def _draw_tolerance(tolerance: Tolerance, rng) -> float:
    return float(tolerance(rng)) if callable(tolerance) else float(tolerance)


@dataclass
class AgentPopulation:
    """Source of arriving agents.

    ``pool_size=None`` means a fresh agent every round (zero history).
    Otherwise a fixed pool of returning agents is created lazily; each member
    keeps its own cost, tolerance and history, and one is sampled uniformly
    per round.

    With ``departures=True`` a member returns only while its unsatisfactory
    rate ``beta / alpha`` is within its tolerance; a member past that point
    has left the market and its slot goes to a newcomer.
    """

    cost_model: CostModel
    tolerance: Tolerance = 1.0
    pool_size: Optional[int] = None
    prior: float = DEFAULT_PRIOR
    departures: bool = True

    def __post_init__(self):
        if self.pool_size is not None and self.pool_size < 1:
            raise ValidationError("pool_size must be positive")
        self.members: list = []

    @property
    def mode(self) -> str:
        return "fresh" if self.pool_size is None else "pool"

    def reset(self) -> None:
        self.members = []

    def next_agent(self, rng: np.random.Generator) -> tuple:
        """Return ``(agent_id, context)``; fresh agents get id ``-1``."""
        if self.pool_size is None:
            return -1, AgentContext(
                cost=self.cost_model.sample(rng),
                tolerance=_draw_tolerance(self.tolerance, rng),
            )
        if not self.members:
            self.members = [self._newcomer(rng) for _ in range(self.pool_size)]
        idx = int(rng.integers(self.pool_size))
        if self.departures and not returns(self.members[idx]):
            self.members[idx] = self._newcomer(rng)
        return idx, self.members[idx]

    def _newcomer(self, rng) -> AgentContext:
        return AgentContext(cost=self.cost_model.sample(rng), tolerance=_draw_tolerance(self.tolerance, rng))

    def record(self, agent_id: int, ctx: AgentContext, followed: int, reward: Optional[float]) -> AgentContext:
        if agent_id < 0:
            # a fresh agent never returns, so its updated context is discarded
            return ctx
        new = update_fairness(ctx, followed, reward)
        self.members[agent_id] = new
        return new


def next_agent(pop: AgentPopulation, rng: np.random.Generator) -> AgentContext:
    return pop.next_agent(rng)[1]
