"""The interaction loop, regret and fairness metrics, and replication."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import AgentPopulation, decide
from .base import Policy
from .core import AgentContext, RoundRecord, ValidationError
from .rewards import RewardModel

log = logging.getLogger(__name__)

METRICS = ("welfare", "eq4")


def true_loss(true_means: Sequence[float], arm: int, followed: int) -> float:
    """``max_i mu_i - mu_arm * y``."""
    return max(true_means) - true_means[arm - 1] * followed


def regret(records: Sequence[RoundRecord], true_means: Sequence[float]) -> float:
    """Realized loss minus the best single arm's loss on the same follow sequence."""
    realized = sum(true_loss(true_means, r.arm, r.followed) for r in records)
    best = min(
        sum(true_loss(true_means, i, r.followed) for r in records)
        for i in range(1, len(true_means) + 1)
    )
    return realized - best


def welfare_regret(records: Sequence[RoundRecord], true_means: Sequence[float]) -> float:
    """Realized loss against the best arm followed every round.

    An ignored recommendation costs the full ``max_i mu_i``.
    """
    return sum(true_loss(true_means, r.arm, r.followed) for r in records)


def fairness_audit(ctx: AgentContext, arm: int, true_means: Sequence[float], cost: float, gamma: float) -> bool:
    """``(beta + 1{mu_arm < cost}) / (alpha + 1) <= gamma``."""
    bad = 1 if true_means[arm - 1] < cost else 0
    return (ctx.bad_outcomes + bad) / (ctx.visits + 1) <= gamma


@dataclass
class RunResult:
    seed: object
    true_means: tuple
    regret_path: np.ndarray
    welfare_path: np.ndarray
    follow_rate: float
    fairness_violations: int
    records: tuple = ()
    transitions: list = field(default_factory=list)
    policy: str = ""

    @property
    def regret(self) -> float:
        return float(self.regret_path[-1])

    @property
    def welfare_regret(self) -> float:
        return float(self.welfare_path[-1])

    def metric(self, name: str) -> float:
        return self.welfare_regret if name == "welfare" else self.regret

    def path(self, name: str) -> np.ndarray:
        return self.welfare_path if name == "welfare" else self.regret_path


def run_episode(
    policy: Policy,
    reward_model: RewardModel,
    population: AgentPopulation,
    horizon: int,
    seed=None,
    mu1: Optional[float] = None,
    keep_records: bool = True,
    baseline_belief: str = "history",
) -> RunResult:
    """Play ``horizon`` rounds: agent arrives, policy recommends, agent decides,
    reward is realized only when followed, then both sides update."""
    if horizon < 1:
        raise ValidationError("horizon must be positive")
    rng = np.random.default_rng(seed)
    means = reward_model.true_means
    m = len(means)
    mu_star = max(means)
    policy.reset(m, rng, mu1=mu1, true_means=means if policy.full_information else None)
    population.reset()

    eq4 = np.empty(horizon)
    welfare = np.empty(horizon)
    records = []
    followed_total = 0
    collected = 0.0
    violations = 0
    prior = population.prior

    for t in range(1, horizon + 1):
        agent_id, ctx = population.next_agent(rng)
        rec = policy.recommend(t, ctx, rng)
        arm = rec.arm
        if not fairness_audit(ctx, arm, means, ctx.cost, ctx.tolerance):
            violations += 1
        if rec.withheld:
            y = 0
        else:
            y = decide(rec.disclosure, ctx.cost, prior, rec.phase, baseline_belief)
        reward = reward_model.sample(arm, rng) if y else None
        policy.update(t, arm, y, reward)
        population.record(agent_id, ctx, y, reward)

        followed_total += y
        collected += means[arm - 1] * y
        eq4[t - 1] = mu_star * followed_total - collected
        welfare[t - 1] = t * mu_star - collected
        if keep_records:
            records.append(RoundRecord(t, arm, y, reward, rec.probs, rec.phase, policy.name))

    return RunResult(
        seed=seed,
        true_means=tuple(means),
        regret_path=eq4,
        welfare_path=welfare,
        follow_rate=followed_total / horizon,
        fairness_violations=violations,
        records=tuple(records),
        transitions=list(getattr(policy, "transitions_", [])),
        policy=policy.name,
    )


def percentile_band(values: Sequence[float], level: float = 0.90) -> tuple:
    """Empirical central band with linear interpolation."""
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(np.asarray(values, dtype=float), [tail, 100.0 - tail])
    return float(lo), float(hi)


@dataclass
class AggregateResult:
    label: str
    metric: str
    regrets: np.ndarray
    mean_regret: float
    ci_low: float
    ci_high: float
    follow_rates: np.ndarray
    fairness_violations: int
    violations_per_run: Optional[np.ndarray] = None
    mean_path: Optional[np.ndarray] = None
    seeds: list = field(default_factory=list)

    @classmethod
    def from_runs(cls, runs: Sequence[RunResult], metric: str = "welfare", label: str = "", level: float = 0.90):
        regrets = np.array([r.metric(metric) for r in runs])
        lo, hi = percentile_band(regrets, level)
        mean = float(regrets.mean())
        return cls(
            label=label,
            metric=metric,
            regrets=regrets,
            mean_regret=mean,
            ci_low=min(lo, mean),
            ci_high=max(hi, mean),
            follow_rates=np.array([r.follow_rate for r in runs]),
            fairness_violations=int(sum(r.fairness_violations for r in runs)),
            violations_per_run=np.array([r.fairness_violations for r in runs]),
            mean_path=np.mean([r.path(metric) for r in runs], axis=0),
            seeds=[r.seed for r in runs],
        )


def replication_seeds(base_seed: int, rep: int) -> tuple:
    """Independent (environment, dynamics) streams for replication ``rep``.

    Streams depend only on ``(base_seed, rep)``, so adding replications never
    changes earlier ones.
    """
    env = np.random.SeedSequence(base_seed, spawn_key=(rep, 0))
    dyn = np.random.SeedSequence(base_seed, spawn_key=(rep, 1))
    return env, dyn


def _run_one(args):
    config, rep = args
    return config.run_replication(rep)


def replicate(config, n_reps: int, jobs: int = 1, label: str = "") -> AggregateResult:
    """Run ``n_reps`` seeded episodes of ``config`` and aggregate.

    ``config`` must provide ``run_replication(rep) -> RunResult`` and a
    ``metric`` attribute. Results are ordered by replication index whatever
    the completion order.
    """
    if n_reps < 1:
        raise ValidationError("n_reps must be at least 1")
    tasks = [(config, r) for r in range(n_reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one, tasks, chunksize=max(1, n_reps // (4 * jobs))))
    else:
        runs = [_run_one(t) for t in tasks]
    return AggregateResult.from_runs(runs, getattr(config, "metric", "welfare"), label or getattr(config, "label", ""))
