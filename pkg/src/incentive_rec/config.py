"""Declarative experiment description and per-replication instance building."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from . import rewards as rw
from .agents import AgentPopulation
from .core import ValidationError
from .engine import METRICS, RunResult, replication_seeds, run_episode
from .policy_arp import ARP, theta_tau
from .policy_baselines import EvenDarElimination, FirstBestElimination, FullTransparency, Thompson, UCB1
from .policy_marp import MARP

POLICIES = ("arp", "marp", "elimination", "ucb", "thompson", "first_best", "full_transparency")
REWARD_MODELS = ("gaussian", "beta", "uplift", "fixed")
ENV_PREFIX = "INCENTIVE_REC_"


class ConfigError(ValidationError):
    """Every violated constraint, one per line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    """One experiment cell. Keys are flat so configs and manifests diff cleanly.

    ``cost`` is the constant cost when ``cost_model == "constant"``;
    ``cost_a``/``cost_b`` parameterize the Beta cost model.
    ``means`` pins the arm means (required for ``fixed``; optional otherwise,
    e.g. cluster means from an ingest manifest).
    """

    policy: str = "arp"
    reward_model: str = "gaussian"
    m: int = 5
    T: int = 5000
    n_reps: int = 500
    seed: int = 0
    cost_model: str = "constant"
    cost: float = 0.2
    cost_a: float = 1.0
    cost_b: float = 2.0
    means: Optional[list] = None
    uplift_n: int = 100_000
    sigma: float = 0.1
    clamp_mu1: Any = "auto"
    mu1_margin: float = 0.1
    population: str = "fresh"
    pool_size: int = 100
    departures: bool = True
    gamma: Any = 1.0
    prior: float = 0.5
    baseline_belief: str = "history"
    k: int = 10
    margin: Any = "auto"
    tau: float = 0.2
    min_prior_prob: Any = "auto"
    fallback: str = "known"
    strict: bool = False
    eta_mode: str = "fixed"
    full_information: bool = False
    elim_c: float = 10.0
    elim_delta: float = 0.05
    thompson_posterior: str = "gaussian"
    baseline_feedback: str = "payoff"
    metric: str = "welfare"
    label: str = ""
    jobs: int = 1
    out: str = "results"

    # -- construction ------------------------------------------------------

    @classmethod
    def from_mapping(cls, data: Mapping, env: Optional[Mapping] = None) -> "ExperimentConfig":
        """Build from a flat mapping, then apply ``INCENTIVE_REC_*`` env overrides."""
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ConfigError([f"unknown key {k!r}" for k in unknown])
        values = dict(data)
        for key, raw in (env if env is not None else os.environ).items():
            if key.startswith(ENV_PREFIX):
                lowered = {n.lower(): n for n in names}
                name = lowered.get(key[len(ENV_PREFIX):].lower())
                if name is None:
                    raise ConfigError([f"unknown env override {key}"])
                values[name] = _coerce(raw, names[name])
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        problems = []
        if self.policy not in POLICIES:
            problems.append(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.reward_model not in REWARD_MODELS:
            problems.append(f"reward_model must be one of {REWARD_MODELS}, got {self.reward_model!r}")
        if self.m < 2:
            problems.append("m must be at least 2")
        if self.T < 1:
            problems.append("T must be at least 1")
        if self.n_reps < 1:
            problems.append("n_reps must be at least 1")
        if self.cost_model not in ("constant", "beta"):
            problems.append(f"cost_model must be 'constant' or 'beta', got {self.cost_model!r}")
        elif self.cost_model == "constant" and not 0.0 < self.cost < 1.0:
            problems.append("constant cost must lie in (0, 1)")
        elif self.cost_model == "beta" and (self.cost_a <= 0 or self.cost_b <= 0):
            problems.append("Beta cost parameters must be positive")
        if self.policy in ("arp", "full_transparency") and self.cost_model != "constant":
            problems.append(f"{self.policy} needs a known constant cost (cost_model: constant)")
        if self.means is not None:
            if len(self.means) != self.m:
                problems.append(f"means has {len(self.means)} entries but m = {self.m}")
            elif any(not 0.0 <= float(x) <= 1.0 for x in self.means):
                problems.append("means must lie in [0, 1]")
        elif self.reward_model == "fixed":
            problems.append("reward_model 'fixed' needs explicit means")
        if self.population not in ("fresh", "pool"):
            problems.append("population must be 'fresh' or 'pool'")
        if self.population == "pool" and self.pool_size < 1:
            problems.append("pool_size must be positive")
        if not (self.gamma == "uniform" or _is_unit(self.gamma)):
            problems.append("gamma must be a number in [0, 1] or 'uniform'")
        if self.margin != "auto" and not (_is_number(self.margin) and self.margin > 0):
            problems.append("margin must be positive or 'auto'")
        if self.cost_model == "constant" and not 0.0 < self.tau < 1.0 - self.cost:
            problems.append("tau must lie in (0, 1 - cost)")
        if self.min_prior_prob != "auto" and not (_is_number(self.min_prior_prob) and 0 < self.min_prior_prob <= 1):
            problems.append("min_prior_prob must lie in (0, 1] or be 'auto'")
        if self.fallback not in ("known", "exploit"):
            problems.append("fallback must be 'known' or 'exploit'")
        if self.eta_mode not in ("fixed", "anytime"):
            problems.append("eta_mode must be 'fixed' or 'anytime'")
        if self.metric not in METRICS:
            problems.append(f"metric must be one of {METRICS}")
        if self.baseline_belief not in ("history", "arm"):
            problems.append("baseline_belief must be 'history' or 'arm'")
        if self.clamp_mu1 not in ("auto", True, False):
            problems.append("clamp_mu1 must be true, false or 'auto'")
        if self.thompson_posterior not in ("gaussian", "beta"):
            problems.append("thompson_posterior must be 'gaussian' or 'beta'")
        if self.baseline_feedback not in ("payoff", "followed"):
            problems.append("baseline_feedback must be 'payoff' or 'followed'")
        if self.k < 1:
            problems.append("k must be at least 1")
        if self.jobs < 1:
            problems.append("jobs must be at least 1")
        if problems:
            raise ConfigError(problems)

    # -- instance building -------------------------------------------------

    @property
    def cost_spec(self) -> str:
        if self.cost_model == "constant":
            return f"c={self.cost:g}"
        return f"Beta({self.cost_a:g},{self.cost_b:g})"

    def cost_model_obj(self) -> rw.CostModel:
        if self.cost_model == "constant":
            return rw.ConstantCost(self.cost)
        return rw.BetaCost(self.cost_a, self.cost_b)

    def should_clamp(self) -> bool:
        if self.clamp_mu1 == "auto":
            return self.cost_model == "constant"
        return bool(self.clamp_mu1)

    def reward_model_obj(self, rng: np.random.Generator) -> rw.RewardModel:
        kind, m = self.reward_model, self.m
        if kind == "gaussian":
            means = self.means or rw.gen_gaussian_means(m, rng)
            model = rw.TruncGaussian(tuple(means), self.sigma)
        elif kind == "beta":
            if self.means:
                model = rw.BetaArms(tuple(1.0 / x - 1.0 for x in self.means))
            else:
                model = rw.BetaArms(tuple(rw.gen_beta_arm_shapes(m, rng)))
        elif kind == "uplift":
            means = self.means or rw.gen_uplift_means(m, rng)
            model = rw.BernoulliUplift(tuple(means), self.uplift_n)
        else:
            model = rw.FixedMeans(tuple(self.means))
        if self.should_clamp() and self.cost_model == "constant":
            clamped = rw.clamp_known_arm(model.true_means, self.cost, self.mu1_margin)
            if clamped[0] != model.true_means[0]:
                model = model.with_means(clamped)
        return model

    def resolved_min_prior_prob(self) -> float:
        if self.min_prior_prob != "auto":
            return float(self.min_prior_prob)
        c = self.cost if self.cost_model == "constant" else self.cost_model_obj().mean
        return rw.min_prior_prob(self.reward_model, self.m, c, self.tau)

    def build_policy(self):
        p = self.policy
        if p == "arp":
            return ARP(
                c_star=self.cost,
                horizon=self.T,
                k=self.k,
                margin=self.margin,
                tau=self.tau,
                min_prior_prob=self.resolved_min_prior_prob(),
                fallback=self.fallback,
                strict=self.strict,
            )
        if p == "marp":
            return MARP(horizon=self.T, eta_mode=self.eta_mode, full_information=self.full_information)
        if p == "elimination":
            return EvenDarElimination(self.elim_c, self.elim_delta, self.baseline_feedback)
        if p == "ucb":
            return UCB1(self.baseline_feedback)
        if p == "thompson":
            return Thompson(self.thompson_posterior, feedback=self.baseline_feedback)
        if p == "first_best":
            return FirstBestElimination(self.T, theta_tau(self.m, self.tau, self.resolved_min_prior_prob()))
        return FullTransparency(self.cost)

    def build_population(self) -> AgentPopulation:
        if self.gamma == "uniform":
            tolerance = _uniform_tolerance
        else:
            tolerance = float(self.gamma)
        return AgentPopulation(
            self.cost_model_obj(),
            tolerance=tolerance,
            pool_size=self.pool_size if self.population == "pool" else None,
            prior=self.prior,
            departures=self.departures,
        )

    def instance(self, rep: int) -> tuple:
        """``(reward_model, dynamics_seed)`` for replication ``rep``."""
        env_seed, dyn_seed = replication_seeds(self.seed, rep)
        return self.reward_model_obj(np.random.default_rng(env_seed)), dyn_seed

    def run_replication(self, rep: int, keep_records: bool = False) -> RunResult:
        model, dyn_seed = self.instance(rep)
        result = run_episode(
            self.build_policy(),
            model,
            self.build_population(),
            self.T,
            seed=dyn_seed,
            mu1=model.true_means[0],
            keep_records=keep_records,
            baseline_belief=self.baseline_belief,
        )
        result.seed = (self.seed, rep)
        return result


def _uniform_tolerance(rng):
    return rng.random()


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_unit(x) -> bool:
    return _is_number(x) and 0.0 <= x <= 1.0


def _coerce(raw: str, f: dataclasses.Field):
    value = yaml.safe_load(raw)
    if f.type in ("int",) and isinstance(value, float) and value.is_integer():
        return int(value)
    return value
