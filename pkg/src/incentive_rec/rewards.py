"""Reward and cost models for the synthetic and cluster-derived experiments."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .core import ValidationError

GAUSSIAN_MEAN_HIGH = 0.6
UPLIFT_PRIOR = (0.5, 3.0)


def _check_means(means: Sequence[float]) -> tuple:
    means = tuple(float(x) for x in means)
    if len(means) < 2:
        raise ValidationError("need at least 2 arms")
    if any(not 0.0 <= x <= 1.0 for x in means):
        raise ValidationError(f"arm means must lie in [0, 1]: {means}")
    return means


class RewardModel:
    """Base class. Subclasses expose ``true_means`` and draw rewards in [0, 1]."""

    kind = "base"
    true_means: tuple

    @property
    def m(self) -> int:
        return len(self.true_means)

    def sample(self, arm: int, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def with_means(self, means: Sequence[float]) -> "RewardModel":
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind, "true_means": list(self.true_means)}


@dataclass(frozen=True)
class TruncGaussian(RewardModel):
    """``N(mu_i, sigma^2)`` conditioned on [0, 1], drawn by rejection."""

    true_means: tuple
    sigma: float = 0.1
    kind = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "true_means", _check_means(self.true_means))

    def sample(self, arm, rng):
        mu = self.true_means[arm - 1]
        while True:
            x = mu + self.sigma * rng.standard_normal()
            if 0.0 <= x <= 1.0:
                return x

    def with_means(self, means):
        return TruncGaussian(tuple(means), self.sigma)

    def describe(self):
        # the truncated law's mean differs slightly from mu_i; regret uses mu_i
        return {**super().describe(), "sigma": self.sigma}


@dataclass(frozen=True)
class BetaArms(RewardModel):
    """Arm ``i`` pays ``Beta(1, shape_i)``, so its mean is ``1 / (1 + shape_i)``."""

    shapes: tuple
    kind = "beta"

    def __post_init__(self):
        shapes = tuple(float(b) for b in self.shapes)
        if len(shapes) < 2 or any(b <= 0 for b in shapes):
            raise ValidationError(f"Beta shapes must be positive, got {shapes}")
        object.__setattr__(self, "shapes", shapes)

    @property
    def true_means(self):
        return tuple(1.0 / (1.0 + b) for b in self.shapes)

    def sample(self, arm, rng):
        return float(rng.beta(1.0, self.shapes[arm - 1]))

    def with_means(self, means):
        return BetaArms(tuple(1.0 / x - 1.0 for x in means))

    def describe(self):
        return {**super().describe(), "shapes": list(self.shapes)}


@dataclass(frozen=True)
class BernoulliUplift(RewardModel):
    """Average of ``n`` Bernoulli(mu_i) draws, sampled as one Binomial draw."""

    true_means: tuple
    n: int = 100_000
    kind = "uplift"

    def __post_init__(self):
        object.__setattr__(self, "true_means", _check_means(self.true_means))
        if self.n < 1:
            raise ValidationError("n must be positive")

    def sample(self, arm, rng):
        return rng.binomial(self.n, self.true_means[arm - 1]) / self.n

    def with_means(self, means):
        return BernoulliUplift(tuple(means), self.n)

    def describe(self):
        return {**super().describe(), "n": self.n}


@dataclass(frozen=True)
class FixedMeans(RewardModel):
    """Deterministic rewards equal to the arm mean. Test fixture."""

    true_means: tuple
    kind = "fixed"

    def __post_init__(self):
        object.__setattr__(self, "true_means", _check_means(self.true_means))

    def sample(self, arm, rng):
        return self.true_means[arm - 1]

    def with_means(self, means):
        return FixedMeans(tuple(means))


class CostModel:
    kind = "base"

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantCost(CostModel):
    value: float
    kind = "constant"

    def __post_init__(self):
        if not 0.0 < self.value < 1.0:
            raise ValidationError(f"constant cost must lie in (0, 1), got {self.value}")

    def sample(self, rng):
        return self.value

    @property
    def mean(self):
        return self.value


@dataclass(frozen=True)
class BetaCost(CostModel):
    a: float
    b: float
    kind = "beta"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValidationError(f"Beta cost parameters must be positive, got ({self.a}, {self.b})")

    def sample(self, rng):
        while True:
            c = float(rng.beta(self.a, self.b))
            if 0.0 < c < 1.0:
                return c

    @property
    def mean(self):
        return self.a / (self.a + self.b)


def gen_gaussian_means(m: int, rng: np.random.Generator) -> list:
    """``m`` means i.i.d. uniform on [0, 0.6]."""
    _check_m(m)
    return list(rng.uniform(0.0, GAUSSIAN_MEAN_HIGH, size=m))


def gen_beta_arm_shapes(m: int, rng: np.random.Generator) -> list:
    """A uniformly random permutation of ``1..m``."""
    _check_m(m)
    return [int(b) for b in rng.permutation(np.arange(1, m + 1))]


def gen_uplift_means(m: int, rng: np.random.Generator) -> list:
    """``m`` means i.i.d. ``Beta(0.5, 3)``."""
    _check_m(m)
    a, b = UPLIFT_PRIOR
    return list(rng.beta(a, b, size=m))


def _check_m(m: int) -> None:
    if m < 2:
        raise ValidationError(f"need m >= 2, got {m}")


def sample_reward(model: RewardModel, arm: int, rng: np.random.Generator) -> float:
    if not 1 <= arm <= model.m:
        raise ValidationError(f"arm {arm} outside 1..{model.m}")
    return model.sample(arm, rng)


def sample_cost(model: CostModel, rng: np.random.Generator) -> float:
    return model.sample(rng)


def clamp_known_arm(means: Sequence[float], c_star: float, margin: float = 0.1) -> list:
    """Raise arm 1's mean to at least ``c_star + margin`` so ``mu_1 > c_star`` holds."""
    out = list(means)
    out[0] = min(1.0, max(out[0], c_star + margin))
    return out


def min_prior_prob(kind: str, m: int, c_star: float, tau: float) -> float:
    """``min_i P(mu_i - c_star >= tau)`` under each generator's prior.

    gaussian: means uniform on [0, 0.6];
    beta: the fraction of shapes ``b`` in ``1..m`` with ``1/(1+b) - c_star >= tau``;
    uplift: ``1 - F(c_star + tau)`` for the Beta(0.5, 3) CDF;
    anything else: a uniform prior on [0, 1].
    """
    threshold = c_star + tau
    if kind == "gaussian":
        return max(0.0, 1.0 - threshold / GAUSSIAN_MEAN_HIGH)
    if kind == "beta":
        good = sum(1 for b in range(1, m + 1) if 1.0 / (1.0 + b) - c_star >= tau - 1e-12)
        return good / m
    if kind == "uplift":
        return float(stats.beta.sf(threshold, *UPLIFT_PRIOR))
    return max(0.0, 1.0 - threshold)
