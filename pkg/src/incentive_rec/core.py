"""Domain types shared by every policy, and the randomized-recommendation sampler.

Arms are indexed ``1..m`` in every public surface (records, disclosures,
CSV output). Internal arrays are 0-based; convert at the boundary.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Optional, Sequence, Union

PROB_TOL = 1e-9


class ValidationError(ValueError):
    """Base class for invalid inputs to the domain types."""


class NegativeEntry(ValidationError):
    pass


class SumNotOne(ValidationError):
    pass


class WrongLength(ValidationError):
    pass


@dataclass(frozen=True)
class ProbabilityVector:
    """Recommendation probabilities over arms ``1..m``.

    Construct through :func:`validate_prob_vector`; the constructor itself
    does no checking so policies can build vectors they already know are valid.
    """

    entries: tuple
    cumulative: tuple = field(repr=False, compare=False, default=())

    def __post_init__(self):
        if not self.cumulative:
            object.__setattr__(self, "cumulative", tuple(accumulate(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, arm: int) -> float:
        """Probability of 1-based ``arm``."""
        return self.entries[arm - 1]

    @classmethod
    def point_mass(cls, arm: int, m: int) -> "ProbabilityVector":
        entries = [0.0] * m
        entries[arm - 1] = 1.0
        return cls(tuple(entries))

    @classmethod
    def uniform(cls, m: int) -> "ProbabilityVector":
        return cls(tuple([1.0 / m] * m))


def validate_prob_vector(entries: Sequence[float], m: Optional[int] = None) -> ProbabilityVector:
    """Check ``entries`` and return a renormalized :class:`ProbabilityVector`.

    Raises
    ------
    WrongLength
        Empty input, fewer than two arms, or length different from ``m``.
    NegativeEntry
        Any entry below zero (or NaN).
    SumNotOne
        ``|sum - 1| > 1e-9``.
    """
    values = [float(v) for v in entries]
    if len(values) < 2:
        raise WrongLength(f"need at least 2 arms, got {len(values)}")
    if m is not None and len(values) != m:
        raise WrongLength(f"expected {m} entries, got {len(values)}")
    for j, v in enumerate(values, start=1):
        if not v >= 0.0:
            raise NegativeEntry(f"entry for arm {j} is {v}")
    total = math.fsum(values)
    if abs(total - 1.0) > PROB_TOL:
        raise SumNotOne(f"entries sum to {total!r}")
    return ProbabilityVector(tuple(v / total for v in values))


def sample_arm(p: ProbabilityVector, u: float) -> int:
    """Map a uniform draw ``u`` in [0, 1) to an arm using half-open intervals.

    Arm ``j`` owns ``[P_{j-1}, P_j)`` where ``P_j`` is the cumulative sum, so a
    draw sitting exactly on a boundary goes to the next arm.
    """
    cum = p.cumulative
    j = bisect_right(cum, u)
    if j >= len(cum):
        # rounding left the last boundary just under u; take the last arm with mass
        j = max(i for i, v in enumerate(p.entries) if v > 0.0)
    return j + 1


@dataclass
class ArmStats:
    """Running per-arm statistics.

    ``rewards`` keeps prefix sums so the mean of the first ``q`` rewards is
    available in O(1); elimination rules compare arms at equal sample sizes.
    """

    pulls: int = 0
    reward_sum: float = 0.0
    cum_est_loss: float = 0.0
    prefix: list = field(default_factory=list, repr=False)

    def add(self, reward: float) -> None:
        self.pulls += 1
        self.reward_sum += reward
        self.prefix.append(self.reward_sum)

    @property
    def mean(self) -> float:
        if self.pulls == 0:
            raise ValueError("empirical mean undefined for an unpulled arm")
        return self.reward_sum / self.pulls

    def mean_of_first(self, q: int) -> float:
        if not 1 <= q <= self.pulls:
            raise ValueError(f"arm has {self.pulls} rewards, asked for the first {q}")
        return self.prefix[q - 1] / q


@dataclass(frozen=True)
class AgentContext:
    """One agent's private cost, fairness history and exploration tolerance."""

    cost: float
    visits: int = 0
    bad_outcomes: int = 0
    tolerance: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cost < 1.0:
            raise ValidationError(f"cost must lie in (0, 1), got {self.cost}")
        if not 0.0 <= self.tolerance <= 1.0:
            raise ValidationError(f"tolerance must lie in [0, 1], got {self.tolerance}")
        if not 0 <= self.bad_outcomes <= self.visits:
            raise ValidationError(
                f"need 0 <= bad_outcomes <= visits, got ({self.bad_outcomes}, {self.visits})"
            )


class RewardHistory:
    """Append-only log of rewards from followed rounds.

    Disclosures hold a ``(history, upto)`` view so the message an agent saw is
    fixed even though the log keeps growing. No arm identities are stored.
    """

    __slots__ = ("_values", "_prefix")

    def __init__(self):
        self._values: list = []
        self._prefix: list = [0.0]

    def append(self, reward: float) -> None:
        self._values.append(reward)
        self._prefix.append(self._prefix[-1] + reward)

    def __len__(self) -> int:
        return len(self._values)

    def total(self, upto: Optional[int] = None) -> float:
        return self._prefix[len(self._values) if upto is None else upto]

    def mean(self, upto: Optional[int] = None, start: int = 0) -> Optional[float]:
        end = len(self._values) if upto is None else upto
        if end <= start:
            return None
        return (self._prefix[end] - self._prefix[start]) / (end - start)

    def values(self, upto: Optional[int] = None) -> tuple:
        return tuple(self._values[: upto if upto is not None else len(self._values)])


@dataclass(frozen=True)
class HistoryView:
    """The first ``upto`` entries of a :class:`RewardHistory`."""

    history: RewardHistory
    upto: int

    def __len__(self) -> int:
        return self.upto

    def mean(self) -> Optional[float]:
        return self.history.mean(self.upto)

    def total(self) -> float:
        return self.history.total(self.upto)

    def values(self) -> tuple:
        return self.history.values(self.upto)


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ValidationError(f"explore_rate must lie in [0, 1], got {rate}")


@dataclass(frozen=True)
class ArpInitial:
    """Stage-1 message: arm 1 beats the cost and nobody is exploring."""

    mu1_exceeds_cost: bool = True
    explore_rate: float = 0.0

    def __post_init__(self):
        _check_rate(self.explore_rate)


@dataclass(frozen=True)
class ArpStage:
    """Sampling-stage message: current explore rate plus followed rewards so far.

    ``stage_bounds`` holds history offsets at each earlier stage end, so an
    agent can split the disclosed rewards by stage. ``rounds_observed`` is the
    number of rounds (followed or not) the disclosed history spans.
    """

    explore_rate: float
    history: HistoryView
    rounds_observed: int
    stage_bounds: tuple = ()

    def __post_init__(self):
        _check_rate(self.explore_rate)

    def stage_means(self) -> tuple:
        out, start = [], 0
        for end in self.stage_bounds:
            mean = self.history.history.mean(end, start)
            if mean is not None:
                out.append(mean)
            start = end
        return tuple(out)


@dataclass(frozen=True)
class ArpExplore:
    """Exploration/exploitation message: per-arm sample means of the active set.

    ``radius`` is the elimination confidence radius at the current sample size.
    """

    active: tuple
    sample_means: tuple
    radius: float


@dataclass(frozen=True)
class MarpRound:
    """Exponential-weights message: policy form plus followed-reward history."""

    history: HistoryView
    policy_form: str = "exp-weights over cumulative estimated loss"


@dataclass(frozen=True)
class Transparent:
    """Full-information message used by the baselines.

    Carries the recommended arm's own empirical mean (``None`` if unpulled)
    alongside the pooled followed-reward history.
    """

    history: HistoryView
    arm_mean: Optional[float] = None


Disclosure = Union[ArpInitial, ArpStage, ArpExplore, MarpRound, Transparent]


@dataclass(frozen=True)
class RoundRecord:
    round: int
    arm: int
    followed: int
    reward: Optional[float]
    policy_probs: ProbabilityVector
    phase_label: str
    policy: str = ""

    def __post_init__(self):
        if self.followed not in (0, 1):
            raise ValidationError(f"followed must be 0 or 1, got {self.followed}")
        if (self.reward is not None) != (self.followed == 1):
            raise ValidationError("reward must be present exactly when followed == 1")
        if not 1 <= self.arm <= len(self.policy_probs):
            raise ValidationError(f"arm {self.arm} outside 1..{len(self.policy_probs)}")

    CSV_HEADER = ("round", "policy", "arm", "followed", "reward", "phase")

    def csv_row(self) -> list:
        return [
            self.round,
            self.policy,
            self.arm,
            self.followed,
            "" if self.reward is None else repr(self.reward),
            self.phase_label,
        ]
