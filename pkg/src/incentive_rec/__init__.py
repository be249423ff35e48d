"""Recommendation policies that stay worth following for self-interested agents."""
from .base import Policy, Recommendation
from .config import ExperimentConfig
from .engine import AggregateResult, RunResult, replicate, run_episode
from .policy_arp import ARP
from .policy_baselines import UCB1, EvenDarElimination, FirstBestElimination, FullTransparency, Thompson
from .policy_marp import MARP

__all__ = [
    "ARP",
    "MARP",
    "UCB1",
    "Thompson",
    "EvenDarElimination",
    "FirstBestElimination",
    "FullTransparency",
    "Policy",
    "Recommendation",
    "ExperimentConfig",
    "AggregateResult",
    "RunResult",
    "replicate",
    "run_episode",
]
__version__ = "0.1.0"
