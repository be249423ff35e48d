"""Arm construction from uplift-format data: load, standardize, cluster, average.

Input is a CSV with a header, 12 feature columns, then ``exposure`` and
``visit``. Each k-means cluster becomes an arm whose mean is the fraction of
its rows that were both exposed and visited.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from .core import ValidationError

N_FEATURES = 12
N_COLUMNS = N_FEATURES + 2


class ParseError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class EmptyClusterMeans(ValidationError):
    pass


@dataclass(frozen=True)
class UpliftRow:
    features: tuple
    exposure: int
    visit: int

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise SchemaError(f"expected {N_FEATURES} features, got {len(self.features)}")
        if self.exposure not in (0, 1) or self.visit not in (0, 1):
            raise SchemaError("exposure and visit must be 0 or 1")


def _binary(text: str) -> int:
    value = float(text)
    if value not in (0.0, 1.0):
        raise ValueError(f"{text!r} is not binary")
    return int(value)


def load_rows(path, max_rows: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> list:
    """Parse every row, then subsample ``max_rows`` without replacement.

    Subsampled rows keep their file order.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        if len(header) != N_COLUMNS:
            raise SchemaError(f"{path}: header has {len(header)} columns, expected {N_COLUMNS}")
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != N_COLUMNS:
                raise ParseError(f"{path}:{line_no}: {len(record)} columns, expected {N_COLUMNS}")
            try:
                features = tuple(float(x) for x in record[:N_FEATURES])
                rows.append(UpliftRow(features, _binary(record[-2]), _binary(record[-1])))
            except (ValueError, SchemaError) as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from exc
    if max_rows is not None and len(rows) > max_rows:
        rng = rng if rng is not None else np.random.default_rng()
        keep = np.sort(rng.choice(len(rows), size=max_rows, replace=False))
        rows = [rows[i] for i in keep]
    return rows


def feature_matrix(rows: Sequence[UpliftRow]) -> np.ndarray:
    return np.array([r.features for r in rows], dtype=float).reshape(len(rows), N_FEATURES)


def standardize(x: np.ndarray) -> np.ndarray:
    """Per-column z-score; constant columns become zero."""
    x = np.asarray(x, dtype=float)
    sd = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def kmeans(x: np.ndarray, k: int = 20, rng: Optional[np.random.Generator] = None, max_iters: int = 100) -> tuple:
    """k-means++ seeded Lloyd iterations via scikit-learn, one initialization.

    The seed is drawn from ``rng``, so a fixed generator gives a fixed
    assignment. Returns ``(labels, centers, inertia)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= K <= rows, got K={k}, rows={n}")
    rng = rng if rng is not None else np.random.default_rng(0)
    est = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=max_iters, random_state=int(rng.integers(2**31)))
    with warnings.catch_warnings():
        # duplicate points can leave fewer distinct clusters than K
        warnings.simplefilter("ignore", ConvergenceWarning)
        labels = est.fit_predict(x)
    return labels, est.cluster_centers_, float(est.inertia_)


def arm_means(rows: Sequence[UpliftRow], labels: Sequence[int], k: int) -> list:
    """``mu_i = sum_{j in cluster i} D_j * Y_j / N_i``."""
    labels = np.asarray(labels)
    if len(labels) != len(rows):
        raise ValidationError("one label per row required")
    dy = np.array([r.exposure * r.visit for r in rows], dtype=float)
    sizes = np.bincount(labels, minlength=k)
    if (sizes == 0).any():
        raise EmptyClusterMeans(f"clusters {np.flatnonzero(sizes == 0).tolist()} are empty")
    return (np.bincount(labels, weights=dy, minlength=k) / sizes).tolist()


class ClusterArms(ClusterMixin, BaseEstimator):
    """Estimator wrapper: ``fit(rows)`` sets ``labels_``, ``means_`` and ``cluster_sizes_``."""

    def __init__(self, n_clusters: int = 20, max_iters: int = 100, standardize: bool = True, random_state=0):
        self.n_clusters = n_clusters
        self.max_iters = max_iters
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, rows, y=None):
        x = feature_matrix(rows)
        if self.standardize:
            x = standardize(x)
        rng = np.random.default_rng(self.random_state)
        self.labels_, self.cluster_centers_, self.inertia_ = kmeans(x, self.n_clusters, rng, self.max_iters)
        self.means_ = arm_means(rows, self.labels_, self.n_clusters)
        self.cluster_sizes_ = np.bincount(self.labels_, minlength=self.n_clusters).tolist()
        return self

    def manifest(self) -> dict:
        return {"K": self.n_clusters, "means": list(self.means_), "cluster_sizes": list(self.cluster_sizes_)}


def write_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")


def synthetic_uplift(path, n_rows: int = 2000, n_groups: int = 4, seed: int = 0) -> None:
    """Write an uplift-format CSV with ``n_groups`` separated feature blobs,
    each with its own exposure and visit rates."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 10.0, size=(n_groups, N_FEATURES))
    rates = rng.uniform(0.05, 0.6, size=n_groups)
    group = rng.integers(n_groups, size=n_rows)
    feats = centers[group] + rng.normal(0.0, 1.0, size=(n_rows, N_FEATURES))
    exposure = (rng.random(n_rows) < 0.85).astype(int)
    visit = (rng.random(n_rows) < rates[group]).astype(int)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(N_FEATURES)] + ["exposure", "visit"])
        for f, d, v in zip(feats, exposure, visit):
            w.writerow([f"{val:.6f}" for val in f] + [d, v])
