"""Exact posterior weights over a family of segmentations.

The weight of a segmentation given the data is proportional to the
reciprocal multinomial coefficient of its deepest-level counts times a
chain of beta-binomial probabilities, one per internal node: the lower
child count given the parent count, with symmetric parameters (a0, a0).
Everything is accumulated in log space with cached log-gamma lookups and
normalized by log-sum-exp, so large families and deep trees stay stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .hbeta import CountsTree, accumulate_counts, conditional_predictive_density
from .segmentation import Segmentation, SegmentationFamily, as_points, path_indices

__all__ = [
    "LogGammaTables",
    "log_unnormalized_weight",
    "fit",
    "PosteriorModel",
    "mixture_predictive_density",
    "IncrementalModel",
]


class LogGammaTables:
    """Cached log-gamma values for integer counts shifted by a0 and 2*a0.

    F[k]  = lgamma(k + 1)      (log factorials)
    G1[k] = lgamma(k + a0)
    G2[k] = lgamma(k + 2*a0)
    """

    def __init__(self, a0: float, nmax: int):
        if a0 <= 0:
            raise ValueError(f"a0 must be positive, got {a0}")
        self.a0 = float(a0)
        self._const = 2.0 * gammaln(self.a0) - gammaln(2.0 * self.a0)
        self._nmax = -1
        self.ensure(nmax)

    def ensure(self, nmax: int) -> None:
        if nmax <= self._nmax:
            return
        nmax = max(nmax, 2 * max(self._nmax, 16))
        k = np.arange(nmax + 1, dtype=np.float64)
        self.F = gammaln(k + 1.0)
        self.G1 = gammaln(k + self.a0)
        self.G2 = gammaln(k + 2.0 * self.a0)
        self._nmax = nmax

    def log_betabinom(self, k, n):
        """log BetaBinomial(k; n, a0, a0); exactly 0.0 when n == 0."""
        return (
            self.F[n]
            - self.F[k]
            - self.F[n - k]
            + self.G1[k]
            + self.G1[n - k]
            - self.G2[n]
            - self._const
        )


def log_unnormalized_weight(counts: CountsTree, a0: float, tables: LogGammaTables | None = None) -> float:
    """Log numerator of the posterior segmentation probability.

    Sum of the log reciprocal multinomial coefficient of the leaf counts
    and the log beta-binomial chain over internal nodes.  Nodes with an
    empty parent contribute exactly zero.
    """
    if tables is None:
        tables = LogGammaTables(a0, counts.m)
    elif tables.a0 != a0:
        raise ValueError("tables were built for a different a0")
    tables.ensure(counts.m)
    total = float(np.sum(tables.F[counts.levels[-1]]) - tables.F[counts.m])
    for l in range(1, counts.depth + 1):
        parents = counts.levels[l - 1]
        occupied = parents > 0
        if not occupied.any():
            continue
        lower = counts.levels[l][0::2]
        total += float(np.sum(tables.log_betabinom(lower[occupied], parents[occupied])))
    return total


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """Fitted family: per-member counts and normalized log weights."""

    family: SegmentationFamily
    counts: tuple[CountsTree, ...]
    a0: float
    m: int
    log_weights: np.ndarray
    log_unnormalized: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def to_json_obj(self) -> dict:
        return {
            "family": self.family.to_json_obj(),
            "a0": self.a0,
            "m": self.m,
            "log_weights": self.log_weights.tolist(),
            "log_unnormalized": self.log_unnormalized.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    def weight_rows(self) -> list[tuple[str, float, float]]:
        """(segmentation, normalized log weight, unnormalized log weight) rows."""
        return [
            (json.dumps(list(seg.dims)), float(lw), float(lu))
            for seg, lw, lu in zip(self.family, self.log_weights, self.log_unnormalized)
        ]


def fit(points, family: SegmentationFamily, a0: float) -> PosteriorModel:
    """Count the data under every family member and normalize the weights."""
    pts = as_points(points, family.ndim)
    m = pts.shape[0]
    tables = LogGammaTables(a0, m)
    counts = tuple(accumulate_counts(pts, seg) for seg in family)
    log_unnorm = np.array([log_unnormalized_weight(c, a0, tables) for c in counts])
    log_weights = log_unnorm - logsumexp(log_unnorm)
    return PosteriorModel(family, counts, float(a0), m, log_weights, log_unnorm)


def mixture_predictive_density(points, model: PosteriorModel):
    """Posterior predictive density: weight-averaged per-member predictives."""
    pts = as_points(points, model.family.ndim)
    vals = np.zeros(pts.shape[0])
    for seg, counts, w in zip(model.family, model.counts, model.weights):
        vals += w * conditional_predictive_density(pts, counts, seg, model.a0)
    return float(vals[0]) if np.ndim(points) == 1 else vals


def _delta_add(levels: Sequence[np.ndarray], path: np.ndarray, tables: LogGammaTables) -> float:
    """Change in log unnormalized weight from adding one point along `path`."""
    depth = len(path)
    m = int(levels[0][0])
    tables.ensure(m + 2)
    delta = 0.0
    for l in range(1, depth + 1):
        parent = int(path[l - 2]) if l >= 2 else 0
        left = 2 * parent
        n = int(levels[l - 1][parent])
        k = int(levels[l][left])
        k_new = k + (1 if int(path[l - 1]) == left else 0)
        delta += float(tables.log_betabinom(k_new, n + 1) - tables.log_betabinom(k, n))
    k_leaf = int(levels[depth][int(path[depth - 1])])
    delta += float(tables.F[k_leaf + 1] - tables.F[k_leaf] - tables.F[m + 1] + tables.F[m])
    return delta


def _delta_remove(levels: Sequence[np.ndarray], path: np.ndarray, tables: LogGammaTables) -> float:
    """Change in log unnormalized weight from removing one point along `path`."""
    depth = len(path)
    m = int(levels[0][0])
    tables.ensure(m + 1)
    delta = 0.0
    for l in range(1, depth + 1):
        parent = int(path[l - 2]) if l >= 2 else 0
        left = 2 * parent
        n = int(levels[l - 1][parent])
        k = int(levels[l][left])
        k_new = k - (1 if int(path[l - 1]) == left else 0)
        delta += float(tables.log_betabinom(k_new, n - 1) - tables.log_betabinom(k, n))
    k_leaf = int(levels[depth][int(path[depth - 1])])
    delta += float(tables.F[k_leaf - 1] - tables.F[k_leaf] - tables.F[m - 1] + tables.F[m])
    return delta


class IncrementalModel:
    """Mutable clone of a fitted model supporting one-point updates.

    Adding or removing a point touches only the nodes along its path in
    each member, so an update costs O(depth) per segmentation including
    the weight adjustment.  Intended for leave-one-out loops; the parent
    model is never modified.
    """

    def __init__(self, model: PosteriorModel):
        self.family = model.family
        self.a0 = model.a0
        self.m = model.m
        self.tables = LogGammaTables(model.a0, model.m + 16)
        self._levels = [[lvl.copy() for lvl in c.levels] for c in model.counts]
        self.log_unnormalized = model.log_unnormalized.copy()

    @property
    def log_weights(self) -> np.ndarray:
        return self.log_unnormalized - logsumexp(self.log_unnormalized)

    def add_point(self, u) -> None:
        pts = as_points(u, self.family.ndim)
        if pts.shape[0] != 1:
            raise ValueError("add_point takes a single point")
        for j, seg in enumerate(self.family):
            path = path_indices(pts, seg)[0]
            levels = self._levels[j]
            self.log_unnormalized[j] += _delta_add(levels, path, self.tables)
            levels[0][0] += 1
            for l in range(1, seg.depth + 1):
                levels[l][path[l - 1]] += 1
        self.m += 1

    def remove_point(self, u) -> None:
        pts = as_points(u, self.family.ndim)
        if pts.shape[0] != 1:
            raise ValueError("remove_point takes a single point")
        if self.m == 0:
            raise ValueError("no points to remove")
        for j, seg in enumerate(self.family):
            path = path_indices(pts, seg)[0]
            levels = self._levels[j]
            if levels[seg.depth][path[-1]] <= 0:
                raise ValueError("no observation in that leaf to remove")
            self.log_unnormalized[j] += _delta_remove(levels, path, self.tables)
            levels[0][0] -= 1
            for l in range(1, seg.depth + 1):
                levels[l][path[l - 1]] -= 1
        self.m -= 1

    def snapshot(self) -> PosteriorModel:
        counts = tuple(
            CountsTree(tuple(lvl.copy() for lvl in levels)) for levels in self._levels
        )
        log_unnorm = self.log_unnormalized.copy()
        return PosteriorModel(
            self.family,
            counts,
            self.a0,
            self.m,
            log_unnorm - logsumexp(log_unnorm),
            log_unnorm,
        )
