"""Hierarchical Beta tree: random step densities on one dyadic segmentation.

Each internal node of the segmentation tree carries an independent
Beta(a0, a0) variable giving the conditional probability of its lower
child.  Leaf probabilities are products of those conditionals down the
tree, and the induced density is constant on each depth-L box.  Counting
observations per node makes the model conjugate: node variables update to
Beta(a0 + N_lower, a0 + N_upper), and the predictive density of a new
point has a closed form as a product of count ratios along its path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .segmentation import Segmentation, as_points, leaf_indices, path_indices

__all__ = [
    "BetaTree",
    "CountsTree",
    "sample_phi_prior",
    "sample_phi_posterior",
    "pi_from_phi",
    "accumulate_counts",
    "counts_from_leaf_counts",
    "step_density",
    "conditional_predictive_density",
    "leaf_predictive_masses",
]


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class BetaTree:
    """Lower-child conditional probabilities, one array per level.

    ``levels[l]`` has 2^l entries, the variables of the level l+1 split.
    """

    levels: tuple[np.ndarray, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)


@dataclass(frozen=True, eq=False)
class CountsTree:
    """Observation counts at every node: ``levels[l]`` has 2^l entries.

    ``levels[0]`` is the single root count, the total sample size.
    Every parent count equals the sum of its two children.
    """

    levels: tuple[np.ndarray, ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def m(self) -> int:
        return int(self.levels[0][0])

    def validate(self) -> None:
        for l in range(1, len(self.levels)):
            lower, upper = self.levels[l][0::2], self.levels[l][1::2]
            if not np.array_equal(self.levels[l - 1], lower + upper):
                raise ValueError(f"parent-sum violated between levels {l - 1} and {l}")
        if np.any(self.levels[-1] < 0):
            raise ValueError("negative counts")

    def to_json_obj(self) -> dict:
        return {"m": self.m, "levels": [lvl.tolist() for lvl in self.levels[1:]]}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "CountsTree":
        levels = [np.array([int(obj["m"])], dtype=np.int64)]
        levels.extend(np.asarray(lvl, dtype=np.int64) for lvl in obj["levels"])
        tree = cls(tuple(levels))
        tree.validate()
        return tree


def sample_phi_prior(depth: int, a0: float, rng=None) -> BetaTree:
    """Independent Beta(a0, a0) draws at every node of a depth-L tree."""
    if a0 <= 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    gen = _as_rng(rng)
    return BetaTree(tuple(gen.beta(a0, a0, size=1 << l) for l in range(depth)))


def sample_phi_posterior(counts: CountsTree, a0: float, rng=None) -> BetaTree:
    """Conjugate draws Beta(a0 + N_lower, a0 + N_upper) at every node."""
    if a0 <= 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    gen = _as_rng(rng)
    levels = []
    for l in range(1, counts.depth + 1):
        lower = counts.levels[l][0::2]
        upper = counts.levels[l][1::2]
        levels.append(gen.beta(a0 + lower, a0 + upper))
    return BetaTree(tuple(levels))


def pi_from_phi(tree: BetaTree) -> np.ndarray:
    """Leaf probabilities: product of lower/upper conditionals along each path."""
    pi = np.ones(1)
    for phi in tree.levels:
        nxt = np.empty(2 * pi.size)
        nxt[0::2] = phi * pi
        nxt[1::2] = (1.0 - phi) * pi
        pi = nxt
    return pi


def accumulate_counts(points, seg: Segmentation) -> CountsTree:
    """Count observations in every box of the segmentation tree."""
    pts = as_points(points, seg.ndim)
    depth = seg.depth
    if pts.shape[0] == 0:
        leaves = np.zeros(1 << depth, dtype=np.int64)
    else:
        leaves = np.bincount(leaf_indices(pts, seg), minlength=1 << depth)
    return counts_from_leaf_counts(leaves)


def counts_from_leaf_counts(leaf_counts) -> CountsTree:
    """Build the full tree from deepest-level counts by pairwise summation."""
    leaves = np.asarray(leaf_counts, dtype=np.int64)
    size = leaves.size
    if size < 2 or size & (size - 1):
        raise ValueError("leaf count vector length must be a power of two >= 2")
    levels = [leaves]
    while levels[-1].size > 1:
        cur = levels[-1]
        levels.append(cur[0::2] + cur[1::2])
    return CountsTree(tuple(reversed(levels)))


def step_density(points, seg: Segmentation, pi: np.ndarray):
    """Evaluate the leaf-uniform step density pi[leaf] * 2^L at each point."""
    pts = as_points(points, seg.ndim)
    pi = np.asarray(pi, dtype=np.float64)
    if pi.size != 1 << seg.depth:
        raise ValueError(f"expected {1 << seg.depth} leaf probabilities, got {pi.size}")
    vals = pi[leaf_indices(pts, seg)] * (1 << seg.depth)
    return float(vals[0]) if np.ndim(points) == 1 else vals


def conditional_predictive_density(points, counts: CountsTree, seg: Segmentation, a0: float):
    """Closed-form predictive density of the next observation at each point.

    The conjugate posterior mean of the leaf density: the product over
    levels of 2 * (N_level + a0) / (N_parent + 2*a0) along the point's
    path.  Levels whose parent is empty contribute a factor of exactly
    one, so the product effectively stops one level below the deepest
    occupied node, and deepening the segmentation there leaves the value
    unchanged.  An empty sample gives the uniform density 1.  Computed in
    log space so deep trees with sparse counts do not underflow.
    """
    if a0 <= 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    if counts.depth != seg.depth:
        raise ValueError("counts tree depth does not match the segmentation")
    pts = as_points(points, seg.ndim)
    if counts.m == 0:
        vals = np.ones(pts.shape[0])
        return float(vals[0]) if np.ndim(points) == 1 else vals
    paths = path_indices(pts, seg)
    n, depth = paths.shape
    node_counts = np.empty((n, depth + 1), dtype=np.int64)
    node_counts[:, 0] = counts.m
    for l in range(1, depth + 1):
        node_counts[:, l] = counts.levels[l][paths[:, l - 1]]
    active = node_counts[:, :-1] > 0  # below an empty parent every factor is 1
    terms = (
        np.log(node_counts[:, 1:] + a0)
        - np.log(node_counts[:, :-1] + 2.0 * a0)
        + np.log(2.0)
    )
    vals = np.exp(np.sum(np.where(active, terms, 0.0), axis=1))
    return float(vals[0]) if np.ndim(points) == 1 else vals


def leaf_predictive_masses(counts: CountsTree, a0: float) -> np.ndarray:
    """Predictive probability of the next observation landing in each leaf.

    Children split their parent's mass in proportion to
    (N_child + a0) / (N_parent + 2*a0); masses sum to one exactly.
    """
    if a0 <= 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    mass = np.ones(1)
    for l in range(1, counts.depth + 1):
        parent = mass / (counts.levels[l - 1] + 2.0 * a0)
        mass = np.repeat(parent, 2) * (counts.levels[l] + a0)
    return mass
