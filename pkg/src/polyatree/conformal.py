"""Full conformal prediction sets from predictive-CDF conformity scores.

The conformity score of a point against a training set is the conditional
predictive CDF Pr(U_y <= u_y | U_x = u_x, training data) of the fitted
family (dimension 1 is x, dimension 2 is y).  For a candidate point, the
rank-based p-value compares its score on the training set against the
scores of each training point on the swapped set (that point replaced by
the candidate); the prediction set keeps candidates whose p-value exceeds
alpha.

By default scores use the exact predictive CDF, which is a closed-form
product of count ratios, so a swapped-set score only needs count
adjustments along two paths.  The scorer below batches all leave-one-out
scores for one candidate: weight changes are table lookups along each
removed point's path, and column masses are recomputed only on the
subtree of boxes meeting that point's x column.  Setting `draws_per_seg`
instead scores with a freshly seeded finite mixture of posterior draws,
matching the sampling-based evaluation of the predictive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import predictive as pred
from .hbeta import accumulate_counts
from .posterior import IncrementalModel, LogGammaTables, PosteriorModel, fit
from .segmentation import SegmentationFamily, as_points, path_indices

__all__ = [
    "ConformalConfig",
    "ConformalBand",
    "conformity_score",
    "loo_scores",
    "conformal_pvalue",
    "conformal_band",
    "default_y_grid",
]


@dataclass(frozen=True)
class ConformalConfig:
    """How conformity scores are computed.

    draws_per_seg None scores with the exact predictive CDF; a positive
    value scores with a mixture of that many posterior draws per
    segmentation, re-seeded identically for every score so that all m+1
    scores of one candidate share one randomness policy.
    """

    family: SegmentationFamily
    a0: float = 1.0
    draws_per_seg: int | None = None
    seed: int = 0
    endpoint: str = "grid"  # or "interpolated"

    def __post_init__(self):
        if self.family.ndim != 2:
            raise ValueError("conformal scoring is defined for 2-D families")
        if self.a0 <= 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        if self.draws_per_seg is not None and self.draws_per_seg < 1:
            raise ValueError("draws_per_seg must be >= 1 when given")
        if self.endpoint not in ("grid", "interpolated"):
            raise ValueError(f"unknown endpoint rule {self.endpoint!r}")


@dataclass(eq=False)
class ConformalBand:
    """Per-x lower/upper endpoints and the p-value tables behind them."""

    x_values: np.ndarray
    y_grid: np.ndarray
    alpha: float
    p_below: np.ndarray  # (n_x, n_y) p-values of the <=-direction score
    p_above: np.ndarray  # same for the >=-direction score
    lower: np.ndarray  # NaN where the band is empty at that x
    upper: np.ndarray
    endpoint: str

    def rows(self) -> list[tuple[float, float, float, float]]:
        return [
            (float(x), float(lo), float(hi), self.alpha)
            for x, lo, hi in zip(self.x_values, self.lower, self.upper)
        ]


class _MemberState:
    """Per-segmentation precomputation for batched leave-one-out scoring."""

    def __init__(self, seg, train_pts, a0, tables):
        self.seg = seg
        self.depth = seg.depth
        self.levels = [lvl for lvl in _count_levels(train_pts, seg)]
        self.log_w0 = log_unnormalized_weight_from_levels(self.levels, a0, tables)
        m = train_pts.shape[0]
        depth = seg.depth
        self.sy = sum(1 for d in seg.dims if d == 2)
        self.ny = 1 << self.sy
        self.sx = depth - self.sy
        if m:
            self.paths = path_indices(train_pts, seg)  # (m, L)
            parents = np.concatenate(
                [np.zeros((m, 1), dtype=np.int64), self.paths[:, :-1]], axis=1
            )
            self.left_node = 2 * parents  # (m, L)
            self.went_left = self.paths == self.left_node
            self.node_counts = np.empty((m, depth + 1), dtype=np.int64)
            self.node_counts[:, 0] = m
            for l in range(1, depth + 1):
                self.node_counts[:, l] = self.levels[l][self.paths[:, l - 1]]
            self.left_counts = np.empty((m, depth), dtype=np.int64)
            for l in range(1, depth + 1):
                self.left_counts[:, l - 1] = self.levels[l][self.left_node[:, l - 1]]
            # x column of each point at this member's own x resolution
            bits = (self.paths - 2 * parents).astype(np.int64)
            xcell = np.zeros(m, dtype=np.int64)
            for l, dim in enumerate(seg.dims):
                if dim == 1:
                    xcell = 2 * xcell + bits[:, l]
            self.groups = {
                int(c): np.flatnonzero(xcell == c) for c in np.unique(xcell)
            }
        else:
            self.paths = np.zeros((0, depth), dtype=np.int64)
            self.groups = {}
        self._subtrees: dict[int, list[np.ndarray]] = {}

    def subtree(self, xcell: int) -> list[np.ndarray]:
        """Node indices per level whose boxes meet the given x column."""
        cached = self._subtrees.get(xcell)
        if cached is not None:
            return cached
        nodes = [np.zeros(1, dtype=np.int64)]
        used_x = 0
        for dim in self.seg.dims:
            prev = nodes[-1]
            if dim == 1:
                bit = (xcell >> (self.sx - 1 - used_x)) & 1
                used_x += 1
                nodes.append(2 * prev + bit)
            else:
                nxt = np.empty(2 * prev.size, dtype=np.int64)
                nxt[0::2] = 2 * prev
                nxt[1::2] = 2 * prev + 1
                nodes.append(nxt)
        self._subtrees[xcell] = nodes
        return nodes


def _count_levels(points, seg):
    return list(accumulate_counts(points, seg).levels)


def log_unnormalized_weight_from_levels(levels, a0, tables: LogGammaTables) -> float:
    m = int(levels[0][0])
    tables.ensure(m)
    total = float(np.sum(tables.F[levels[-1]]) - tables.F[m])
    for l in range(1, len(levels)):
        parents = levels[l - 1]
        occupied = parents > 0
        if occupied.any():
            total += float(
                np.sum(tables.log_betabinom(levels[l][0::2][occupied], parents[occupied]))
            )
    return total


class _ExactScorer:
    """Batched leave-one-out conformity scores under the exact predictive CDF."""

    def __init__(self, train, config: ConformalConfig):
        self.config = config
        self.pts = as_points(train, 2) if np.size(train) else np.zeros((0, 2))
        self.m = self.pts.shape[0]
        self.a0 = config.a0
        self.tables = LogGammaTables(config.a0, self.m + 2)
        self.members = [
            _MemberState(seg, self.pts, config.a0, self.tables) for seg in config.family
        ]
        self.log_w0 = np.array([ms.log_w0 for ms in self.members])

    # -- weight bookkeeping ------------------------------------------------

    def _delta_add_candidate(self, ms: _MemberState, cpath: np.ndarray) -> float:
        t = self.tables
        delta = 0.0
        for l in range(1, ms.depth + 1):
            parent = int(cpath[l - 2]) if l >= 2 else 0
            left = 2 * parent
            n = int(ms.levels[l - 1][parent])
            k = int(ms.levels[l][left])
            k_new = k + (1 if int(cpath[l - 1]) == left else 0)
            delta += float(t.log_betabinom(k_new, n + 1) - t.log_betabinom(k, n))
        k_leaf = int(ms.levels[ms.depth][int(cpath[-1])])
        delta += float(t.F[k_leaf + 1] - t.F[k_leaf] - t.F[self.m + 1] + t.F[self.m])
        return delta

    def _delta_remove_each(self, ms: _MemberState, cpath: np.ndarray | None) -> np.ndarray:
        """Weight change from removing each training point, candidate included."""
        t = self.tables
        m, depth = self.m, ms.depth
        if cpath is None:
            overlap = np.zeros((m, depth + 1), dtype=np.int64)
            overlap_left = np.zeros((m, depth), dtype=np.int64)
            mtot = m
        else:
            overlap = np.concatenate(
                [np.ones((m, 1), dtype=np.int64), (ms.paths == cpath).astype(np.int64)],
                axis=1,
            )
            overlap_left = (ms.left_node == cpath).astype(np.int64)
            mtot = m + 1
        parent_n = ms.node_counts[:, :-1] + overlap[:, :-1]  # (m, L)
        left_k = ms.left_counts + overlap_left
        left_k_new = left_k - ms.went_left
        delta = np.sum(
            t.log_betabinom(left_k_new, parent_n - 1) - t.log_betabinom(left_k, parent_n),
            axis=1,
        )
        k_leaf = ms.node_counts[:, -1] + overlap[:, -1]
        delta += t.F[k_leaf - 1] - t.F[k_leaf] - t.F[mtot - 1] + t.F[mtot]
        return delta

    # -- column masses -----------------------------------------------------

    def _column_masses(self, ms: _MemberState, xcell: int, cpath, idx):
        """Y-cell masses (ny, n_eval) for the swapped sets of the points in idx.

        cpath adds one observation along the candidate's path; each column
        of the result removes the corresponding training point in idx.
        idx None evaluates the unmodified training-set model (one column).
        """
        a0 = self.a0
        nodes = ms.subtree(xcell)
        n_eval = 1 if idx is None else idx.size
        root = float(self.m + (0 if cpath is None else 1) - (0 if idx is None else 1))
        prev = np.full((1, n_eval), root)
        masses = np.ones((1, n_eval))
        for l in range(1, ms.depth + 1):
            s = nodes[l]
            cur = np.repeat(
                ms.levels[l][s].astype(np.float64)[:, None], n_eval, axis=1
            )
            if cpath is not None:
                pos = int(np.searchsorted(s, cpath[l - 1]))
                if pos < s.size and s[pos] == cpath[l - 1]:
                    cur[pos, :] += 1.0
            if idx is not None:
                ypos = np.searchsorted(s, ms.paths[idx, l - 1])
                cur[ypos, np.arange(n_eval)] -= 1.0
            if s.size == masses.shape[0]:  # x split: one child per subtree node
                masses = masses * (cur + a0) / (prev + 2.0 * a0)
            else:  # y split: both children stay in the column
                masses = np.repeat(masses, 2, axis=0) * (cur + a0) / (
                    np.repeat(prev, 2, axis=0) + 2.0 * a0
                )
            prev = cur
        return masses

    @staticmethod
    def _cdf_at(masses: np.ndarray, y_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(mass below each y, total column mass) per evaluation column."""
        ny, n_eval = masses.shape
        cell = np.minimum((y_values * ny).astype(np.int64), ny - 1)
        frac = y_values * ny - cell
        cums = np.vstack([np.zeros(n_eval), np.cumsum(masses, axis=0)])
        cols = np.arange(n_eval)
        below = cums[cell, cols] + frac * masses[cell, cols]
        return below, cums[-1]

    # -- public passes -------------------------------------------------------

    def loo_scores(self, candidate=None) -> np.ndarray:
        """Score of each training point on the other m-1 points (plus the
        candidate when given): the swapped-set scores of the p-value."""
        if self.m == 0:
            return np.zeros(0)
        cpaths = (
            None
            if candidate is None
            else [path_indices(np.asarray(candidate)[None, :], ms.seg)[0] for ms in self.members]
        )
        log_w = np.empty((len(self.members), self.m))
        for j, ms in enumerate(self.members):
            cp = None if cpaths is None else cpaths[j]
            base = ms.log_w0 if cp is None else ms.log_w0 + self._delta_add_candidate(ms, cp)
            log_w[j] = base + self._delta_remove_each(ms, cp)
        weights = np.exp(log_w - log_w.max(axis=0, keepdims=True))
        num = np.zeros(self.m)
        den = np.zeros(self.m)
        for j, ms in enumerate(self.members):
            cp = None if cpaths is None else cpaths[j]
            for xcell, idx in ms.groups.items():
                masses = self._column_masses(ms, xcell, cp, idx)
                below, total = self._cdf_at(masses, self.pts[idx, 1])
                num[idx] += weights[j, idx] * below
                den[idx] += weights[j, idx] * total
        return num / den

    def score_point(self, point) -> float:
        """Conformity score of one point against the unmodified training set."""
        pt = as_points(point, 2)[0]
        weights = np.exp(self.log_w0 - self.log_w0.max())
        num = den = 0.0
        for j, ms in enumerate(self.members):
            cpath = path_indices(pt[None, :], ms.seg)[0]
            masses = self._column_masses(ms, _member_xcell(ms.seg, cpath), None, None)
            below, total = self._cdf_at(masses, np.array([pt[1]]))
            num += weights[j] * float(below[0])
            den += weights[j] * float(total[0])
        return num / den


def _member_xcell(seg, path) -> int:
    """x column index of a located path at the member's own x resolution."""
    xcell = 0
    prev = 0
    for l, dim in enumerate(seg.dims):
        bit = int(path[l]) - 2 * prev
        prev = int(path[l])
        if dim == 1:
            xcell = 2 * xcell + bit
    return xcell


class _MixtureScorer:
    """Scores from a finite posterior-draw mixture, re-seeded per score."""

    def __init__(self, train, config: ConformalConfig):
        self.config = config
        self.pts = as_points(train, 2) if np.size(train) else np.zeros((0, 2))
        self.m = self.pts.shape[0]
        self._train_model = fit(self.pts, config.family, config.a0)

    def _score_model(self, model: PosteriorModel, point) -> float:
        mix = pred.build_mixture(
            model, self.config.draws_per_seg, np.random.default_rng(self.config.seed)
        )
        (nx, ny), M = pred.grid_mass_matrix(mix)
        x, y = float(point[0]), float(point[1])
        col = M[min(int(x * nx), nx - 1)]
        cell = min(int(y * ny), ny - 1)
        frac = y * ny - cell
        below = float(np.sum(col[:cell]) + frac * col[cell])
        return below / float(col.sum())

    def score_point(self, point) -> float:
        return self._score_model(self._train_model, np.asarray(point, dtype=np.float64))

    def loo_scores(self, candidate=None) -> np.ndarray:
        scores = np.empty(self.m)
        inc = IncrementalModel(self._train_model)
        if candidate is not None:
            inc.add_point(np.asarray(candidate, dtype=np.float64))
        for i in range(self.m):
            inc.remove_point(self.pts[i])
            scores[i] = self._score_model(inc.snapshot(), self.pts[i])
            inc.add_point(self.pts[i])
        return scores


def _make_scorer(train, config: ConformalConfig):
    if config.draws_per_seg is None:
        return _ExactScorer(train, config)
    return _MixtureScorer(train, config)


def conformity_score(train, point, config: ConformalConfig, direction: str = "below") -> float:
    """Conditional predictive CDF score of `point` against `train`.

    direction "below" gives Pr(U_y <= u_y | U_x = u_x, train); "above"
    gives the complementary upper-tail score.
    """
    if direction not in ("below", "above"):
        raise ValueError(f"unknown direction {direction!r}")
    pt = as_points(point, 2)[0]
    if np.size(train) == 0:
        score = float(pt[1])  # empty sample: the predictive is uniform
    else:
        score = _make_scorer(train, config).score_point(pt)
    return score if direction == "below" else 1.0 - score


def loo_scores(train, config: ConformalConfig, direction: str = "below") -> np.ndarray:
    """Score of each training point against the remaining m-1 points."""
    if direction not in ("below", "above"):
        raise ValueError(f"unknown direction {direction!r}")
    scores = _make_scorer(train, config).loo_scores()
    return scores if direction == "below" else 1.0 - scores


def conformal_pvalue(train, candidate, config: ConformalConfig) -> float:
    """Rank of the candidate's score among the swapped-set scores.

    The count uses <= so ties favour inclusion, and the candidate's own
    score is excluded from the numerator range, giving values k/(m+1)
    with k in 0..m.
    """
    pts = as_points(train, 2) if np.size(train) else np.zeros((0, 2))
    cand = as_points(candidate, 2)[0]
    if pts.shape[0] == 0:
        return 0.0
    scorer = _make_scorer(pts, config)
    a_cand = scorer.score_point(cand)
    a_train = scorer.loo_scores(cand)
    return float(np.sum(a_train <= a_cand)) / (pts.shape[0] + 1)


def default_y_grid(config: ConformalConfig) -> np.ndarray:
    """Finest y-bin boundaries plus bin midpoints of the family grid."""
    splits = max(sum(1 for d in seg.dims if d == 2) for seg in config.family)
    ny = 1 << splits
    return np.unique(np.concatenate([np.arange(ny + 1) / ny, (np.arange(ny) + 0.5) / ny]))


def conformal_band(
    train,
    x_values,
    alpha: float,
    config: ConformalConfig,
    y_grid_size: int | None = None,
) -> ConformalBand:
    """Two-sided conformal band over a grid of candidate y values.

    The lower endpoint is the smallest grid y whose below-score p-value
    exceeds alpha, the upper endpoint the largest grid y whose above-score
    p-value does; each side therefore runs at level 1 - alpha.  Empty
    sides are reported as NaN.  With no training points every candidate is
    vacuously conforming and the band is the full y range.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    x_values = np.atleast_1d(np.asarray(x_values, dtype=np.float64))
    if np.any((x_values < 0) | (x_values > 1)):
        raise ValueError("x_values must lie in [0, 1]")
    y_grid = (
        default_y_grid(config)
        if y_grid_size is None
        else np.linspace(0.0, 1.0, int(y_grid_size))
    )
    pts = as_points(train, 2) if np.size(train) else np.zeros((0, 2))
    m = pts.shape[0]
    n_x, n_y = x_values.size, y_grid.size
    if m == 0:
        full = np.ones((n_x, n_y))
        return ConformalBand(
            x_values,
            y_grid,
            alpha,
            full,
            full.copy(),
            np.zeros(n_x),
            np.ones(n_x),
            config.endpoint,
        )
    scorer = _make_scorer(pts, config)
    p_below = np.empty((n_x, n_y))
    p_above = np.empty((n_x, n_y))
    for ix, x in enumerate(x_values):
        for iy, y in enumerate(y_grid):
            cand = np.array([x, y])
            a_cand = scorer.score_point(cand)
            a_train = scorer.loo_scores(cand)
            p_below[ix, iy] = np.sum(a_train <= a_cand) / (m + 1)
            p_above[ix, iy] = np.sum(a_train >= a_cand) / (m + 1)
    lower = np.full(n_x, np.nan)
    upper = np.full(n_x, np.nan)
    for ix in range(n_x):
        inside_lo = np.flatnonzero(p_below[ix] > alpha)
        if inside_lo.size:
            k = inside_lo[0]
            if config.endpoint == "interpolated" and k > 0:
                p0, p1 = p_below[ix, k - 1], p_below[ix, k]
                t = (alpha - p0) / (p1 - p0)
                lower[ix] = y_grid[k - 1] + t * (y_grid[k] - y_grid[k - 1])
            else:
                lower[ix] = y_grid[k]
        inside_hi = np.flatnonzero(p_above[ix] > alpha)
        if inside_hi.size:
            k = inside_hi[-1]
            if config.endpoint == "interpolated" and k < n_y - 1:
                p0, p1 = p_above[ix, k], p_above[ix, k + 1]
                t = (p0 - alpha) / (p0 - p1)
                upper[ix] = y_grid[k] + t * (y_grid[k + 1] - y_grid[k])
            else:
                upper[ix] = y_grid[k]
    return ConformalBand(x_values, y_grid, alpha, p_below, p_above, lower, upper, config.endpoint)
