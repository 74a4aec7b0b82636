"""Motion costs between point trajectories.

Pairwise costs compare translational motion. Third-order costs fit a 2D
Euclidean motion (rotation, isotropic scale, translation) to two
trajectories and measure how well it predicts the third.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

DELTA = 1e-6  # px; separations at or below this are treated as degenerate


class NoOverlap(ValueError):
    pass


class DegeneratePair(ValueError):
    pass


class DegenerateTriple(ValueError):
    pass


@dataclass
class Trajectory:
    id: int
    start_frame: int
    positions: np.ndarray  # (length, 2) in pixels
    features: np.ndarray | None = None  # (length, dim)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if len(self.positions) < 2:
            raise ValueError(f"trajectory {self.id} has fewer than two frames")
        if not np.isfinite(self.positions).all():
            raise ValueError(f"trajectory {self.id} has non-finite positions")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=float).reshape(len(self.positions), -1)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def end_frame(self) -> int:
        """One past the last frame."""
        return self.start_frame + len(self.positions)

    def at(self, frame: int) -> np.ndarray:
        return self.positions[frame - self.start_frame]

    def window(self, first: int, stop: int) -> np.ndarray:
        return self.positions[first - self.start_frame:stop - self.start_frame]


def common_frames(*trajs: Trajectory) -> tuple[int, int]:
    """``[first, stop)`` frame range all trajectories share."""
    first = max(t.start_frame for t in trajs)
    stop = min(t.end_frame for t in trajs)
    return first, max(first, stop)


@dataclass
class FlowStats:
    """Flow variation per frame transition t -> t+1; missing entries count as 1."""

    sigma: Sequence[float] | None = None

    def __post_init__(self):
        if self.sigma is not None and any(s <= 0 for s in self.sigma):
            raise ValueError("flow variation must be positive")

    def at(self, t: int) -> float:
        if self.sigma is None or t >= len(self.sigma):
            return 1.0
        return float(self.sigma[t])

    def over(self, first: int, stop: int) -> np.ndarray:
        return np.array([self.at(t) for t in range(first, stop)])


@dataclass
class CostParams:
    # pairwise: c = -max(bar0 + t1 dm + t2 ds + t3 dc, t0 + t1 dm)
    theta_bar0: float = 1.0
    theta0: float = 1.0
    theta1: float = -0.08
    theta2: float = 0.0
    theta3: float = 0.0
    # third order: c(d) = ho0 + ho1 d
    ho_theta0: float = -1.0
    ho_theta1: float = 0.08
    sigma: FlowStats = field(default_factory=FlowStats)

    def __post_init__(self):
        if self.ho_theta1 <= 0:
            raise ValueError("ho_theta1 must be positive")

    def third_order(self, d: float) -> float:
        return self.ho_theta0 + self.ho_theta1 * d


def pairwise_motion_distance(pi: Trajectory, pj: Trajectory, stats: FlowStats | None = None) -> float:
    """Largest flow-normalized velocity difference over the common lifetime."""
    first, stop = common_frames(pi, pj)
    if stop - first < 2:
        raise NoOverlap(f"trajectories {pi.id} and {pj.id} share fewer than two frames")
    vi = np.diff(pi.window(first, stop), axis=0)
    vj = np.diff(pj.window(first, stop), axis=0)
    sigma = (stats or FlowStats()).over(first, stop - 1)
    return float((np.linalg.norm(vi - vj, axis=1) / sigma).max())


def spatial_distance(pi: Trajectory, pj: Trajectory) -> tuple[float, float]:
    """Mean and max point distance over the common lifetime."""
    first, stop = common_frames(pi, pj)
    if stop <= first:
        raise NoOverlap(f"trajectories {pi.id} and {pj.id} never coexist")
    d = np.linalg.norm(pi.window(first, stop) - pj.window(first, stop), axis=1)
    return float(d.mean()), float(d.max())


def feature_distance(pi: Trajectory, pj: Trajectory) -> float:
    if pi.features is None or pj.features is None:
        return 0.0
    first, stop = common_frames(pi, pj)
    a = pi.features[first - pi.start_frame:stop - pi.start_frame]
    b = pj.features[first - pj.start_frame:stop - pj.start_frame]
    return float(np.linalg.norm(a - b, axis=1).mean())


def pairwise_cost_from_distances(dm: float, ds: float, dc: float, params: CostParams) -> float:
    p = params
    return -max(
        p.theta_bar0 + p.theta1 * dm + p.theta2 * ds + p.theta3 * dc,
        p.theta0 + p.theta1 * dm,
    )


def pairwise_cost(pi: Trajectory, pj: Trajectory, params: CostParams | None = None) -> float:
    """Translational cost; negative is attractive, positive repulsive."""
    params = params or CostParams()
    dm = pairwise_motion_distance(pi, pj, params.sigma)
    ds, _ = spatial_distance(pi, pj)
    return pairwise_cost_from_distances(dm, ds, feature_distance(pi, pj), params)


@dataclass(frozen=True)
class EuclideanTransform:
    alpha: float  # radians, counter-clockwise
    scale: float
    shift: tuple[float, float]

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.alpha), math.sin(self.alpha)
        return self.scale * np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix().T + np.asarray(self.shift)


def estimate_euclidean_transform(pi_t, pj_t, pi_t2, pj_t2) -> EuclideanTransform:
    """Rotation, scale and translation taking (pi_t, pj_t) onto (pi_t2, pj_t2).

    The rotation magnitude is the angle between the two difference vectors
    and its sign follows their cross product; ``atan2`` gives both at once
    and stays accurate near 0 and pi where ``arccos`` loses digits.
    """
    ax, ay = pi_t[0] - pj_t[0], pi_t[1] - pj_t[1]
    bx, by = pi_t2[0] - pj_t2[0], pi_t2[1] - pj_t2[1]
    n0 = math.hypot(ax, ay)
    n1 = math.hypot(bx, by)
    if n0 <= DELTA or n1 <= DELTA:
        raise DegeneratePair(f"points too close to define a motion ({n0:.3g}, {n1:.3g} px)")
    alpha = math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    scale = n1 / n0
    c, s = math.cos(alpha), math.sin(alpha)
    sx, sy = pi_t[0] + pj_t[0], pi_t[1] + pj_t[1]
    vx = 0.5 * (pi_t2[0] + pj_t2[0] - scale * (c * sx - s * sy))
    vy = 0.5 * (pi_t2[1] + pj_t2[1] - scale * (s * sx + c * sy))
    return EuclideanTransform(float(alpha), float(scale), (float(vx), float(vy)))


def triplet_distance(model: EuclideanTransform, pk_t, pk_t2) -> float:
    """Distance between where ``model`` sends ``pk_t`` and the observed ``pk_t2``."""
    c, s = math.cos(model.alpha), math.sin(model.alpha)
    x = model.scale * (c * pk_t[0] - s * pk_t[1]) + model.shift[0]
    y = model.scale * (s * pk_t[0] + c * pk_t[1]) + model.shift[1]
    return math.hypot(x - pk_t2[0], y - pk_t2[1])


def gamma(pi, pj, pk, sigma: float = 1.0) -> float:
    """Baseline normalization for the residual of the model fitted to (pi, pj)."""
    dij = math.hypot(pi[0] - pj[0], pi[1] - pj[1])
    dik = math.hypot(pi[0] - pk[0], pi[1] - pk[1])
    djk = math.hypot(pj[0] - pk[0], pj[1] - pk[1])
    if min(dij, dik, djk) <= DELTA:
        raise DegenerateTriple("two of the three points coincide")
    return (0.5 * (dij / dik + dij / djk)) ** 0.25 / sigma


def triplet_residuals(a0, b0, c0, a1, b1, c1, sigma: float = 1.0) -> tuple[float, float, float]:
    """Normalized residuals of the three leave-one-out models for one transition."""
    out = []
    for (p, q, r), (p1, q1, r1) in (
        ((a0, b0, c0), (a1, b1, c1)),
        ((a0, c0, b0), (a1, c1, b1)),
        ((b0, c0, a0), (b1, c1, a1)),
    ):
        model = estimate_euclidean_transform(p, q, p1, q1)
        out.append(gamma(p, q, r, sigma) * triplet_distance(model, r, r1))
    return out[0], out[1], out[2]


def combine_third_order(d_min: float, d_max: float, params: CostParams | None = None) -> float:
    """Final cost from the optimistic and pessimistic distance; 0 if they disagree in sign."""
    params = params or CostParams()
    c_min, c_max = params.third_order(d_min), params.third_order(d_max)
    if c_min > 0 and c_max > 0:
        return c_min
    if c_min < 0 and c_max < 0:
        return c_max
    return 0.0


def batch_triplet_residuals(p0: np.ndarray, p1: np.ndarray, sigma=1.0) -> np.ndarray:
    """Normalized leave-one-out residuals for many transitions at once.

    ``p0`` and ``p1`` have shape (m, 3, 2): the three points before and after
    a transition. Returns (m, 3) residuals for the models fitted to point
    pairs (0, 1), (0, 2) and (1, 2); degenerate or missing entries are NaN.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty((len(p0), 3))
    with np.errstate(invalid="ignore", divide="ignore"):
        for col, (i, j, k) in enumerate(((0, 1, 2), (0, 2, 1), (1, 2, 0))):
            a = p0[:, i] - p0[:, j]
            b = p1[:, i] - p1[:, j]
            n0 = np.hypot(a[:, 0], a[:, 1])
            n1 = np.hypot(b[:, 0], b[:, 1])
            alpha = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])
            scale = n1 / n0
            c, s = np.cos(alpha), np.sin(alpha)
            sm = p0[:, i] + p0[:, j]
            vx = 0.5 * (p1[:, i, 0] + p1[:, j, 0] - scale * (c * sm[:, 0] - s * sm[:, 1]))
            vy = 0.5 * (p1[:, i, 1] + p1[:, j, 1] - scale * (s * sm[:, 0] + c * sm[:, 1]))
            q = p0[:, k]
            px = scale * (c * q[:, 0] - s * q[:, 1]) + vx
            py = scale * (s * q[:, 0] + c * q[:, 1]) + vy
            dist = np.hypot(px - p1[:, k, 0], py - p1[:, k, 1])
            dik = np.hypot(q[:, 0] - p0[:, i, 0], q[:, 1] - p0[:, i, 1])
            djk = np.hypot(q[:, 0] - p0[:, j, 0], q[:, 1] - p0[:, j, 1])
            g = (0.5 * (n0 / dik + n0 / djk)) ** 0.25 / sigma
            ok = (n0 > DELTA) & (n1 > DELTA) & (dik > DELTA) & (djk > DELTA)
            out[:, col] = np.where(ok, g * dist, np.nan)
    return out


def distances_from_residuals(residuals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse (m, T, 3) residuals into per-triple ``(d_min, d_max)``.

    Transitions with any NaN residual are skipped; triples without a single
    usable transition get NaN.
    """
    usable = ~np.isnan(residuals).any(axis=2)
    lo = np.where(usable, np.nan_to_num(residuals, nan=np.inf).min(axis=2), -np.inf)
    hi = np.where(usable, np.nan_to_num(residuals, nan=-np.inf).max(axis=2), -np.inf)
    d_min = lo.max(axis=1)
    d_max = hi.max(axis=1)
    none = ~usable.any(axis=1)
    d_min[none] = np.nan
    d_max[none] = np.nan
    return d_min, d_max


def combine_third_order_batch(d_min: np.ndarray, d_max: np.ndarray, params: CostParams) -> np.ndarray:
    c_min = params.third_order(d_min)
    c_max = params.third_order(d_max)
    return np.where((c_min > 0) & (c_max > 0), c_min, np.where((c_min < 0) & (c_max < 0), c_max, 0.0))


def triplet_distances(pi: Trajectory, pj: Trajectory, pk: Trajectory, stats: FlowStats | None = None) -> tuple[float, float]:
    """``(d_min, d_max)``: worst case over time of the best and worst residual."""
    stats = stats or FlowStats()
    first, stop = common_frames(pi, pj, pk)
    if stop - first < 2:
        raise NoOverlap(f"trajectories {pi.id}, {pj.id}, {pk.id} share fewer than two frames")
    pts = np.stack([t.window(first, stop) for t in (pi, pj, pk)], axis=1)  # (T+1, 3, 2)
    res = batch_triplet_residuals(pts[:-1], pts[1:], stats.over(first, stop - 1))
    d_min, d_max = distances_from_residuals(res[None])
    if np.isnan(d_max[0]):
        raise DegenerateTriple(f"every transition of ({pi.id}, {pj.id}, {pk.id}) is degenerate")
    return float(d_min[0]), float(d_max[0])


def triplet_cost(pi: Trajectory, pj: Trajectory, pk: Trajectory, params: CostParams | None = None) -> float:
    params = params or CostParams()
    d_min, d_max = triplet_distances(pi, pj, pk, params.sigma)
    return combine_third_order(d_min, d_max, params)


def batch_third_order_costs(p0: np.ndarray, p1: np.ndarray, params: CostParams | None = None, sigma: float = 1.0) -> np.ndarray:
    """Third-order costs of two-frame triples, shape (m, 3, 2) each; degenerate ones get 0."""
    params = params or CostParams()
    d_min, d_max = distances_from_residuals(batch_triplet_residuals(p0, p1, sigma)[:, None, :])
    cost = combine_third_order_batch(d_min, d_max, params)
    return np.where(np.isnan(d_max), 0.0, cost)
