"""Path statistics and the normalized coverage indicators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from semcover.world import OOI, Pose, Scenario

COVER_RADIUS = 0.7


@dataclass
class TrajectoryLog:
    robot_id: int = 0
    poses: list[Pose] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    def xy(self) -> np.ndarray:
        if not self.poses:
            return np.zeros((0, 2))
        return np.array([(p.x, p.y) for p in self.poses], dtype=float)

    def validate(self, max_gap: float | None = None) -> None:
        ts = [p.t for p in self.poses]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")
        if max_gap is not None and len(self.poses) > 1:
            gaps = np.hypot(*np.diff(self.xy(), axis=0).T)
            if gaps.max() > max_gap + 1e-12:
                raise ValueError("pose gap exceeds the maximum per-step displacement")


@dataclass(frozen=True)
class MetricsReport:
    total_length: float
    covered_ooi_count: int
    coverage_length: float
    coverage_ratio: float
    ooi_density: float | None = None
    ooi_efficiency: float | None = None

    def row(self, digits: int = 2) -> dict:
        def fmt(v):
            return "" if v is None else f"{v:.{digits}f}"
        return {
            "total_length": fmt(self.total_length),
            "covered_oois": str(self.covered_ooi_count),
            "coverage_length": fmt(self.coverage_length),
            "coverage_ratio": fmt(self.coverage_ratio),
            "ooi_density": fmt(self.ooi_density),
            "ooi_efficiency": fmt(self.ooi_efficiency),
        }


def _points(traj) -> np.ndarray:
    if isinstance(traj, TrajectoryLog):
        return traj.xy()
    if len(traj) and isinstance(traj[0], Pose):
        return np.array([(p.x, p.y) for p in traj], dtype=float)
    arr = np.asarray(traj, dtype=float)
    return arr.reshape(-1, 2)


def _ooi_xy(oois) -> np.ndarray:
    if len(oois) == 0:
        return np.zeros((0, 2))
    if isinstance(oois[0], OOI):
        return np.array([(o.x, o.y) for o in oois], dtype=float)
    return np.asarray(oois, dtype=float).reshape(-1, 2)


def total_length(traj) -> float:
    p = _points(traj)
    if len(p) < 2:
        return 0.0
    return float(np.hypot(*np.diff(p, axis=0).T).sum())


def polyline_distances(points: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Minimum distance from each point to the polyline ``path``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(path) == 0:
        return np.full(len(points), math.inf)
    if len(path) == 1:
        return np.hypot(*(points - path[0]).T)
    a, b = path[:-1], path[1:]
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    ap = points[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, np.einsum("pij,ij->pi", ap, ab) / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.hypot(*(points[:, None, :] - closest).transpose(2, 0, 1)).min(axis=1)


def covered_mask(trajs: Sequence, oois, radius: float = COVER_RADIUS) -> np.ndarray:
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = _ooi_xy(oois)
    mask = np.zeros(len(pts), dtype=bool)
    for tr in trajs:
        path = _points(tr)
        if len(path):
            mask |= polyline_distances(pts, path) <= radius
    return mask


def covered_oois(traj, oois, radius: float = COVER_RADIUS) -> int:
    return int(covered_mask([traj], oois, radius).sum())


def coverage_length(traj, oois, radius: float = COVER_RADIUS) -> float:
    """Length of segments whose midpoint lies within ``radius`` of some OOI."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    p = _points(traj)
    pts = _ooi_xy(oois)
    if len(p) < 2 or len(pts) == 0:
        return 0.0
    seg = np.hypot(*np.diff(p, axis=0).T)
    mid = (p[:-1] + p[1:]) / 2.0
    d = np.hypot(mid[:, None, 0] - pts[None, :, 0], mid[:, None, 1] - pts[None, :, 1]).min(axis=1)
    return float(seg[d <= radius].sum())


def rich_cells(scenario: Scenario, radius: float = COVER_RADIUS, r: float = 0.5) -> np.ndarray:
    """Centres of grid cells whose centre lies within ``radius`` of an OOI."""
    pts = scenario.ooi_array
    if len(pts) == 0:
        raise ValueError("coverage ratio needs at least one OOI")
    nx = int(math.ceil(scenario.arena.width / r))
    ny = int(math.ceil(scenario.arena.height / r))
    cx, cy = np.meshgrid((np.arange(nx) + 0.5) * r, (np.arange(ny) + 0.5) * r, indexing="ij")
    c = np.column_stack([cx.ravel(), cy.ravel()])
    d = np.hypot(c[:, None, 0] - pts[None, :, 0], c[:, None, 1] - pts[None, :, 1]).min(axis=1)
    return c[d <= radius]


def coverage_ratio(trajs: Sequence, scenario: Scenario, radius: float = COVER_RADIUS, r: float = 0.5) -> float:
    cells = rich_cells(scenario, radius, r)
    hit = np.zeros(len(cells), dtype=bool)
    for tr in trajs:
        path = _points(tr)
        if len(path):
            hit |= polyline_distances(cells, path) <= radius
    return 100.0 * float(hit.sum()) / len(cells)


def derive_indicators(total: float, count: int, cov_len: float, ratio: float) -> MetricsReport:
    if total < 0 or cov_len < 0:
        raise ValueError("lengths must be non-negative")
    density = count / total if total > 0 else None
    efficiency = count / cov_len if cov_len > 0 else None
    return MetricsReport(total, int(count), cov_len, ratio, density, efficiency)


def evaluate(trajs: Sequence, scenario: Scenario, radius: float = COVER_RADIUS, r: float = 0.5) -> MetricsReport:
    """Team report: deduplicated OOI count over summed lengths."""
    total = sum(total_length(t) for t in trajs)
    cov = sum(coverage_length(t, scenario.oois, radius) for t in trajs)
    count = int(covered_mask(trajs, scenario.oois, radius).sum())
    ratio = coverage_ratio(trajs, scenario, radius, r) if scenario.oois else 0.0
    return derive_indicators(total, count, cov, ratio)


def visited_overlap(cells_a: set, cells_b: set) -> float:
    """Jaccard overlap of two visited-cell sets (0 when both are empty)."""
    union = cells_a | cells_b
    return len(cells_a & cells_b) / len(union) if union else 0.0
