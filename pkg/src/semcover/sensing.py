"""Synthetic forward camera and local radar built from ground-truth geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from semcover.world import (
    OccupancyGrid,
    Pose,
    Scenario,
    bearing_to,
    point_in_polygon,
    ray_distances,
    segment_blocked,
)

SECTORS = ("left", "center", "right")


@dataclass(frozen=True)
class SensorConfig:
    fov: float = 1.5
    max_range: float = 3.0
    radar_radius: float = 3.0
    radar_sectors: int = 8
    rays_per_sector: int = 8
    noise: bool = False
    bearing_sigma: float = 0.02
    range_sigma: float = 0.05

    def __post_init__(self):
        if not (0 < self.fov <= 2 * math.pi):
            raise ValueError("fov must be in (0, 2*pi]")
        if self.max_range <= 0 or self.radar_radius <= 0:
            raise ValueError("sensor ranges must be positive")
        if self.radar_sectors < 1 or self.rays_per_sector < 1:
            raise ValueError("radar needs at least one sector and one ray")


@dataclass(frozen=True)
class Detection:
    ooi_id: int
    bearing: float
    range: float


@dataclass(frozen=True)
class CameraView:
    fov: float
    max_range: float
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class RadarMap:
    """Nearest obstacle or wall per heading-relative sector.

    Sector k spans bearings ``[2*pi*k/K - pi, 2*pi*(k+1)/K - pi)``.  The
    individual beam readings are kept so callers can re-bin them.
    """

    radius: float
    occupied_sectors: tuple[float, ...]
    ray_bearings: tuple[float, ...]
    ray_ranges: tuple[float, ...]


@dataclass(frozen=True)
class ObservationBundle:
    view: CameraView
    radar: RadarMap
    pose: Pose


@dataclass(frozen=True)
class SectorStats:
    ooi_count_left: int
    ooi_count_center: int
    ooi_count_right: int
    nearest_obstacle_left: float
    nearest_obstacle_center: float
    nearest_obstacle_right: float
    unexplored_fraction_left: float
    unexplored_fraction_center: float
    unexplored_fraction_right: float
    # detections not yet passed near by this robot (or a peer, via the overlay)
    fresh_count_left: int = 0
    fresh_count_center: int = 0
    fresh_count_right: int = 0

    def counts(self) -> tuple[int, int, int]:
        return self.ooi_count_left, self.ooi_count_center, self.ooi_count_right

    def fresh(self) -> tuple[int, int, int]:
        return self.fresh_count_left, self.fresh_count_center, self.fresh_count_right

    def obstacles(self) -> tuple[float, float, float]:
        return self.nearest_obstacle_left, self.nearest_obstacle_center, self.nearest_obstacle_right

    def unexplored(self) -> tuple[float, float, float]:
        return self.unexplored_fraction_left, self.unexplored_fraction_center, self.unexplored_fraction_right


def sector_of(bearing: float, fov: float) -> str:
    """Left/center/right bin with edges at +-fov/6; negative bearings are left."""
    edge = fov / 6.0
    if bearing < -edge:
        return "left"
    if bearing > edge:
        return "right"
    return "center"


def visible(scenario: Scenario, pose: Pose, x: float, y: float, cfg: SensorConfig) -> tuple[bool, float, float]:
    rng = math.hypot(x - pose.x, y - pose.y)
    b = bearing_to(pose.theta, pose.x, pose.y, x, y) if rng > 0 else 0.0
    if rng > cfg.max_range or abs(b) > cfg.fov / 2.0:
        return False, b, rng
    if segment_blocked(pose.x, pose.y, x, y, scenario.edges):
        return False, b, rng
    return True, b, rng


def sense(scenario: Scenario, pose: Pose, grid: OccupancyGrid | None = None,
          config: SensorConfig = SensorConfig(), rng: np.random.Generator | None = None) -> ObservationBundle:
    """Observation bundle at ``pose``; ``grid`` is accepted for interface symmetry."""
    dets = []
    for o in scenario.oois:
        ok, b, r = visible(scenario, pose, o.x, o.y, config)
        if ok:
            dets.append(Detection(o.id, b, r))
    if config.noise and rng is not None and dets:
        dets = [Detection(d.ooi_id, d.bearing + rng.normal(0, config.bearing_sigma),
                          max(1e-6, d.range + rng.normal(0, config.range_sigma))) for d in dets]
    view = CameraView(config.fov, config.max_range, tuple(dets))

    K, m = config.radar_sectors, config.rays_per_sector
    n = K * m
    rel = -math.pi + (np.arange(n) + 0.5) * 2.0 * math.pi / n
    edges = np.vstack([scenario.edges, scenario.wall_edges])
    ranges = ray_distances(pose.x, pose.y, pose.theta + rel, config.radar_radius, edges)
    ranges = np.maximum(ranges, 1e-9)
    per_sector = tuple(float(ranges[k * m:(k + 1) * m].min()) for k in range(K))
    radar = RadarMap(config.radar_radius, per_sector, tuple(float(b) for b in rel), tuple(float(r) for r in ranges))
    return ObservationBundle(view, radar, pose)


@lru_cache(maxsize=32)
def _free_cells(scenario: Scenario, resolution: float):
    nx = int(math.ceil(scenario.arena.width / resolution))
    ny = int(math.ceil(scenario.arena.height / resolution))
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    cx = (ii + 0.5) * resolution
    cy = (jj + 0.5) * resolution
    free = np.ones(len(ii), dtype=bool)
    for obs in scenario.obstacles:
        free &= ~point_in_polygon(cx, cy, obs.array)
    return ii[free], jj[free], cx[free], cy[free]


def free_cell_count(scenario: Scenario, resolution: float) -> int:
    return len(_free_cells(scenario, resolution)[0])


def _visited_mask(grid: OccupancyGrid, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    cells = grid.visit_counts
    return np.fromiter(((int(i), int(j)) in cells for i, j in zip(ii, jj)), dtype=bool, count=len(ii))


def is_fresh(grid: OccupancyGrid, x: float, y: float, radius: float = 0.5) -> bool:
    """No visited cell centre lies within ``radius`` of (x, y)."""
    r = grid.resolution
    ci, cj = math.floor(x / r), math.floor(y / r)
    span = int(math.ceil(radius / r)) + 1
    for i in range(ci - span, ci + span + 1):
        for j in range(cj - span, cj + span + 1):
            if (i, j) in grid.visit_counts and math.hypot((i + 0.5) * r - x, (j + 0.5) * r - y) <= radius:
                return False
    return True


def summarize(view: CameraView, radar: RadarMap, grid: OccupancyGrid, pose: Pose,
              scenario: Scenario | None = None, fresh_radius: float = 0.5) -> SectorStats:
    """Collapse a bundle into left/center/right statistics.

    ``scenario`` supplies the arena extent for the unexplored-cell census;
    without it the census runs over cells in range regardless of bounds.
    """
    counts = {s: 0 for s in SECTORS}
    fresh = {s: 0 for s in SECTORS}
    for d in view.detections:
        s = sector_of(d.bearing, view.fov)
        counts[s] += 1
        th = pose.theta + d.bearing
        ox, oy = pose.x + d.range * math.cos(th), pose.y - d.range * math.sin(th)
        if is_fresh(grid, ox, oy, fresh_radius):
            fresh[s] += 1

    nearest = {s: radar.radius for s in SECTORS}
    for b, r in zip(radar.ray_bearings, radar.ray_ranges):
        if abs(b) <= view.fov / 2.0:
            s = sector_of(b, view.fov)
            nearest[s] = min(nearest[s], r)

    if scenario is not None:
        ii, jj, cx, cy = _free_cells(scenario, grid.resolution)
    else:
        span = int(math.ceil(view.max_range / grid.resolution)) + 1
        ci, cj = grid.cell_of(pose.x, pose.y)
        ii, jj = np.meshgrid(np.arange(ci - span, ci + span + 1), np.arange(cj - span, cj + span + 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        cx, cy = (ii + 0.5) * grid.resolution, (jj + 0.5) * grid.resolution
    dx, dy = cx - pose.x, cy - pose.y
    dist = np.hypot(dx, dy)
    rel = np.mod(-np.arctan2(dy, dx) - pose.theta + math.pi, 2.0 * math.pi) - math.pi
    in_range = (dist <= view.max_range) & (np.abs(rel) <= view.fov / 2.0)
    edge = view.fov / 6.0
    masks = {"left": in_range & (rel < -edge), "right": in_range & (rel > edge),
             "center": in_range & (np.abs(rel) <= edge)}
    unexplored = {}
    sel = in_range
    visited = np.zeros(len(ii), dtype=bool)
    if sel.any():
        visited[sel] = _visited_mask(grid, ii[sel], jj[sel])
    for s in SECTORS:
        n = int(masks[s].sum())
        unexplored[s] = 0.0 if n == 0 else float((~visited[masks[s]]).sum()) / n

    return SectorStats(
        counts["left"], counts["center"], counts["right"],
        nearest["left"], nearest["center"], nearest["right"],
        unexplored["left"], unexplored["center"], unexplored["right"],
        fresh["left"], fresh["center"], fresh["right"],
    )
