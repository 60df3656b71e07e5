"""Scenarios, planar geometry predicates and the occupancy-grid memory.

Frame: origin at the arena corner, x to the right, y up.  Headings are
measured *clockwise* from +x, so a positive heading change is a right turn
and the unit forward vector is ``(cos(theta), -sin(theta))``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from semcover._rng import substream

SCENARIO_NAMES = ("grid_world", "e_shape", "disconnected_paths", "custom")

# Table-2 obstacle counts for the three built-in layouts.
DEFAULT_OBSTACLE_COUNTS = {"grid_world": 5, "e_shape": 7, "disconnected_paths": 7}

Point = tuple[float, float]


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def heading_vector(theta: float) -> tuple[float, float]:
    return math.cos(theta), -math.sin(theta)


def heading_towards(x0: float, y0: float, x1: float, y1: float) -> float:
    """Clockwise heading pointing from (x0, y0) at (x1, y1)."""
    return normalize_angle(-math.atan2(y1 - y0, x1 - x0))


def bearing_to(theta: float, x0: float, y0: float, x1: float, y1: float) -> float:
    """Heading-relative bearing of (x1, y1); negative is left, positive right."""
    return normalize_angle(heading_towards(x0, y0, x1, y1) - theta)


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Arena:
    width: float = 12.0
    height: float = 8.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"arena dimensions must be positive, got {self.width}x{self.height}")

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return margin <= x <= self.width - margin and margin <= y <= self.height - margin


@dataclass(frozen=True)
class Obstacle:
    vertices: tuple[Point, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("an obstacle needs at least 3 vertices")
        if not _is_simple(verts):
            raise ValueError(f"obstacle polygon is self-intersecting: {verts}")

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @cached_property
    def centroid(self) -> Point:
        v = self.array
        x, y = v[:, 0], v[:, 1]
        xs, ys = np.roll(x, -1), np.roll(y, -1)
        cross = x * ys - xs * y
        area = cross.sum() / 2.0
        if abs(area) < 1e-12:
            return float(x.mean()), float(y.mean())
        cx = ((x + xs) * cross).sum() / (6.0 * area)
        cy = ((y + ys) * cross).sum() / (6.0 * area)
        return float(cx), float(cy)

    def contains(self, x: float, y: float) -> bool:
        return bool(point_in_polygon(np.array([x]), np.array([y]), self.array)[0])


@dataclass(frozen=True)
class OOI:
    id: int
    x: float
    y: float

    @property
    def position(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class Pose:
    t: int
    x: float
    y: float
    theta: float
    z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))


@dataclass(frozen=True)
class ScenarioParams:
    """Layout knobs for the procedural scenarios.

    ``obstacles``, ``oois`` and ``spawn_poses`` are only read by the
    ``custom`` scenario, which takes its geometry verbatim.
    """

    arena_width: float = 12.0
    arena_height: float = 8.0
    ooi_spacing: float = 0.55
    ooi_jitter: float = 0.2
    gap: float = 2.5
    robot_radius: float = 0.25
    obstacles: tuple[tuple[Point, ...], ...] = ()
    oois: tuple[Point, ...] = ()
    spawn_poses: tuple[tuple[float, float, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "arena_width": self.arena_width,
            "arena_height": self.arena_height,
            "ooi_spacing": self.ooi_spacing,
            "ooi_jitter": self.ooi_jitter,
            "gap": self.gap,
            "robot_radius": self.robot_radius,
            "obstacles": [[list(p) for p in poly] for poly in self.obstacles],
            "oois": [list(p) for p in self.oois],
            "spawn_poses": [list(p) for p in self.spawn_poses],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioParams":
        d = dict(d)
        d["obstacles"] = tuple(tuple(tuple(p) for p in poly) for poly in d.get("obstacles", ()))
        d["oois"] = tuple(tuple(p) for p in d.get("oois", ()))
        d["spawn_poses"] = tuple(tuple(p) for p in d.get("spawn_poses", ()))
        return cls(**d)


@dataclass(frozen=True)
class Scenario:
    name: str
    arena: Arena
    obstacles: tuple[Obstacle, ...]
    oois: tuple[OOI, ...]
    spawn_poses: tuple[Pose, ...]
    seed: int = 0
    robot_radius: float = 0.25

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario name {self.name!r}")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "oois", tuple(self.oois))
        object.__setattr__(self, "spawn_poses", tuple(self.spawn_poses))

    @cached_property
    def edges(self) -> np.ndarray:
        """All obstacle edges as an (E, 4) array of (ax, ay, bx, by)."""
        rows = []
        for obs in self.obstacles:
            v = obs.array
            w = np.roll(v, -1, axis=0)
            rows.append(np.hstack([v, w]))
        if not rows:
            return np.zeros((0, 4))
        return np.vstack(rows)

    @cached_property
    def edge_owner(self) -> np.ndarray:
        return np.concatenate(
            [np.full(len(o.vertices), k) for k, o in enumerate(self.obstacles)]
        ) if self.obstacles else np.zeros(0, dtype=int)

    @cached_property
    def wall_edges(self) -> np.ndarray:
        w, h = self.arena.width, self.arena.height
        return np.array([[0, 0, w, 0], [w, 0, w, h], [w, h, 0, h], [0, h, 0, 0]], dtype=float)

    @cached_property
    def ooi_array(self) -> np.ndarray:
        return np.array([[o.x, o.y] for o in self.oois], dtype=float).reshape(-1, 2)

    def is_free(self, x: float, y: float, radius: float | None = None) -> bool:
        """True when a disc of ``radius`` at (x, y) is in bounds and off all obstacles."""
        r = self.robot_radius if radius is None else radius
        if not self.arena.contains(x, y, margin=r):
            return False
        return clearance((x, y), self) >= r


# --------------------------------------------------------------------------
# Occupancy grid
# --------------------------------------------------------------------------


@dataclass
class OccupancyGrid:
    """Visited-cell memory; a cell is ``(floor(x / r), floor(y / r))``."""

    resolution: float = 0.5
    visit_counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("grid resolution must be positive")

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.visit_counts)

    def __len__(self) -> int:
        return len(self.visit_counts)

    def __contains__(self, cell) -> bool:
        return cell in self.visit_counts

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinates ({x}, {y})")
        return math.floor(x / self.resolution), math.floor(y / self.resolution)

    def visit(self, x: float, y: float) -> tuple[int, int]:
        """In-place update; used by the engine's hot loop."""
        c = self.cell_of(x, y)
        self.visit_counts[c] = self.visit_counts.get(c, 0) + 1
        return c

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, dict(self.visit_counts))

    def merged(self, cells: Iterable[tuple[int, int]]) -> "OccupancyGrid":
        """A copy with extra cells overlaid (count 1 where new)."""
        out = self.copy()
        for c in cells:
            out.visit_counts.setdefault(tuple(c), 1)
        return out


def update_grid(grid: OccupancyGrid, pose: Pose) -> OccupancyGrid:
    out = grid.copy()
    out.visit(pose.x, pose.y)
    return out


def replay_grid(poses: Iterable[Pose], resolution: float = 0.5) -> OccupancyGrid:
    grid = OccupancyGrid(resolution)
    for p in poses:
        grid.visit(p.x, p.y)
    return grid


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p1, p2, p3, p4) -> bool:
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def _is_simple(verts: Sequence[Point]) -> bool:
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            c, d = verts[j], verts[(j + 1) % n]
            if _segments_cross(a, b, c, d):
                return False
    return True


def point_in_polygon(xs: np.ndarray, ys: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd test, vectorized over query points."""
    xs = np.asarray(xs, dtype=float)[:, None]
    ys = np.asarray(ys, dtype=float)[:, None]
    x0, y0 = verts[:, 0][None, :], verts[:, 1][None, :]
    x1, y1 = np.roll(verts[:, 0], -1)[None, :], np.roll(verts[:, 1], -1)[None, :]
    straddle = (y0 > ys) != (y1 > ys)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (xs < x_cross)
    return (hits.sum(axis=1) % 2) == 1


def point_segment_distance(px, py, edges: np.ndarray) -> np.ndarray:
    """Distance from one point to each (ax, ay, bx, by) segment row."""
    ax, ay, bx, by = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(den > 0, ((px - ax) * dx + (py - ay) * dy) / den, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(ax + t * dx - px, ay + t * dy - py)


def clearance(point: Point | Pose, scenario: Scenario) -> float:
    """Signed distance to the nearest obstacle boundary (negative inside)."""
    if isinstance(point, Pose):
        px, py = point.x, point.y
    else:
        px, py = float(point[0]), float(point[1])
    if not scenario.obstacles:
        return math.inf
    d = point_segment_distance(px, py, scenario.edges)
    inside = [o for o in scenario.obstacles if o.contains(px, py)]
    if inside:
        return -float(point_segment_distance(px, py, _edges_of(inside[0])).min())
    return float(d.min())


def _edges_of(obs: Obstacle) -> np.ndarray:
    v = obs.array
    return np.hstack([v, np.roll(v, -1, axis=0)])


def ray_distances(x: float, y: float, angles: np.ndarray, max_range: float,
                  edges: np.ndarray) -> np.ndarray:
    """Distance along each world-heading ray to the first edge hit (capped)."""
    angles = np.asarray(angles, dtype=float)
    dx = np.cos(angles)[:, None]
    dy = -np.sin(angles)[:, None]
    ax, ay = edges[:, 0][None, :], edges[:, 1][None, :]
    ex, ey = (edges[:, 2] - edges[:, 0])[None, :], (edges[:, 3] - edges[:, 1])[None, :]
    den = dx * ey - dy * ex
    wx, wy = ax - x, ay - y
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * ey - wy * ex) / den
        u = (wx * dy - wy * dx) / den
    ok = (np.abs(den) > 1e-12) & (t > 0) & (u >= 0) & (u <= 1)
    t = np.where(ok, t, np.inf)
    out = t.min(axis=1) if t.shape[1] else np.full(len(angles), np.inf)
    return np.minimum(out, max_range)


def segment_blocked(x0: float, y0: float, x1: float, y1: float, edges: np.ndarray) -> bool:
    """True when the open segment (x0,y0)-(x1,y1) crosses any edge."""
    if len(edges) == 0:
        return False
    ax, ay, bx, by = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    d1 = (bx - ax) * (y0 - ay) - (by - ay) * (x0 - ax)
    d2 = (bx - ax) * (y1 - ay) - (by - ay) * (x1 - ax)
    d3 = (x1 - x0) * (ay - y0) - (y1 - y0) * (ax - x0)
    d4 = (x1 - x0) * (by - y0) - (y1 - y0) * (bx - x0)
    cross = (np.sign(d1) * np.sign(d2) <= 0) & (np.sign(d3) * np.sign(d4) <= 0)
    # drop colinear-degenerate contacts where both endpoints sit on the line
    cross &= ~((d1 == 0) & (d2 == 0))
    return bool(cross.any())


# --------------------------------------------------------------------------
# Scenario construction
# --------------------------------------------------------------------------


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _diamond(cx, cy, r):
    return ((cx, cy - r), (cx + r, cy), (cx, cy + r), (cx - r, cy))


def _layout(name: str, p: ScenarioParams):
    """Return (bands, obstacles, spawn targets) in meters.

    Layouts are authored on a 12 x 8 template and scaled to the arena.
    """
    w, h = p.arena_width, p.arena_height
    if name == "grid_world":
        bands = [
            [(1.2, 2.2), (10.8, 2.2)],
            [(1.2, 5.8), (8.4, 5.8)],
            [(3.6, 2.2), (3.6, 5.8)],
            [(7.2, 2.2), (7.2, 7.0)],
            [(7.2, 4.0), (10.4, 4.0)],
        ]
        obstacles = [
            _rect(1.4, 3.5, 2.4, 4.5),
            _diamond(5.4, 4.0, 0.7),
            _rect(4.6, 0.6, 6.2, 1.1),
            ((9.0, 5.6), (10.4, 5.6), (9.7, 6.8)),
            ((9.0, 0.5), (10.2, 0.5), (10.4, 1.1), (9.6, 1.4), (8.9, 1.0)),
        ]
        spawns = [((0.6, 0.6), (1.2, 2.2)), ((11.4, 4.8), (10.4, 4.0)), ((0.6, 7.4), (1.2, 5.8))]
    elif name == "e_shape":
        bands = [
            [(2.0, 6.6), (10.0, 6.6)],
            [(2.0, 1.4), (2.0, 6.6)],
            [(2.0, 1.4), (10.0, 1.4)],
            [(2.0, 4.0), (5.2, 4.0)],
        ]
        obstacles = [
            _rect(3.65, 4.95, 4.35, 5.65),
            _rect(3.65, 2.35, 4.35, 3.05),
            _diamond(7.5, 4.0, 0.8),
            _rect(9.4, 3.4, 10.2, 4.6),
            _rect(0.4, 3.2, 1.0, 4.8),
            _rect(5.4, 7.3, 6.6, 7.7),
            _rect(5.4, 0.3, 6.6, 0.7),
        ]
        spawns = [((0.6, 0.6), (2.0, 1.4)), ((11.4, 7.4), (10.0, 6.6)), ((11.4, 0.6), (10.0, 1.4))]
    elif name == "disconnected_paths":
        j = p.ooi_jitter
        xl = (12.0 - p.gap) / 2.0 - j
        xr = (12.0 + p.gap) / 2.0 + j
        if xl <= 1.6 or xr >= 10.4:
            raise ValueError(f"gap {p.gap} leaves no room for the OOI clusters")
        bands = [
            [(1.2, 1.2), (1.2, 6.8)],
            [(1.2, 2.5), (xl, 2.5)],
            [(1.2, 5.5), (xl, 5.5)],
            [(10.8, 1.2), (10.8, 6.8)],
            [(xr, 2.0), (10.8, 2.0)],
            [(xr, 4.8), (10.8, 4.8)],
        ]
        obstacles = [
            _rect(5.6, 1.0, 6.4, 2.0),
            _diamond(6.0, 4.0, 0.6),
            _rect(5.6, 6.0, 6.4, 7.0),
            _rect(2.5, 3.6, 3.3, 4.4),
            _rect(2.4, 7.1, 3.4, 7.6),
            _rect(8.85, 3.05, 9.55, 3.75),
            ((8.7, 5.9), (9.7, 5.9), (9.2, 6.8)),
        ]
        spawns = [((0.5, 0.5), (1.2, 2.0)), ((11.5, 7.5), (10.8, 6.0)), ((11.5, 0.5), (10.8, 2.0))]
    else:
        raise ValueError(f"unknown scenario name {name!r}")

    sx, sy = w / 12.0, h / 8.0

    def sc(pt):
        return (pt[0] * sx, pt[1] * sy)

    bands = [[sc(q) for q in b] for b in bands]
    obstacles = [tuple(sc(q) for q in o) for o in obstacles]
    spawns = [(sc(a), sc(b)) for a, b in spawns]
    return bands, obstacles, spawns


def _band_points(bands, spacing: float) -> list[Point]:
    pts: list[Point] = []
    for band in bands:
        for (x0, y0), (x1, y1) in zip(band[:-1], band[1:]):
            length = math.hypot(x1 - x0, y1 - y0)
            n = max(1, int(round(length / spacing)))
            for k in range(n + 1):
                s = k / n
                q = (x0 + s * (x1 - x0), y0 + s * (y1 - y0))
                if all(math.hypot(q[0] - a, q[1] - b) > 0.6 * spacing for a, b in pts):
                    pts.append(q)
    return pts


def build_scenario(name: str, params: ScenarioParams | None = None, seed: int = 0) -> Scenario:
    """Build one of the named test worlds; a pure function of its arguments."""
    p = params or ScenarioParams()
    if name not in SCENARIO_NAMES:
        raise ValueError(f"unknown scenario name {name!r}; expected one of {SCENARIO_NAMES}")
    arena = Arena(p.arena_width, p.arena_height)
    if name == "custom":
        obstacles = tuple(Obstacle(tuple(v)) for v in p.obstacles)
        oois = tuple(OOI(i, float(x), float(y)) for i, (x, y) in enumerate(p.oois))
        spawns = tuple(Pose(0, float(x), float(y), float(th)) for x, y, th in p.spawn_poses)
        sc = Scenario(name, arena, obstacles, oois, spawns, seed, p.robot_radius)
        validate_scenario(sc)
        return sc

    bands, polys, spawn_specs = _layout(name, p)
    obstacles = tuple(Obstacle(v) for v in polys)
    rng = substream(seed, "scenario")
    probe = Scenario(name, arena, obstacles, (), (), seed, p.robot_radius)
    oois: list[OOI] = []
    j = p.ooi_jitter
    for bx, by in _band_points(bands, p.ooi_spacing):
        jx, jy = rng.uniform(-j, j, size=2)
        x = min(max(bx + jx, 0.05), arena.width - 0.05)
        y = min(max(by + jy, 0.05), arena.height - 0.05)
        if clearance((x, y), probe) < 0.1:
            continue
        oois.append(OOI(len(oois), float(x), float(y)))
    spawns = tuple(
        Pose(0, a[0], a[1], heading_towards(a[0], a[1], b[0], b[1])) for a, b in spawn_specs
    )
    sc = Scenario(name, arena, obstacles, tuple(oois), spawns, seed, p.robot_radius)
    validate_scenario(sc)
    return sc


def validate_scenario(sc: Scenario) -> None:
    """Raise ValueError when geometry overlaps or leaves the arena."""
    a = sc.arena
    for k, obs in enumerate(sc.obstacles):
        v = obs.array
        if (v[:, 0] < 0).any() or (v[:, 0] > a.width).any() or (v[:, 1] < 0).any() or (v[:, 1] > a.height).any():
            raise ValueError(f"obstacle {k} leaves the arena")
        for m in range(k + 1, len(sc.obstacles)):
            other = sc.obstacles[m]
            if _polygons_overlap(obs, other):
                raise ValueError(f"obstacles {k} and {m} overlap")
    if not sc.oois:
        raise ValueError("scenario has no OOIs")
    for o in sc.oois:
        if not a.contains(o.x, o.y):
            raise ValueError(f"OOI {o.id} outside the arena")
        if any(obs.contains(o.x, o.y) for obs in sc.obstacles):
            raise ValueError(f"OOI {o.id} lies inside an obstacle")
    if not sc.spawn_poses:
        raise ValueError("scenario has no spawn poses")
    for i, sp in enumerate(sc.spawn_poses):
        if not sc.is_free(sp.x, sp.y):
            raise ValueError(f"spawn pose {i} collides with geometry")


def _polygons_overlap(a: Obstacle, b: Obstacle) -> bool:
    ea, eb = _edges_of(a), _edges_of(b)
    for row in ea:
        if segment_blocked(row[0], row[1], row[2], row[3], eb):
            return True
    return a.contains(*b.vertices[0]) or b.contains(*a.vertices[0])


def ooi_clusters(points: np.ndarray, threshold: float) -> list[list[int]]:
    """Single-linkage components: points closer than ``threshold`` are joined."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if n:
        d = np.hypot(points[:, None, 0] - points[None, :, 0], points[:, None, 1] - points[None, :, 1])
        ii, jj = np.nonzero(np.triu(d < threshold, k=1))
        for i, j in zip(ii, jj):
            ri, rj = find(int(i)), find(int(j))
            if ri != rj:
                parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "format": "semcover-scenario/1",
        "name": sc.name,
        "seed": sc.seed,
        "robot_radius": sc.robot_radius,
        "arena": {"width": sc.arena.width, "height": sc.arena.height},
        "obstacles": [[list(v) for v in o.vertices] for o in sc.obstacles],
        "oois": [{"id": o.id, "x": o.x, "y": o.y} for o in sc.oois],
        "spawn_poses": [{"x": p.x, "y": p.y, "theta": p.theta} for p in sc.spawn_poses],
    }


def scenario_from_dict(d: Mapping) -> Scenario:
    if d.get("format") != "semcover-scenario/1":
        raise ValueError(f"unsupported scenario format {d.get('format')!r}")
    sc = Scenario(
        name=d["name"],
        arena=Arena(float(d["arena"]["width"]), float(d["arena"]["height"])),
        obstacles=tuple(Obstacle(tuple(tuple(v) for v in o)) for o in d["obstacles"]),
        oois=tuple(OOI(int(o["id"]), float(o["x"]), float(o["y"])) for o in d["oois"]),
        spawn_poses=tuple(Pose(0, float(p["x"]), float(p["y"]), float(p["theta"])) for p in d["spawn_poses"]),
        seed=int(d.get("seed", 0)),
        robot_radius=float(d.get("robot_radius", 0.25)),
    )
    validate_scenario(sc)
    return sc


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def with_spawns(sc: Scenario, spawns: Sequence[Pose]) -> Scenario:
    return replace(sc, spawn_poses=tuple(spawns))
