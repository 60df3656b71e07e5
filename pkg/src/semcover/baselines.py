"""Comparison strategies: boustrophedon sweep and a Brownian-bridge walk.

Both emit (delta, phi) through the same gait plant as the semantic
controller, via a pure-pursuit rule that turns heading error into steering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import networkx as nx
import numpy as np
from shapely.geometry import LineString, MultiLineString, Polygon, box
from shapely.ops import unary_union

from semcover.gait import GaitParams
from semcover.world import Pose, Scenario, bearing_to

Point = tuple[float, float]

ARRIVE_RADIUS = 0.15
TURN_IN_PLACE = 0.5
STUCK_CYCLES = 12
TRANSIT_RESOLUTION = 0.25
LANE_SLACK = 0.1


# --------------------------------------------------------------------------
# Pure pursuit
# --------------------------------------------------------------------------


def pursuit_command(pose: Pose, target: Point, params: GaitParams = GaitParams()) -> tuple[float, float]:
    """Steer toward ``target``: delta cancels the heading error in one cycle where it can."""
    err = bearing_to(pose.theta, pose.x, pose.y, target[0], target[1])
    per_unit = params.c_theta * 2.0 * params.kappa / params.delta_max  # rad per unit delta
    delta = float(np.clip(err / per_unit, -params.delta_max, params.delta_max))
    phi = 0.0 if abs(err) > TURN_IN_PLACE else 1.0
    return delta, phi


@dataclass
class WaypointFollower:
    """Tracks a waypoint queue; skips a waypoint when progress stalls."""

    waypoints: list[Point]
    index: int = 0
    best: float = math.inf
    stalled: int = 0
    skipped: int = 0
    replan: Callable[[Point, Point], list[Point]] | None = None
    replanned: bool = False

    def done(self) -> bool:
        return self.index >= len(self.waypoints)

    def command(self, pose: Pose, params: GaitParams = GaitParams()) -> tuple[float, float]:
        while not self.done():
            tx, ty = self.waypoints[self.index]
            d = math.hypot(tx - pose.x, ty - pose.y)
            if d <= ARRIVE_RADIUS:
                self._advance()
                continue
            if d < self.best - 0.02:
                self.best, self.stalled = d, 0
            else:
                self.stalled += 1
            if self.stalled > STUCK_CYCLES:
                if self.replan is not None and not self.replanned:
                    detour = self.replan((pose.x, pose.y), (tx, ty))[:-1]
                    self.waypoints[self.index:self.index] = detour
                    self.best, self.stalled, self.replanned = math.inf, 0, True
                    continue
                self.skipped += 1
                self._advance()
                continue
            return pursuit_command(pose, (tx, ty), params)
        return 0.0, 0.0

    def _advance(self):
        self.index += 1
        self.best, self.stalled, self.replanned = math.inf, 0, False


# --------------------------------------------------------------------------
# Boustrophedon cell decomposition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BcdPlan:
    lanes: tuple[tuple[Point, ...], ...]
    lane_spacing: float
    sweep_axis: str = "x"
    cells: tuple[tuple[float, float, float, float], ...] = ()

    def lane_segments_at(self, y: float, tol: float = 1e-9) -> int:
        """Number of disjoint swept intervals on lane ``y`` once cell pieces are rejoined."""
        iv = sorted((min(a[0], b[0]), max(a[0], b[0])) for a, b in (
            (lane[0], lane[-1]) for lane in self.lanes) if abs(a[1] - y) < tol)
        n, end = 0, -math.inf
        for x0, x1 in iv:
            if x0 > end + 1e-6:
                n += 1
            end = max(end, x1)
        return n


def free_space(scenario: Scenario, radius: float | None = None):
    r = scenario.robot_radius if radius is None else radius
    a = scenario.arena
    region = box(r, r, a.width - r, a.height - r)
    if scenario.obstacles:
        blocked = unary_union([Polygon(o.vertices).buffer(r, join_style="mitre") for o in scenario.obstacles])
        region = region.difference(blocked)
    return region


def lane_offsets(height: float, spacing: float, radius: float) -> list[float]:
    n = int(math.ceil(height / spacing - 1e-12))
    lo, hi = radius + 1e-6, height - radius - 1e-6
    return [min(max(spacing / 2.0 + k * spacing, lo), hi) for k in range(n)]


def _pieces(geom) -> list:
    if geom.is_empty:
        return []
    if hasattr(geom, "geoms"):
        return [g for g in geom.geoms if not g.is_empty]
    return [geom]


def plan_bcd(scenario: Scenario, spacing: float = 1.4, radius: float | None = None) -> BcdPlan:
    """Slab decomposition at obstacle vertices, lanes per cell, serpentine order.

    ``radius`` is the obstacle inflation (robot radius by default).
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    r = scenario.robot_radius if radius is None else radius
    free = free_space(scenario, r)
    if free.is_empty or free.area <= 0:
        raise ValueError("free space is empty")
    a = scenario.arena
    xs = {r, a.width - r}
    for poly in _pieces(free):
        for ring in [poly.exterior, *poly.interiors]:
            xs.update(x for x, _ in ring.coords if r < x < a.width - r)
    xs = sorted(xs)
    ys = lane_offsets(a.height, spacing, r)

    # cells: connected free pieces of each slab, merged left to right while the
    # connectivity does not change
    slabs = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        if x1 - x0 < 1e-9:
            continue
        slab = free.intersection(box(x0, 0, x1, a.height))
        slabs.append([p for p in _pieces(slab) if p.geom_type == "Polygon" and p.area > 1e-12])
    cells: list = []
    open_cells: list[tuple[int, object]] = []
    for pieces in slabs:
        nxt = []
        for p in pieces:
            left = [k for k, (ci, prev) in enumerate(open_cells) if prev.buffer(1e-7).intersects(p)]
            if len(left) == 1:
                ci, prev = open_cells[left[0]]
                # merge only when the left piece continues into exactly this piece
                right = [q for q in pieces if prev.buffer(1e-7).intersects(q)]
                if len(right) == 1:
                    cells[ci] = cells[ci].union(p)
                    nxt.append((ci, p))
                    continue
            cells.append(p)
            nxt.append((len(cells) - 1, p))
        open_cells = nxt

    lanes: list[tuple[Point, ...]] = []
    bounds = []
    for cell in cells:
        bounds.append(tuple(float(v) for v in cell.bounds))
        segs = []
        for y in ys:
            cut = cell.intersection(LineString([(0, y), (a.width, y)]))
            for s in _pieces(cut):
                if isinstance(s, MultiLineString):
                    continue
                if s.geom_type != "LineString" or s.length < 1e-6:
                    continue
                (xa, _), (xb, _) = s.coords[0], s.coords[-1]
                segs.append((y, min(xa, xb), max(xa, xb)))
        segs.sort()
        # adjacent cells share a boundary, so the same lane may be cut twice;
        # fuse touching pieces on the same y
        fused = []
        for y, x0, x1 in segs:
            if fused and abs(fused[-1][0] - y) < 1e-9 and x0 - fused[-1][2] < 1e-6:
                fused[-1] = (y, fused[-1][1], max(x1, fused[-1][2]))
            else:
                fused.append((y, x0, x1))
        for k, (y, x0, x1) in enumerate(fused):
            lanes.append(((x0, y), (x1, y)) if k % 2 == 0 else ((x1, y), (x0, y)))
    return BcdPlan(tuple(lanes), spacing, "x", tuple(bounds))


@dataclass
class TransitGraph:
    """Grid roadmap over free space for moving between lanes."""

    scenario: Scenario
    radius: float
    resolution: float = TRANSIT_RESOLUTION
    graph: nx.Graph = field(init=False)

    def __post_init__(self):
        a, h = self.scenario.arena, self.resolution
        nx_, ny_ = int(a.width / h), int(a.height / h)
        g = nx.Graph()
        free = {}
        for i in range(nx_ + 1):
            for j in range(ny_ + 1):
                x, y = i * h, j * h
                if self.scenario.is_free(x, y, self.radius):
                    free[(i, j)] = (x, y)
                    g.add_node((i, j), pos=(x, y))
        for (i, j), p in free.items():
            for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
                q = (i + di, j + dj)
                if q in free:
                    g.add_edge((i, j), q, weight=math.hypot(di, dj) * h)
        self.graph = g

    def nearest(self, p: Point):
        h = self.resolution
        best, bd = None, math.inf
        ci, cj = round(p[0] / h), round(p[1] / h)
        for rad in range(1, 6):
            for i in range(ci - rad, ci + rad + 1):
                for j in range(cj - rad, cj + rad + 1):
                    if (i, j) in self.graph:
                        d = math.hypot(i * h - p[0], j * h - p[1])
                        if d < bd:
                            best, bd = (i, j), d
            if best is not None:
                return best
        return None

    def path(self, a: Point, b: Point) -> list[Point]:
        if self.clear(a, b):
            return [b]
        na, nb = self.nearest(a), self.nearest(b)
        if na is None or nb is None:
            return [b]
        h = self.resolution
        try:
            nodes = nx.astar_path(self.graph, na, nb, heuristic=lambda u, v: math.hypot(u[0] - v[0], u[1] - v[1]) * h,
                                  weight="weight")
        except nx.NetworkXNoPath:
            return [b]
        pts = [(i * h, j * h) for i, j in nodes]
        return _shortcut([a, *pts, b], self.clear)[1:]

    def clear(self, a: Point, b: Point, step: float = 0.05) -> bool:
        """Robot disc stays free along the straight segment a-b (sampled)."""
        n = max(1, int(math.ceil(math.hypot(b[0] - a[0], b[1] - a[1]) / step)))
        r = self.scenario.robot_radius
        return all(self.scenario.is_free(a[0] + (b[0] - a[0]) * k / n, a[1] + (b[1] - a[1]) * k / n, r)
                   for k in range(1, n + 1))


def _shortcut(pts: list[Point], clear) -> list[Point]:
    out = [pts[0]]
    k = 0
    while k < len(pts) - 1:
        j = len(pts) - 1
        while j > k + 1 and not clear(pts[k], pts[j]):
            j -= 1
        out.append(pts[j])
        k = j
    return out


def bcd_waypoints(plan: BcdPlan, start: Point, transit: TransitGraph) -> list[Point]:
    """Greedy lane ordering from ``start``: nearest lane end next, entering at that end."""
    remaining = list(plan.lanes)
    pos = start
    out: list[Point] = []
    while remaining:
        best_k, best_flip, best_d = 0, False, math.inf
        for k, lane in enumerate(remaining):
            for flip, end in ((False, lane[0]), (True, lane[-1])):
                d = math.hypot(end[0] - pos[0], end[1] - pos[1])
                if d < best_d - 1e-12:
                    best_k, best_flip, best_d = k, flip, d
        lane = remaining.pop(best_k)
        if best_flip:
            lane = tuple(reversed(lane))
        out.extend(transit.path(pos, lane[0]))
        out.extend(lane[1:])
        pos = lane[-1]
    return out


class BcdController:
    name = "bcd"

    def __init__(self, scenario: Scenario, start: Pose, spacing: float = 1.4, params: GaitParams = GaitParams()):
        # lanes keep a small slack off the inflated obstacles so the plant's
        # collision truncation does not pin the robot at lane ends
        self.plan = plan_bcd(scenario, spacing, scenario.robot_radius + LANE_SLACK)
        transit = TransitGraph(scenario, scenario.robot_radius + LANE_SLACK)
        self.follower = WaypointFollower(bcd_waypoints(self.plan, (start.x, start.y), transit), replan=transit.path)
        self.params = params

    def command(self, pose: Pose) -> tuple[float, float]:
        return self.follower.command(pose, self.params)


# --------------------------------------------------------------------------
# Brownian bridge
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BbWalk:
    anchor_start: Point
    anchor_end: Point
    step_sigma: float = 0.3
    seed: int = 0
    length_budget: float = 40.0
    step_length: float = 0.2
    bounds: tuple[float, float, float, float] | None = None  # xmin, ymin, xmax, ymax

    def __post_init__(self):
        if self.step_sigma < 0 or self.length_budget <= 0 or self.step_length <= 0:
            raise ValueError("invalid bridge parameters")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.length_budget / self.step_length)))


def _reflect(v: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    span = hi - lo
    u = (v - lo) % (2 * span)
    return lo + (u if u <= span else 2 * span - u)


def step_bb(walk: BbWalk, position: Point, k: int, rng: np.random.Generator) -> Point:
    """Bridge step k -> k+1 of a discrete Brownian bridge ending at anchor_end.

    Mean pulls linearly toward the anchor over the remaining steps; the
    conditional variance sigma^2 (T-k-1)/(T-k) yields the profile
    sigma^2 k (T-k) / T.
    """
    T = walk.n_steps
    if k >= T:
        raise ValueError("bridge budget exhausted")
    rem = T - k
    px, py = position
    ex, ey = walk.anchor_end
    mx, my = px + (ex - px) / rem, py + (ey - py) / rem
    sd = walk.step_sigma * math.sqrt((rem - 1) / rem)
    nx_, ny_ = rng.normal(0.0, 1.0, size=2)
    x, y = mx + sd * nx_, my + sd * ny_
    if walk.bounds is not None:
        x0, y0, x1, y1 = walk.bounds
        x, y = _reflect(x, x0, x1), _reflect(y, y0, y1)
    return float(x), float(y)


def generate_bridge(walk: BbWalk, rng: np.random.Generator) -> list[Point]:
    pts = [walk.anchor_start]
    for k in range(walk.n_steps):
        pts.append(step_bb(walk, pts[-1], k, rng))
    return pts


def default_bb_walk(scenario: Scenario, start: Pose, seed: int, length_budget: float,
                    sigma: float = 0.3, params: GaitParams = GaitParams()) -> BbWalk:
    pts = scenario.ooi_array
    if len(pts):
        end = ((pts[:, 0].min() + pts[:, 0].max()) / 2.0, (pts[:, 1].min() + pts[:, 1].max()) / 2.0)
    else:
        end = (scenario.arena.width / 2.0, scenario.arena.height / 2.0)
    r = scenario.robot_radius
    return BbWalk((start.x, start.y), end, sigma, seed, length_budget, params.c_d * params.A0,
                  (r, r, scenario.arena.width - r, scenario.arena.height - r))


class BbController:
    """Advances the bridge one step per gait cycle and pursues the newest point."""

    name = "bb"

    def __init__(self, walk: BbWalk, rng: np.random.Generator, params: GaitParams = GaitParams()):
        self.walk = walk
        self.rng = rng
        self.params = params
        self.k = 0
        self.target = walk.anchor_start

    def command(self, pose: Pose) -> tuple[float, float]:
        if self.k < self.walk.n_steps:
            self.target = step_bb(self.walk, self.target, self.k, self.rng)
            self.k += 1
        if math.hypot(self.target[0] - pose.x, self.target[1] - pose.y) <= ARRIVE_RADIUS:
            return 0.0, 0.0
        return pursuit_command(pose, self.target, self.params)
