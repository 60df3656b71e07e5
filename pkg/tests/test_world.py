import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semcover.world import (
    OccupancyGrid,
    Obstacle,
    Pose,
    ScenarioParams,
    bearing_to,
    build_scenario,
    clearance,
    heading_vector,
    load_scenario,
    normalize_angle,
    ooi_clusters,
    replay_grid,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    update_grid,
    validate_scenario,
)

from conftest import open_scenario


# -- scenarios --------------------------------------------------------------


def test_grid_world_layout():
    sc = build_scenario("grid_world", seed=42)
    assert len(sc.obstacles) == 5
    assert (sc.arena.width, sc.arena.height) == (12.0, 8.0)


def test_e_shape_has_seven_obstacles_and_c_band():
    sc = build_scenario("e_shape", seed=42)
    assert len(sc.obstacles) == 7
    pts = sc.ooi_array
    # a C opens to the right: the left column spans most of the height,
    # the top and bottom arms extend to the right of it
    left = pts[pts[:, 0] < 3.0]
    assert left[:, 1].max() - left[:, 1].min() > 4.0
    top = pts[pts[:, 1] > 6.0]
    bottom = pts[pts[:, 1] < 2.0]
    assert top[:, 0].max() > 8.0 and bottom[:, 0].max() > 8.0
    mid = pts[(pts[:, 1] > 3.0) & (pts[:, 1] < 5.0)]
    assert mid[:, 0].max() < 6.0  # no band closes the right side


@pytest.mark.parametrize("seed", [7, 1, 2, 3])
def test_disconnected_paths_two_clusters(seed):
    p = ScenarioParams()
    sc = build_scenario("disconnected_paths", seed=seed)
    assert len(sc.obstacles) == 7
    clusters = ooi_clusters(sc.ooi_array, p.gap)
    assert len(clusters) == 2
    a, b = (sc.ooi_array[c] for c in clusters)
    gap = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1]).min()
    assert gap >= p.gap


@given(st.sampled_from(["grid_world", "e_shape", "disconnected_paths"]), st.integers(0, 2**31 - 1))
def test_build_scenario_is_pure(name, seed):
    assert build_scenario(name, seed=seed) == build_scenario(name, seed=seed)


def test_scenario_roundtrip(tmp_path):
    sc = build_scenario("e_shape", seed=3)
    assert scenario_from_dict(scenario_to_dict(sc)) == sc
    save_scenario(sc, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == sc


def test_unknown_scenario_rejected():
    with pytest.raises(ValueError):
        build_scenario("maze")


def test_validate_rejects_overlap_and_buried_ooi():
    sq = ((2, 2), (4, 2), (4, 4), (2, 4))
    with pytest.raises(ValueError, match="overlap"):
        validate_scenario(open_scenario(obstacles=(sq, ((3, 3), (5, 3), (5, 5), (3, 5)))))
    with pytest.raises(ValueError, match="inside an obstacle"):
        validate_scenario(open_scenario(oois=((3.0, 3.0),), obstacles=(sq,)))
    with pytest.raises(ValueError, match="spawn"):
        validate_scenario(open_scenario(spawns=((3.0, 3.0, 0.0),), obstacles=(sq,)))


def test_self_intersecting_obstacle_rejected():
    with pytest.raises(ValueError):
        Obstacle(((0, 0), (2, 2), (2, 0), (0, 2)))


# -- conventions ------------------------------------------------------------


def test_heading_is_clockwise():
    ux, uy = heading_vector(math.pi / 2)
    assert ux == pytest.approx(0.0, abs=1e-12) and uy == pytest.approx(-1.0)
    # a point to the south of an east-facing robot is on its right
    assert bearing_to(0.0, 0.0, 0.0, 1.0, -1.0) == pytest.approx(math.pi / 4)


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_normalize_angle_range(a):
    v = normalize_angle(a)
    assert -math.pi < v <= math.pi
    assert math.isclose(math.cos(v), math.cos(a), abs_tol=1e-6)
    assert math.isclose(math.sin(v), math.sin(a), abs_tol=1e-6)


# -- clearance --------------------------------------------------------------


def test_clearance_flat_edge_and_interior():
    sc = open_scenario(obstacles=(((4, 4), (6, 4), (6, 6), (4, 6)),))
    assert clearance((7.0, 5.0), sc) == pytest.approx(1.0)
    assert clearance((5.0, 5.0), sc) < 0


def _sampled_boundary_distance(p, verts, n=100_000):
    verts = np.asarray(verts, dtype=float)
    seg = np.roll(verts, -1, axis=0) - verts
    lens = np.hypot(seg[:, 0], seg[:, 1])
    s = np.linspace(0.0, lens.sum(), n, endpoint=False)
    idx = np.searchsorted(np.cumsum(lens), s, side="right")
    t = (s - np.concatenate([[0], np.cumsum(lens)[:-1]])[idx]) / lens[idx]
    pts = verts[idx] + t[:, None] * seg[idx]
    return np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1]).min()


def test_clearance_matches_sampling_oracle_on_decagon():
    rng = np.random.default_rng(11)
    ang = np.sort(rng.uniform(0, 2 * math.pi, 10))
    rad = rng.uniform(1.0, 2.0, 10)
    verts = tuple((6 + r * math.cos(a), 4 + r * math.sin(a)) for a, r in zip(ang, rad))
    sc = open_scenario(obstacles=(verts,))
    for _ in range(20):
        p = (rng.uniform(2, 10), rng.uniform(1, 7))
        got = abs(clearance(p, sc))
        oracle = _sampled_boundary_distance(p, verts)
        # sampling overestimates by at most half the sample spacing
        assert got <= oracle + 1e-9
        assert oracle - got < 1e-4
        # the exact point-to-edge distance on the nearest sampled edge
        v = np.asarray(verts)
        w = np.roll(v, -1, axis=0)
        d = []
        for a, b in zip(v, w):
            ab = b - a
            t = np.clip(np.dot(np.asarray(p) - a, ab) / np.dot(ab, ab), 0, 1)
            d.append(np.hypot(*(a + t * ab - p)))
        assert got == pytest.approx(min(d), abs=1e-6)


# -- occupancy grid ---------------------------------------------------------


def test_grid_cell_examples():
    g = OccupancyGrid(0.5)
    assert g.visit(1.3, 2.7) == (2, 5)
    assert g.visit(0.0, 0.0) == (0, 0)
    h = OccupancyGrid(0.5)
    h.visit(0.49, 0.49)
    h.visit(0.51, 0.49)
    assert h.cells == {(0, 0), (1, 0)}
    assert h.visit_counts[(0, 0)] == 1


def test_grid_rejects_non_finite():
    with pytest.raises(ValueError):
        OccupancyGrid(0.5).visit(math.nan, 1.0)


RES = st.sampled_from([0.25, 0.5, 1.0])


@st.composite
def pose_logs(draw):
    r = draw(RES)
    # mix exact cell boundaries, the arena corners and arbitrary reals
    boundary = st.integers(0, int(12 / r)).map(lambda k: k * r)
    coord_x = st.one_of(boundary, st.floats(0.0, 12.0), st.sampled_from([0.0, 12.0]))
    coord_y = st.one_of(st.integers(0, int(8 / r)).map(lambda k: k * r), st.floats(0.0, 8.0),
                        st.sampled_from([0.0, 8.0]))
    xs = draw(st.lists(st.tuples(coord_x, coord_y), min_size=1, max_size=60))
    return r, [Pose(t, x, y, 0.0) for t, (x, y) in enumerate(xs)]


@given(pose_logs())
def test_grid_replay_matches_exact_floor(log):
    r, poses = log
    g = OccupancyGrid(r)
    sizes = []
    for p in poses:
        g = update_grid(g, p)
        sizes.append(len(g))
    oracle = {}
    for p in poses:
        c = (math.floor(Fraction(p.x) / Fraction(r)), math.floor(Fraction(p.y) / Fraction(r)))
        oracle[c] = oracle.get(c, 0) + 1
    assert g.visit_counts == oracle
    assert replay_grid(poses, r).visit_counts == oracle
    assert all(min(c) >= 0 for c in oracle)
    assert sizes == sorted(sizes)  # monotone


def test_engine_grid_equals_replay_of_trajectory(session_run):
    _, res = session_run("grid_world", 1, "semantic_fuzzy", 2, True, 600)
    for rt in res.robots:
        assert replay_grid(rt.trajectory.poses, rt.grid.resolution).visit_counts == rt.grid.visit_counts
