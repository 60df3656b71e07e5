"""Closed-loop multi-robot executor.

Each step: every robot (in id order) applies one gait sub-step and marks its
grid.  At gait phase 0 the controller may issue a new (delta, phi): the
semantic-fuzzy controller queries its backend on every ``query_every``-th
cycle and holds the command in between; the baselines steer every cycle.
Communication rounds run as a barrier every ``round_period`` steps.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from semcover import fuzzy
from semcover._rng import substream
from semcover.baselines import BbController, BcdController, default_bb_walk
from semcover.comms import (
    ChannelModel,
    PolicyAdjustment,
    SharedSemanticMap,
    decode_merge,
    encode_message,
    integrate_policy,
    region_of,
    transmit,
)
from semcover.gait import GaitParams, GaitSequence, apply_step, generate_gait
from semcover.metrics import MetricsReport, TrajectoryLog, evaluate
from semcover.semantics import (
    GOALS,
    RECOVERY_LABELS,
    FallbackCounter,
    FuzzyLabelSet,
    HeuristicBackend,
    RemoteBackend,
    SemanticDescriptors,
    assemble_prompt,
    continuity_guard,
    encode_features,
    infer_semantics,
    is_search,
    render_proto_prompt,
)
from semcover.sensing import SensorConfig, sense
from semcover.world import OccupancyGrid, Pose, Scenario, heading_vector

logger = logging.getLogger(__name__)

CONTROLLERS = ("semantic_fuzzy", "bcd", "bb")
SECTOR_OFFSETS = (-0.5, 0.0, 0.5)
PENALTY_LOOKAHEAD = 2.0


@dataclass(frozen=True)
class SimConfig:
    timestep_ms: int = 256
    query_every: int = 4
    n_robots: int = 2
    max_steps: int = 3000
    seed: int = 0
    controller: str = "semantic_fuzzy"
    comms_enabled: bool = True
    comms: ChannelModel = ChannelModel()
    gait: GaitParams = GaitParams()
    sensor: SensorConfig = SensorConfig()
    grid_resolution: float = 0.5
    goal: str = "maximize_coverage"
    backend: str = "heuristic"
    llm_endpoint: str | None = None
    llm_timeout: float = 2.0
    p_claim: float = 1.5
    bcd_spacing: float = 1.4
    bb_sigma: float = 0.3
    # spawn slots to use; defaults to 0..n_robots-1.  A single-robot run of
    # slot k reproduces robot k of an isolated multi-robot run.
    robot_ids: tuple[int, ...] | None = None
    log_gait: bool = True

    def __post_init__(self):
        for name in ("timestep_ms", "query_every", "n_robots"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        if self.goal not in GOALS:
            raise ValueError(f"unknown goal {self.goal!r}")
        if self.backend not in ("heuristic", "remote"):
            raise ValueError("backend must be 'heuristic' or 'remote'")
        if self.backend == "remote" and not self.llm_endpoint:
            raise ValueError("remote backend needs an endpoint")
        if self.robot_ids is not None:
            ids = tuple(int(i) for i in self.robot_ids)
            if len(ids) != self.n_robots or len(set(ids)) != len(ids) or min(ids) < 0:
                raise ValueError("robot_ids must list n_robots distinct non-negative slots")
            object.__setattr__(self, "robot_ids", ids)

    @property
    def ids(self) -> tuple[int, ...]:
        return self.robot_ids if self.robot_ids is not None else tuple(range(self.n_robots))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["robot_ids"] = None if self.robot_ids is None else list(self.robot_ids)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "comms" in d and isinstance(d["comms"], dict):
            d["comms"] = ChannelModel(**d["comms"])
        if "gait" in d and isinstance(d["gait"], dict):
            d["gait"] = GaitParams(**d["gait"])
        if "sensor" in d and isinstance(d["sensor"], dict):
            d["sensor"] = SensorConfig(**d["sensor"])
        if d.get("robot_ids") is not None:
            d["robot_ids"] = tuple(d["robot_ids"])
        return cls(**d)


@dataclass
class RobotRuntime:
    id: int
    pose: Pose
    grid: OccupancyGrid
    gait_phase: int = 0
    current_gait: GaitSequence | None = None
    last_labels: FuzzyLabelSet | None = None
    last_descriptors: SemanticDescriptors | None = None
    policy_adj: PolicyAdjustment = field(default_factory=PolicyAdjustment)
    recovery_active: bool = False
    shared: SharedSemanticMap = field(default_factory=SharedSemanticMap)
    command: tuple[float, float] = (0.0, 0.0)
    cycles: int = 0
    exempt_next: bool = True
    search_streak: int = 0
    controller: Any = None
    noise_rng: np.random.Generator | None = None
    trajectory: TrajectoryLog = field(default_factory=TrajectoryLog)


@dataclass
class RunResult:
    config: SimConfig
    trajectories: list[TrajectoryLog]
    report: MetricsReport
    events: list[dict]
    fallbacks: int
    robots: list[RobotRuntime]

    def event_log(self) -> str:
        return events_to_text(self.events)

    def robot_reports(self, scenario: Scenario) -> list[MetricsReport]:
        return [evaluate([t], scenario, r=self.config.grid_resolution) for t in self.trajectories]


def events_to_text(events: list[dict]) -> str:
    return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in events)


def recovery_controller(runtime: RobotRuntime) -> FuzzyLabelSet:
    """Labels for the in-place search spin while no OOI is in view."""
    return RECOVERY_LABELS


def _backend(config: SimConfig):
    if config.backend == "remote":
        return RemoteBackend(config.llm_endpoint, timeout=config.llm_timeout)
    return HeuristicBackend()


def sector_penalties(pose: Pose, adj: PolicyAdjustment, scenario: Scenario) -> tuple[float, float, float]:
    """Map region penalties onto the robot's left/center/right look-ahead points."""
    if not adj.sector_bias:
        return (0.0, 0.0, 0.0)
    out = []
    a = scenario.arena
    for off in SECTOR_OFFSETS:
        ux, uy = heading_vector(pose.theta + off)
        x = min(max(pose.x + PENALTY_LOOKAHEAD * ux, 0.0), a.width)
        y = min(max(pose.y + PENALTY_LOOKAHEAD * uy, 0.0), a.height)
        out.append(float(adj.sector_bias.get(region_of(x, y, a), 0.0)))
    return tuple(out)


def _init_robots(config: SimConfig, scenario: Scenario) -> list[RobotRuntime]:
    ids = config.ids
    if max(ids) >= len(scenario.spawn_poses):
        raise ValueError(f"scenario {scenario.name!r} has {len(scenario.spawn_poses)} spawn poses; "
                         f"robot slots {ids} requested")
    robots = []
    for rid in ids:
        pose = scenario.spawn_poses[rid]
        if not scenario.is_free(pose.x, pose.y):
            raise ValueError(f"spawn pose of robot {rid} is not collision-free")
        pose = replace(pose, t=0)
        rt = RobotRuntime(rid, pose, OccupancyGrid(config.grid_resolution))
        rt.noise_rng = substream(config.seed, f"noise/{rid}")
        budget = config.max_steps / config.gait.N * config.gait.c_d * config.gait.A0
        if config.controller == "bcd":
            rt.controller = BcdController(scenario, pose, config.bcd_spacing, config.gait)
        elif config.controller == "bb":
            walk = default_bb_walk(scenario, pose, config.seed, max(budget, 1e-3), config.bb_sigma, config.gait)
            rt.controller = BbController(walk, substream(config.seed, f"bb/{rid}"), config.gait)
        rt.trajectory = TrajectoryLog(rid, [pose])
        rt.grid.visit(pose.x, pose.y)
        robots.append(rt)
    return robots


class Engine:
    """Holds the state of one run; ``run`` drives it to ``max_steps``."""

    def __init__(self, config: SimConfig, scenario: Scenario):
        self.config = config
        self.scenario = scenario
        self.robots = _init_robots(config, scenario)
        self.backend = _backend(config)
        self.counter = FallbackCounter()
        self.events: list[dict] = []
        self.round = 0
        self.goal = GOALS[config.goal]
        self.t = 0

    # -- semantic controller -------------------------------------------------

    def _query(self, rt: RobotRuntime) -> None:
        cfg = self.config
        overlay = rt.grid.merged(rt.policy_adj.extra_visited) if rt.policy_adj.extra_visited else rt.grid
        bundle = sense(self.scenario, rt.pose, overlay, cfg.sensor, rt.noise_rng if cfg.sensor.noise else None)
        z = encode_features(bundle, overlay, rt.last_descriptors, scenario=self.scenario,
                            previous_labels=None if rt.exempt_next or rt.recovery_active else rt.last_labels,
                            sector_penalty=sector_penalties(rt.pose, rt.policy_adj, self.scenario),
                            search_streak=rt.search_streak)
        stale_only = bool(bundle.view.detections) and not z.fresh_targets
        searching = stale_only and is_search(z)
        rt.search_streak = rt.search_streak + 1 if stale_only else 0
        proto = render_proto_prompt(z)
        prompt = assemble_prompt(proto, bundle, overlay, rt.last_descriptors, self.goal)
        if not bundle.view.detections:
            desc, _ = infer_semantics(prompt, HeuristicBackend())
            labels = recovery_controller(rt)
            if not rt.recovery_active:
                self._log({"type": "recovery", "robot": rt.id, "phase": "start"})
            rt.recovery_active = True
            rt.exempt_next = True
        else:
            before = self.counter.count
            desc, raw = infer_semantics(prompt, self.backend, self.counter)
            if self.counter.count > before:
                self._log({"type": "fallback", "robot": rt.id})
            if rt.recovery_active:
                self._log({"type": "recovery", "robot": rt.id, "phase": "end"})
                rt.recovery_active = False
                previous = None
            else:
                previous = None if rt.exempt_next else rt.last_labels
            rt.exempt_next = False
            labels = continuity_guard(raw, previous)
            if labels != raw:
                self._log({"type": "clamp", "robot": rt.id, "raw": raw.as_dict(), "labels": labels.as_dict()})
        out = fuzzy.evaluate(labels)
        rt.last_labels, rt.last_descriptors = labels, desc
        rt.command = (out.delta, out.phi)
        self._log({"type": "query", "robot": rt.id, "labels": labels.as_dict(), "heading": desc.recommended_heading,
                   "detections": len(bundle.view.detections), "delta": out.delta, "phi": out.phi,
                   "recovery": rt.recovery_active, "search": searching})

    # -- stepping ------------------------------------------------------------

    def _cycle_start(self, rt: RobotRuntime) -> None:
        cfg = self.config
        if cfg.controller == "semantic_fuzzy":
            if rt.cycles % cfg.query_every == 0:
                self._query(rt)
        else:
            rt.command = rt.controller.command(rt.pose)
        rt.current_gait = generate_gait(rt.command[0], rt.command[1], cfg.gait)
        rt.cycles += 1

    def _step_robot(self, rt: RobotRuntime) -> None:
        cfg = self.config
        if rt.gait_phase == 0:
            self._cycle_start(rt)
        delta, phi = rt.command
        pose, blocked = apply_step(rt.pose, delta, phi, cfg.gait, self.scenario)
        if blocked:
            self._log({"type": "truncate", "robot": rt.id})
        rec = {"type": "step", "robot": rt.id, "phase": rt.gait_phase,
               "x": pose.x, "y": pose.y, "theta": pose.theta}
        if cfg.log_gait:
            rec["gait"] = [float(v) for v in rt.current_gait.steps[rt.gait_phase]]
        self._log(rec, t=pose.t)
        rt.pose = pose
        rt.grid.visit(pose.x, pose.y)
        rt.trajectory.poses.append(pose)
        rt.gait_phase = (rt.gait_phase + 1) % cfg.gait.N

    def _comms_round(self) -> None:
        cfg = self.config
        self.round += 1
        msgs = []
        for rt in self.robots:
            if rt.last_descriptors is None:
                continue
            msgs.append(encode_message(rt.last_descriptors, rt.grid, rt.pose, self.goal, cfg.comms.token_budget,
                                       robot_id=rt.id, round=self.round, arena=self.scenario.arena))
        for m in msgs:
            self._log({"type": "message", **m.to_record()})
        inbox, deliveries = transmit(cfg.comms, msgs, self.round, [rt.id for rt in self.robots])
        for d in deliveries:
            self._log({"type": "delivery", "sender": d.sender, "receiver": d.receiver, "round": d.round,
                       "delivered": d.delivered})
        by_id = {m.robot_id: m for m in msgs}
        for rt in self.robots:
            rt.shared = decode_merge(inbox[rt.id], rt.shared, current_round=self.round)
            own = by_id.get(rt.id)
            claim = None if own is None else (own.intent.region, self.round)
            rt.policy_adj = integrate_policy(rt.last_descriptors, rt.shared, rt.id, own_claim=claim,
                                             p_claim=cfg.p_claim)

    def step_all(self) -> None:
        """One engine timestep: comms barrier (if due), then robots in id order."""
        cfg = self.config
        if (cfg.controller == "semantic_fuzzy" and cfg.comms_enabled and len(self.robots) > 1
                and self.t > 0 and self.t % cfg.comms.round_period == 0):
            self._comms_round()
        for rt in self.robots:
            self._step_robot(rt)
        self.t += 1

    def _log(self, rec: dict, t: int | None = None) -> None:
        rec = {"t": self.t if t is None else t, **rec}
        self.events.append(rec)

    def run(self) -> RunResult:
        self._log({"type": "start", "scenario": self.scenario.name, "seed": self.config.seed,
                   "controller": self.config.controller, "robots": list(self.config.ids)})
        for _ in range(self.config.max_steps):
            self.step_all()
        trajs = [rt.trajectory for rt in self.robots]
        if self.config.max_steps == 0:
            trajs = [TrajectoryLog(rt.id, []) for rt in self.robots]
        report = evaluate(trajs, self.scenario, r=self.config.grid_resolution)
        self._log({"type": "end", "fallbacks": self.counter.count})
        return RunResult(self.config, trajs, report, self.events, self.counter.count, self.robots)


def run(config: SimConfig, scenario: Scenario) -> RunResult:
    return Engine(config, scenario).run()


def step_all(engine: Engine) -> Engine:
    engine.step_all()
    return engine


def check_safety(result: RunResult, scenario: Scenario, tol: float = 1e-9) -> tuple[int, int]:
    """(obstacle penetrations, out-of-bounds poses) over all logged poses."""
    pen = oob = 0
    r = scenario.robot_radius
    for tr in result.trajectories:
        for p in tr.poses:
            if not scenario.arena.contains(p.x, p.y, margin=r - tol):
                oob += 1
            elif not scenario.is_free(p.x, p.y, r - tol):
                pen += 1
    return pen, oob


def visited_cells(traj: TrajectoryLog, resolution: float = 0.5) -> set:
    return {(math.floor(p.x / resolution), math.floor(p.y / resolution)) for p in traj.poses}
