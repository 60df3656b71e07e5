"""Token-budgeted semantic messages, a lossy channel and policy integration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from semcover.semantics import (
    DEFAULT_GOAL,
    EXPLORATION_STATES,
    OBSTACLE_STATES,
    Goal,
    SemanticDescriptors,
)
from semcover.world import Arena, OccupancyGrid, Pose, heading_vector, normalize_angle

logger = logging.getLogger(__name__)

REGIONS = ("south_west", "south", "south_east", "west", "center", "east",
           "north_west", "north", "north_east")
COMPASS = ("east", "north-east", "north", "north-west", "west", "south-west", "south", "south-east")
SIDE_TITLE = {"left": "Left", "center": "Front", "right": "Right"}
HEADING_OFFSET = {"hard_left": -0.75, "left": -0.5, "straight": 0.0, "right": 0.5, "hard_right": 0.75}
HEADING_SIDE = {"hard_left": "left", "left": "left", "straight": "center", "right": "right", "hard_right": "right"}
INTENT_LOOKAHEAD = 2.0
POSE_QUANTUM = 0.1
THETA_QUANTUM = 0.01

Cell = tuple[int, int]


@dataclass(frozen=True)
class Intent:
    region: str | None
    goal: str

    def __post_init__(self):
        if self.region is not None and self.region not in REGIONS:
            raise ValueError(f"unknown region {self.region!r}")


@dataclass(frozen=True)
class SemanticMessage:
    robot_id: int
    round: int
    tokens: tuple[str, ...]
    pose_summary: tuple[int, int, int]
    explored_digest: tuple[tuple[int, int, int], ...]
    intent: Intent

    def to_record(self) -> dict:
        return {
            "robot_id": self.robot_id, "round": self.round, "tokens": list(self.tokens),
            "pose": list(self.pose_summary), "digest": [list(r) for r in self.explored_digest],
            "intent": {"region": self.intent.region, "goal": self.intent.goal},
        }


@dataclass(frozen=True)
class ChannelModel:
    round_period: int = 256
    token_budget: int = 6
    loss_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.round_period < 1:
            raise ValueError("round_period must be >= 1")
        if self.token_budget < 1:
            raise ValueError("token budget must be >= 1")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")


@dataclass(frozen=True)
class SharedSemanticMap:
    peer_claims: Mapping[int, tuple[str | None, int]] = field(default_factory=dict)
    peer_explored: frozenset[Cell] = frozenset()
    last_round_seen: Mapping[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class PolicyAdjustment:
    sector_bias: Mapping[str, float] = field(default_factory=dict)
    extra_visited: frozenset[Cell] = frozenset()


# --------------------------------------------------------------------------
# Digest
# --------------------------------------------------------------------------


def encode_digest(cells: Iterable[Cell]) -> tuple[tuple[int, int, int], ...]:
    """Run-length code a cell set as (row j, first i, run length) triples."""
    rows: dict[int, list[int]] = {}
    for i, j in cells:
        rows.setdefault(int(j), []).append(int(i))
    runs = []
    for j in sorted(rows):
        xs = sorted(set(rows[j]))
        start = prev = xs[0]
        for i in xs[1:]:
            if i != prev + 1:
                runs.append((j, start, prev - start + 1))
                start = i
            prev = i
        runs.append((j, start, prev - start + 1))
    return tuple(runs)


def decode_digest(runs: Iterable[Sequence[int]]) -> frozenset[Cell]:
    out = set()
    for j, i0, n in runs:
        if n < 1:
            raise ValueError(f"invalid run length {n}")
        out.update((i0 + k, j) for k in range(n))
    return frozenset(out)


# --------------------------------------------------------------------------
# Encoding
# --------------------------------------------------------------------------


def region_of(x: float, y: float, arena: Arena) -> str:
    col = min(2, max(0, int(3 * x / arena.width)))
    row = min(2, max(0, int(3 * y / arena.height)))
    return REGIONS[row * 3 + col]


def compass_of(theta: float) -> str:
    # theta is clockwise, compass angle counter-clockwise from east
    a = (-theta) % (2 * math.pi)
    return COMPASS[int(round(a / (math.pi / 4))) % 8]


def intended_heading(pose: Pose, descriptors: SemanticDescriptors) -> float | None:
    off = HEADING_OFFSET.get(descriptors.recommended_heading)
    if off is None:
        return None
    return normalize_angle(pose.theta + off)


def intent_region(pose: Pose, descriptors: SemanticDescriptors, arena: Arena) -> str | None:
    th = intended_heading(pose, descriptors)
    if th is None:
        return None
    ux, uy = heading_vector(th)
    x = min(max(pose.x + INTENT_LOOKAHEAD * ux, 0.0), arena.width)
    y = min(max(pose.y + INTENT_LOOKAHEAD * uy, 0.0), arena.height)
    return region_of(x, y, arena)


def _intent_token(pose: Pose, d: SemanticDescriptors) -> str:
    if d.recommended_heading == "rotate_in_place":
        return "Rotating in place, searching for OOIs"
    side = HEADING_SIDE[d.recommended_heading]
    k = ("left", "center", "right").index(side)
    obst = {"clear": "clear", "near": "obstructed", "blocking": "blocked"}[d.obstacle_summary[k]]
    if d.ooi_summary[k] == "dense":
        target = "OOI-dense region"
    elif d.exploration_summary[k] in ("unexplored", "partial"):
        target = "unexplored region"
    else:
        target = "explored region"
    direction = compass_of(intended_heading(pose, d))
    return f"{SIDE_TITLE[side]} area {obst}, moving {direction} toward {target}"


def message_tokens(pose: Pose, d: SemanticDescriptors) -> list[str]:
    """Intent first, then per-sector obstacle facts, then exploration facts."""
    tokens = [_intent_token(pose, d)]
    obst_word = {"clear": "area clear", "near": "obstacles near", "blocking": "area blocked"}
    expl_word = {"unexplored": "area unexplored", "partial": "area partially explored", "visited": "area explored"}
    for side, state in zip(("left", "center", "right"), d.obstacle_summary):
        tokens.append(f"{SIDE_TITLE[side]} {obst_word[state]}")
    for side, state in zip(("left", "center", "right"), d.exploration_summary):
        tokens.append(f"{SIDE_TITLE[side]} {expl_word[state]}")
    return tokens


def encode_message(descriptors: SemanticDescriptors, grid: OccupancyGrid, pose: Pose, goal: Goal = DEFAULT_GOAL,
                   budget: int = 6, *, robot_id: int = 0, round: int = 0, arena: Arena | None = None) -> SemanticMessage:
    if budget < 1:
        raise ValueError("token budget must be >= 1")
    arena = arena or Arena()
    return SemanticMessage(
        robot_id=robot_id,
        round=round,
        tokens=tuple(message_tokens(pose, descriptors)[:budget]),
        pose_summary=(int(round_half(pose.x / POSE_QUANTUM)), int(round_half(pose.y / POSE_QUANTUM)),
                      int(round_half(pose.theta / THETA_QUANTUM))),
        explored_digest=encode_digest(grid.visit_counts),
        intent=Intent(intent_region(pose, descriptors, arena), goal.name),
    )


def round_half(v: float) -> int:
    return int(math.floor(v + 0.5))


def validate_message(msg: SemanticMessage, budget: int | None = None) -> None:
    if not isinstance(msg, SemanticMessage):
        raise ValueError("not a SemanticMessage")
    if budget is not None and len(msg.tokens) > budget:
        raise ValueError("token budget exceeded")
    if not all(isinstance(t, str) for t in msg.tokens):
        raise ValueError("tokens must be strings")
    decode_digest(msg.explored_digest)
    Intent(msg.intent.region, msg.intent.goal)


# --------------------------------------------------------------------------
# Channel
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Delivery:
    sender: int
    receiver: int
    round: int
    delivered: bool


def transmit(channel: ChannelModel, messages: Sequence[SemanticMessage], round: int,
             receivers: Sequence[int] | None = None) -> tuple[dict[int, list[SemanticMessage]], list[Delivery]]:
    """Deliver each (sender, receiver) pair independently with prob 1 - loss_prob.

    The draw for a round depends only on (channel seed, round), so the channel
    stream never interacts with any other random stream.
    """
    ids = sorted(receivers if receivers is not None else {m.robot_id for m in messages})
    rng = np.random.default_rng(np.random.SeedSequence([channel.seed & 0xFFFFFFFF, 0xC0FFEE, round]))
    inbox: dict[int, list[SemanticMessage]] = {i: [] for i in ids}
    log: list[Delivery] = []
    for msg in sorted(messages, key=lambda m: m.robot_id):
        for r in ids:
            if r == msg.robot_id:
                continue
            ok = bool(rng.random() >= channel.loss_prob)
            log.append(Delivery(msg.robot_id, r, round, ok))
            if ok:
                inbox[r].append(msg)
    return inbox, log


# --------------------------------------------------------------------------
# Decoding and policy integration
# --------------------------------------------------------------------------


def decode_merge(received: Sequence[SemanticMessage], smap: SharedSemanticMap, *,
                 current_round: int | None = None, expiry_rounds: int = 3) -> SharedSemanticMap:
    claims = dict(smap.peer_claims)
    seen = dict(smap.last_round_seen)
    explored = set(smap.peer_explored)
    for msg in received:
        try:
            validate_message(msg)
        except (ValueError, TypeError, AttributeError) as exc:
            logger.warning("skipping malformed message: %s", exc)
            continue
        if msg.round >= seen.get(msg.robot_id, -1):
            seen[msg.robot_id] = msg.round
            claims[msg.robot_id] = (msg.intent.region, msg.round)
        explored |= decode_digest(msg.explored_digest)
    if current_round is not None:
        for rid in [r for r, (_, rnd) in claims.items() if current_round - rnd > expiry_rounds]:
            del claims[rid]
    return SharedSemanticMap(claims, frozenset(explored), seen)


def resolve_claims(claims: Mapping[int, tuple[str | None, int]]) -> dict[str, int]:
    """Region -> holder.  Same-round conflicts go to the lower robot id; otherwise the newest claim."""
    holder: dict[str, tuple[int, int]] = {}
    for rid in sorted(claims):
        region, rnd = claims[rid]
        if region is None:
            continue
        cur = holder.get(region)
        if cur is None or rnd > cur[1] or (rnd == cur[1] and rid < cur[0]):
            holder[region] = (rid, rnd)
    return {reg: rid for reg, (rid, _) in holder.items()}


def integrate_policy(local: SemanticDescriptors | None, smap: SharedSemanticMap, self_id: int, *,
                     own_claim: tuple[str | None, int] | None = None, p_claim: float = 1.5) -> PolicyAdjustment:
    """Penalize regions held by peers and overlay their explored cells.

    A region both robots claimed in the same round stays with the lower id, so
    only the higher-id robot is pushed away from it.
    """
    claims = dict(smap.peer_claims)
    claims.pop(self_id, None)
    if own_claim is not None:
        claims[self_id] = own_claim
    holders = resolve_claims(claims)
    bias = {}
    for rid, (region, _) in claims.items():
        if rid == self_id or region is None:
            continue
        if holders.get(region) == self_id:
            continue
        bias[region] = p_claim
    return PolicyAdjustment(bias, frozenset(smap.peer_explored))
