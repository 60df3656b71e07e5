"""Semantic abstraction: observation -> features -> proto-prompt -> prompt -> labels.

The default :class:`HeuristicBackend` stands in for the language model with a
fixed, documented decision table (see ``docs/heuristic_backend.md``).  The
:class:`RemoteBackend` posts the rendered prompt to an HTTP endpoint and falls
back to the heuristic on any failure.
"""
from __future__ import annotations

import json
import logging
import math
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Mapping, Protocol

from semcover.fuzzy import DELTA_TABLE, FORCE_TERMS, PHI_TABLE, SIGNED_TERMS, FuzzyLabelSet, RuleTable
from semcover.sensing import (
    SECTORS,
    ObservationBundle,
    SectorStats,
    free_cell_count,
    is_fresh,
    sector_of,
    summarize,
)
from semcover.world import OccupancyGrid, Scenario, heading_vector

logger = logging.getLogger(__name__)

HEURISTIC_TABLE_VERSION = "2"

OBSTACLE_STATES = ("clear", "near", "blocking")
OOI_STATES = ("none", "sparse", "dense")
EXPLORATION_STATES = ("visited", "partial", "unexplored")
HEADINGS = ("hard_left", "left", "straight", "right", "hard_right", "rotate_in_place")

# decision-table thresholds
NEAR_DISTANCE = 1.2
BLOCK_DISTANCE = 0.6
DENSE_COUNT = 3
UNEXPLORED_LEVEL = 0.66
PARTIAL_LEVEL = 0.2

# sector scoring weights
W_FRESH = 3.0
W_STALE = -0.5
W_UNEXPLORED = {"maximize_coverage": 1.0, "minimize_revisit": 2.0}
NEAR_PENALTY = 1.0
CENTER_BONUS = 0.3

# an OOI counts as fresh while no visited cell centre lies this close to it
FRESH_RADIUS = 0.75
# target bearing bands (rad) for straight / soft turn / hard turn; one held
# soft turn rotates about 0.8 rad, so smaller errors are left alone
STRAIGHT_BAND = 0.4
SOFT_BAND = 1.0
AIM_TARGETS = 3
# straight-ahead corridor (half width, look-ahead) that must stay clear
CORRIDOR_HALF_WIDTH = 0.35
CORRIDOR_LOOKAHEAD = 0.8
# queries spent sweeping for fresh OOIs before falling back to exploration
SEARCH_LIMIT = 4
SECTOR_CENTRE = {"left": -0.5, "center": 0.0, "right": 0.5}

MOMENT_FOR_HEADING = {
    "hard_left": "NB", "left": "NM", "straight": "ZO",
    "right": "PM", "hard_right": "PB", "rotate_in_place": "PB",
}
RECOVERY_LABELS = FuzzyLabelSet("PB", "ZO", "ZO", "ZO")

SIDE_WORD = {"left": "left", "center": "front", "right": "right"}


@dataclass(frozen=True)
class Goal:
    name: str
    objective: str


GOALS = {
    "maximize_coverage": Goal("maximize_coverage", "Maximize coverage of OOI-rich regions while avoiding obstacles."),
    "minimize_revisit": Goal("minimize_revisit", "Minimize re-visitation of already explored cells."),
}
DEFAULT_GOAL = GOALS["maximize_coverage"]


@dataclass(frozen=True)
class LatentFeatures:
    sector_stats: SectorStats
    min_obstacle_distance: float
    heading: float
    visited_fraction_global: float
    previous_labels: FuzzyLabelSet | None = None
    previous_heading: str | None = None
    # comms-derived penalty per left/center/right sector
    sector_penalty: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # (bearing, range) of detections not yet passed near
    fresh_targets: tuple[tuple[float, float], ...] = ()
    # consecutive earlier queries that saw detections but no fresh one
    search_streak: int = 0
    # (bearing, range) of the nearest radar return inside the straight-ahead corridor
    path_obstacle: tuple[float, float] | None = None

    def __post_init__(self):
        vals = [self.min_obstacle_distance, self.heading, self.visited_fraction_global, *self.sector_penalty]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("latent features must be finite")
        if not 0.0 <= self.visited_fraction_global <= 1.0:
            raise ValueError("visited fraction outside [0, 1]")


@dataclass(frozen=True)
class SemanticDescriptors:
    obstacle_summary: tuple[str, str, str]
    ooi_summary: tuple[str, str, str]
    exploration_summary: tuple[str, str, str]
    recommended_heading: str

    def __post_init__(self):
        for vals, allowed in ((self.obstacle_summary, OBSTACLE_STATES), (self.ooi_summary, OOI_STATES),
                              (self.exploration_summary, EXPLORATION_STATES)):
            if len(vals) != 3 or any(v not in allowed for v in vals):
                raise ValueError(f"descriptor values {vals} not drawn from {allowed}")
        if self.recommended_heading not in HEADINGS:
            raise ValueError(f"unknown heading {self.recommended_heading!r}")
        if self.recommended_heading == "rotate_in_place" and any(v != "none" for v in self.ooi_summary):
            raise ValueError("rotate_in_place requires no OOIs in any sector")

    def as_dict(self) -> dict:
        return {
            "obstacle": dict(zip(SECTORS, self.obstacle_summary)),
            "ooi": dict(zip(SECTORS, self.ooi_summary)),
            "exploration": dict(zip(SECTORS, self.exploration_summary)),
            "heading": self.recommended_heading,
        }


@dataclass(frozen=True)
class ProtoPrompt:
    sentences: tuple[str, ...]
    features: LatentFeatures | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("proto-prompt cannot be empty")

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


@dataclass(frozen=True)
class StructuredPrompt:
    proto: ProtoPrompt
    grounding_digest: str
    continuity_ref: SemanticDescriptors | None
    goal: Goal

    @property
    def features(self) -> LatentFeatures | None:
        return self.proto.features

    def render(self) -> str:
        cont = "none" if self.continuity_ref is None else _descriptor_line(self.continuity_ref)
        return "\n".join([
            "Proto-prompt:",
            "  " + self.proto.text,
            "Environmental grounding:",
            self.grounding_digest,
            "Behavioral continuity:",
            f"  previous: {cont}",
            "  Change each label by at most one step from the previous answer.",
            "Goal alignment:",
            f"  {self.goal.objective}",
            "Answer with a JSON object with keys moment, moment_change, force_change in "
            f"{{{','.join(SIGNED_TERMS)}}} and force in {{{','.join(FORCE_TERMS)}}}.",
        ])


def _descriptor_line(d: SemanticDescriptors) -> str:
    return (f"obstacle={'/'.join(d.obstacle_summary)} ooi={'/'.join(d.ooi_summary)} "
            f"exploration={'/'.join(d.exploration_summary)} heading={d.recommended_heading}")


# --------------------------------------------------------------------------
# Pipeline stages
# --------------------------------------------------------------------------


def encode_features(bundle: ObservationBundle, grid: OccupancyGrid, prev: SemanticDescriptors | None = None, *,
                    scenario: Scenario | None = None, previous_labels: FuzzyLabelSet | None = None,
                    sector_penalty: tuple[float, float, float] = (0.0, 0.0, 0.0),
                    search_streak: int = 0) -> LatentFeatures:
    stats = summarize(bundle.view, bundle.radar, grid, bundle.pose, scenario, FRESH_RADIUS)
    p = bundle.pose
    targets = []
    for d in bundle.view.detections:
        ux, uy = heading_vector(p.theta + d.bearing)
        if is_fresh(grid, p.x + d.range * ux, p.y + d.range * uy, FRESH_RADIUS):
            targets.append((float(d.bearing), float(d.range)))
    path_obstacle = corridor_obstacle(bundle.radar.ray_bearings, bundle.radar.ray_ranges)
    if scenario is not None:
        visited = min(1.0, len(grid) / max(1, free_cell_count(scenario, grid.resolution)))
    else:
        visited = 0.0 if len(grid) == 0 else 1.0
    return LatentFeatures(
        sector_stats=stats,
        min_obstacle_distance=min(bundle.radar.occupied_sectors),
        heading=bundle.pose.theta,
        visited_fraction_global=visited,
        previous_labels=previous_labels,
        previous_heading=None if prev is None else prev.recommended_heading,
        sector_penalty=tuple(float(v) for v in sector_penalty),
        fresh_targets=tuple(sorted(targets, key=lambda t: (t[1], t[0]))),
        search_streak=int(search_streak),
        path_obstacle=path_obstacle,
    )


def corridor_obstacle(bearings, ranges, half_width: float = CORRIDOR_HALF_WIDTH,
                      lookahead: float = CORRIDOR_LOOKAHEAD) -> tuple[float, float] | None:
    """Nearest return whose point lies in the forward corridor, or None."""
    best = None
    for b, r in zip(bearings, ranges):
        ahead, lateral = r * math.cos(b), r * math.sin(b)
        if 0.0 < ahead <= lookahead and abs(lateral) <= half_width and (best is None or r < best[1]):
            best = (float(b), float(r))
    return best


def _obstacle_state(d: float) -> str:
    if d < BLOCK_DISTANCE:
        return "blocking"
    if d < NEAR_DISTANCE:
        return "near"
    return "clear"


def _ooi_state(n: int) -> str:
    if n == 0:
        return "none"
    return "dense" if n >= DENSE_COUNT else "sparse"


def _exploration_state(u: float) -> str:
    if u >= UNEXPLORED_LEVEL:
        return "unexplored"
    return "partial" if u >= PARTIAL_LEVEL else "visited"


def _join(words: list[str]) -> str:
    if len(words) == 1:
        return words[0]
    return ", ".join(words[:-1]) + " and " + words[-1]


def render_proto_prompt(z: LatentFeatures) -> ProtoPrompt:
    s = z.sector_stats
    obst = [_obstacle_state(d) for d in s.obstacles()]
    ooi = [_ooi_state(n) for n in s.counts()]
    expl = [_exploration_state(u) for u in s.unexplored()]
    front = {"unexplored": "Front area unexplored", "partial": "Front area partially explored",
             "visited": "Front area explored"}[expl[1]]
    blocking = [SIDE_WORD[sec] for sec, o in zip(SECTORS, obst) if o == "blocking"]
    near = [SIDE_WORD[sec] for sec, o in zip(SECTORS, obst) if o == "near"]
    parts = []
    if blocking:
        parts.append(f"dense obstacles on the {_join(blocking)}")
    if near:
        parts.append(f"obstacles near the {_join(near)}")
    sentences = [f"{front}; {'; '.join(parts) if parts else 'no obstacles detected'}."]

    dense = [SIDE_WORD[sec] for sec, o in zip(SECTORS, ooi) if o == "dense"]
    sparse = [SIDE_WORD[sec] for sec, o in zip(SECTORS, ooi) if o == "sparse"]
    if not dense and not sparse:
        sentences.append("No OOIs in view.")
    else:
        bits = []
        if dense:
            bits.append(f"OOIs dense on the {_join(dense)}")
        if sparse:
            bits.append(f"OOIs sparse on the {_join(sparse)}")
        sentences.append("; ".join(bits) + ".")
    word = {"unexplored": "unexplored", "partial": "partially explored", "visited": "explored"}
    sentences.append(f"Left area {word[expl[0]]}; right area {word[expl[2]]}.")
    sentences.append(f"Global coverage {100.0 * z.visited_fraction_global:.0f}%.")
    return ProtoPrompt(tuple(sentences), z)


def assemble_prompt(proto: ProtoPrompt, bundle: ObservationBundle, grid: OccupancyGrid,
                    prev: SemanticDescriptors | None, goal: Goal = DEFAULT_GOAL) -> StructuredPrompt:
    p = bundle.pose
    dets = "; ".join(f"{d.ooi_id}@{d.bearing:+.3f}rad/{d.range:.2f}m" for d in bundle.view.detections) or "none"
    radar = " ".join(f"{d:.2f}" for d in bundle.radar.occupied_sectors)
    digest = "\n".join([
        f"  pose: x={p.x:.2f} y={p.y:.2f} theta={p.theta:+.3f}",
        f"  occupancy: {len(grid)} visited cells at {grid.resolution:g} m",
        f"  detections: {dets}",
        f"  radar: {radar}",
    ])
    return StructuredPrompt(proto, digest, prev, goal)


# --------------------------------------------------------------------------
# Backends
# --------------------------------------------------------------------------


def sector_scores(z: LatentFeatures, goal: Goal = DEFAULT_GOAL) -> list[float]:
    s = z.sector_stats
    w_unexp = W_UNEXPLORED.get(goal.name, 2.0)
    scores = []
    for k, (n, f, d, u) in enumerate(zip(s.counts(), s.fresh(), s.obstacles(), s.unexplored())):
        state = _obstacle_state(d)
        if state == "blocking":
            scores.append(-math.inf)
            continue
        v = W_FRESH * f + W_STALE * (n - f) + w_unexp * u - z.sector_penalty[k]
        if state == "near":
            v -= NEAR_PENALTY
        if k == 1:
            v += CENTER_BONUS
        scores.append(v)
    return scores


def choose_pair(table: RuleTable, outs: tuple[str, ...], desired: str, previous: tuple[str, str] | None,
                preferred_row: str) -> tuple[str, str]:
    """Antecedent pair whose rule fires ``desired`` and that the continuity guard accepts.

    Candidates lie within one ordinal step of ``previous`` (any pair when it is
    None).  Ties prefer the consequent closest to ``desired``, then the row
    closest to ``preferred_row``, then the column that matches the ordinal
    change from the previous row.
    """
    rows, cols = table.row_terms, table.col_terms
    if previous is None:
        cand_r, cand_c = range(len(rows)), range(len(cols))
        pr = None
    else:
        pr, pc = rows.index(previous[0]), cols.index(previous[1])
        cand_r = range(max(0, pr - 1), min(len(rows), pr + 2))
        cand_c = range(max(0, pc - 1), min(len(cols), pc + 2))
    want, pref = outs.index(desired), rows.index(preferred_row)
    mid = len(cols) // 2
    best = None
    for i in cand_r:
        change = mid if pr is None else mid + max(-mid, min(mid, i - pr))
        for j in cand_c:
            key = (abs(outs.index(table.lookup(rows[i], cols[j])) - want), abs(i - pref), abs(j - change), i, j)
            if best is None or key < best:
                best = key
    return rows[best[3]], cols[best[4]]


def _aim(z: LatentFeatures, sector: str, fov: float = 1.5) -> float:
    """Mean bearing of the nearest fresh detections in ``sector`` (sector centre if none)."""
    pts = [b for b, _ in z.fresh_targets if sector_of(b, fov) == sector][:AIM_TARGETS]
    return sum(pts) / len(pts) if pts else SECTOR_CENTRE[sector]


def is_search(z: LatentFeatures) -> bool:
    """Detections exist but all are covered: the heuristic sweeps in place."""
    s = z.sector_stats
    return (sum(s.counts()) > 0 and not z.fresh_targets and z.search_streak < SEARCH_LIMIT
            and _obstacle_state(s.nearest_obstacle_center) != "blocking")


def decide(z: LatentFeatures, goal: Goal = DEFAULT_GOAL) -> tuple[SemanticDescriptors, FuzzyLabelSet]:
    """The heuristic decision table.

    1. No detection at all: rotate in place (recovery labels).  Detections
       that are all already covered trigger the same sweep, reported as a
       hard right turn, for at most SEARCH_LIMIT consecutive queries.
    2. Score the three sectors (fresh OOIs, unexplored cells, obstacle and
       comms penalties) and pick the best one.
    3. Aim at the nearest fresh OOIs in that sector; the bearing error picks
       straight / soft / hard turn.  An obstructed front forces a turn to the
       clearer side.
    4. Pick (moment, moment_change) and (force, force_change) pairs that fire
       the wanted Table 1 consequent within one step of the previous labels.
    """
    s = z.sector_stats
    obst = tuple(_obstacle_state(d) for d in s.obstacles())
    ooi = tuple(_ooi_state(n) for n in s.counts())
    expl = tuple(_exploration_state(u) for u in s.unexplored())
    prev = z.previous_labels

    if sum(s.counts()) == 0:
        desc = SemanticDescriptors(obst, ooi, expl, "rotate_in_place")
        return desc, RECOVERY_LABELS

    scores = sector_scores(z, goal)
    if is_search(z):
        # everything in view is already covered: sweep round in place to search
        desc = SemanticDescriptors(obst, ooi, expl, "hard_right")
        return desc, _search_labels(prev)
    if all(v == -math.inf for v in scores):
        heading = "hard_left" if s.nearest_obstacle_left >= s.nearest_obstacle_right else "hard_right"
    else:
        best = max(range(3), key=lambda k: (scores[k], k == 1))
        err = _aim(z, SECTORS[best])
        if best != 1 and math.isclose(scores[0], scores[2]):
            # equally attractive flanks: split the difference
            err = (_aim(z, "left") + _aim(z, "right")) / 2.0
        side = "right" if err > 0 else "left"
        if abs(err) < STRAIGHT_BAND:
            heading = "straight"
        elif abs(err) < SOFT_BAND:
            heading = side
        else:
            heading = "hard_" + side
        if heading == "straight" and obst[1] != "clear":
            side = "left" if s.nearest_obstacle_left >= s.nearest_obstacle_right else "right"
            heading = ("hard_" + side) if obst[1] == "blocking" else side
        if z.path_obstacle is not None:
            # something sits in the swept corridor: never hold course into it
            b, r = z.path_obstacle
            if abs(b) < 1e-9:
                away = "left" if s.nearest_obstacle_left >= s.nearest_obstacle_right else "right"
            else:
                away = "right" if b < 0 else "left"
            toward = "left" if away == "right" else "right"
            if heading in ("straight", toward, "hard_" + toward):
                heading = ("hard_" + away) if r < BLOCK_DISTANCE else away

    delta_want = {"hard_left": "NB", "left": "NM", "straight": "ZO", "right": "PM", "hard_right": "PB"}[heading]
    if obst[1] == "blocking":
        phi_want = "ZO"
    elif heading.startswith("hard_") or obst[1] == "near" or z.path_obstacle is not None:
        phi_want = "PS"
    elif heading != "straight":
        phi_want = "PM"
    else:
        phi_want = "PB"
    moment, moment_change = choose_pair(DELTA_TABLE, SIGNED_TERMS, delta_want,
                                        None if prev is None else (prev.moment, prev.moment_change),
                                        MOMENT_FOR_HEADING[heading])
    force, force_change = choose_pair(PHI_TABLE, FORCE_TERMS, phi_want,
                                      None if prev is None else (prev.force, prev.force_change), phi_want)
    labels = FuzzyLabelSet(moment, moment_change, force, force_change)
    return SemanticDescriptors(obst, ooi, expl, heading), labels


def _search_labels(prev: FuzzyLabelSet | None) -> FuzzyLabelSet:
    """Recovery labels, or the closest guard-compatible pair firing the same consequents."""
    if prev is None:
        return RECOVERY_LABELS
    moment, moment_change = choose_pair(DELTA_TABLE, SIGNED_TERMS, "PB", (prev.moment, prev.moment_change), "PB")
    force, force_change = choose_pair(PHI_TABLE, FORCE_TERMS, "ZO", (prev.force, prev.force_change), "ZO")
    return FuzzyLabelSet(moment, moment_change, force, force_change)


class SemanticBackend(Protocol):
    name: str

    def infer(self, prompt: StructuredPrompt) -> tuple[SemanticDescriptors, FuzzyLabelSet]: ...


class HeuristicBackend:
    name = "heuristic"

    def infer(self, prompt: StructuredPrompt) -> tuple[SemanticDescriptors, FuzzyLabelSet]:
        if prompt.features is None:
            raise ValueError("heuristic backend needs the prompt's latent features")
        return decide(prompt.features, prompt.goal)


class BackendError(RuntimeError):
    pass


def parse_label_response(payload: Mapping) -> FuzzyLabelSet:
    """Validate a remote response; labels may sit at top level or under ``labels``."""
    body = payload.get("labels", payload) if isinstance(payload, Mapping) else None
    if not isinstance(body, Mapping):
        raise BackendError("response is not a JSON object")
    try:
        return FuzzyLabelSet.from_mapping(body)
    except (KeyError, ValueError) as exc:
        raise BackendError(f"malformed label response: {exc}") from exc


class RemoteBackend:
    """Blocking JSON-over-HTTP client for a hosted model.

    Request body: ``{"model", "prompt", "temperature", "max_tokens"}``.
    The response must be a JSON object holding the four labels.  The API key is
    read from the environment variable named by ``api_key_env``.
    """

    name = "remote"

    def __init__(self, endpoint: str, model: str = "gpt-4o", temperature: float = 0.1,
                 max_tokens: int = 300, timeout: float = 2.0, api_key_env: str = "SEMCOVER_API_KEY"):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.api_key_env = api_key_env

    def request_body(self, prompt: StructuredPrompt) -> dict:
        return {"model": self.model, "prompt": prompt.render(),
                "temperature": self.temperature, "max_tokens": self.max_tokens}

    def infer(self, prompt: StructuredPrompt) -> tuple[SemanticDescriptors, FuzzyLabelSet]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        req = urllib.request.Request(self.endpoint, data=json.dumps(self.request_body(prompt)).encode(),
                                     headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode())
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise BackendError(f"remote backend failed: {exc}") from exc
        labels = parse_label_response(payload)
        # descriptors stay grounded in the local features
        if prompt.features is not None:
            desc, _ = decide(prompt.features, prompt.goal)
        else:
            desc = prompt.continuity_ref or SemanticDescriptors(("clear",) * 3, ("none",) * 3, ("partial",) * 3, "straight")
        return desc, labels


@dataclass
class FallbackCounter:
    count: int = 0


_HEURISTIC = HeuristicBackend()


def infer_semantics(prompt: StructuredPrompt, backend: SemanticBackend | None = None,
                    counter: FallbackCounter | None = None) -> tuple[SemanticDescriptors, FuzzyLabelSet]:
    backend = backend or _HEURISTIC
    try:
        return backend.infer(prompt)
    except BackendError as exc:
        logger.warning("semantic backend %s failed (%s); using heuristic fallback", backend.name, exc)
        if counter is not None:
            counter.count += 1
        return _HEURISTIC.infer(prompt)


def continuity_guard(current: FuzzyLabelSet, previous: FuzzyLabelSet | None) -> FuzzyLabelSet:
    """Limit every label to one ordinal step from its predecessor.

    Pass ``previous=None`` to exempt a query (recovery rotation and the first
    query after it).
    """
    if previous is None:
        return current

    def step(cur: str, prev: str, scale: tuple[str, ...]) -> str:
        i, j = scale.index(cur), scale.index(prev)
        return scale[j + max(-1, min(1, i - j))]

    return FuzzyLabelSet(
        step(current.moment, previous.moment, SIGNED_TERMS),
        step(current.moment_change, previous.moment_change, SIGNED_TERMS),
        step(current.force, previous.force, FORCE_TERMS),
        step(current.force_change, previous.force_change, SIGNED_TERMS),
    )
