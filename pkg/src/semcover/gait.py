"""Gait generation from (delta, phi) and its planar kinematic reduction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from semcover.world import Pose, Scenario, heading_vector, normalize_angle

LIMBS = ("FL", "FR", "HL", "HR")
# per limb: stroke (sweep), feather (pitch), lift (roll)
DOF = 3
HIND_STROKE = 0.15
FEATHER = 0.35
NEUTRAL = np.zeros(len(LIMBS) * DOF)


@dataclass(frozen=True)
class GaitParams:
    A0: float = 0.5
    kappa: float = 0.2
    delta_max: float = 50.0
    N: int = 16
    c_theta: float = 1.0
    c_d: float = 0.4

    def __post_init__(self):
        if not self.A0 > 0:
            raise ValueError("A0 must be positive")
        if not 0 < self.kappa < self.A0:
            raise ValueError("kappa must lie in (0, A0) so both amplitudes stay positive")
        if self.N < 4:
            raise ValueError("N must be at least 4")


@dataclass(frozen=True)
class GaitSequence:
    steps: np.ndarray  # (N, 12), limb-major FL, FR, HL, HR

    def __len__(self):
        return len(self.steps)

    def stroke(self, limb: str) -> np.ndarray:
        return self.steps[:, LIMBS.index(limb) * DOF]


@dataclass(frozen=True)
class CycleDisplacement:
    d_theta: float
    d_forward: float


def amplitudes(delta: float, params: GaitParams = GaitParams()) -> tuple[float, float]:
    """Left/right foreleg stroke amplitudes; positive delta strengthens the right leg."""
    skew = params.kappa * delta / params.delta_max
    return params.A0 - skew, params.A0 + skew


def generate_gait(delta: float, phi: float, params: GaitParams = GaitParams()) -> GaitSequence:
    a_left, a_right = amplitudes(delta, params)
    i = np.arange(params.N)
    phase = 2.0 * math.pi * phi * i / params.N
    s = np.sin(phase)
    feather = FEATHER * (1.0 - np.cos(phase)) / 2.0
    steps = np.tile(NEUTRAL, (params.N, 1))
    # right-side joints are mirrored, so a symmetric gait has FR stroke == -FL stroke
    steps[:, 0] = a_left * s
    steps[:, 1] = feather
    steps[:, 3] = -a_right * s
    steps[:, 4] = feather
    steps[:, 6] = HIND_STROKE * s
    steps[:, 9] = -HIND_STROKE * s
    return GaitSequence(steps)


def cycle_displacement(delta: float, phi: float, params: GaitParams = GaitParams()) -> CycleDisplacement:
    a_left, a_right = amplitudes(delta, params)
    return CycleDisplacement(params.c_theta * (a_right - a_left), params.c_d * phi * params.A0)


def _advance(pose: Pose, theta: float, dist: float, substeps: int, scenario: Scenario,
             radius: float) -> tuple[float, float, bool]:
    """Move along ``theta`` in sub-increments, stopping at the last free one."""
    ux, uy = heading_vector(theta)
    x, y = pose.x, pose.y
    inc = dist / substeps
    for _ in range(substeps):
        nx, ny = x + ux * inc, y + uy * inc
        if not scenario.is_free(nx, ny, radius):
            return x, y, True
        x, y = nx, ny
    return x, y, False


def apply_cycle(pose: Pose, delta: float, phi: float, params: GaitParams, scenario: Scenario,
                radius: float | None = None) -> Pose:
    """One full gait cycle: rotate first, then advance with collision truncation."""
    r = scenario.robot_radius if radius is None else radius
    d = cycle_displacement(delta, phi, params)
    theta = normalize_angle(pose.theta + d.d_theta)
    x, y, _ = _advance(pose, theta, d.d_forward, params.N, scenario, r)
    return Pose(pose.t + params.N, x, y, theta, pose.z)


def apply_step(pose: Pose, delta: float, phi: float, params: GaitParams, scenario: Scenario,
               radius: float | None = None) -> tuple[Pose, bool]:
    """One engine timestep, i.e. 1/N of a cycle.  Returns (pose, truncated)."""
    r = scenario.robot_radius if radius is None else radius
    d = cycle_displacement(delta, phi, params)
    theta = normalize_angle(pose.theta + d.d_theta / params.N)
    x, y, blocked = _advance(pose, theta, d.d_forward / params.N, 1, scenario, r)
    return Pose(pose.t + 1, x, y, theta, pose.z), blocked
