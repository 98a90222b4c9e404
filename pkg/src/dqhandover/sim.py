"""Physics-free kinematic handover environment.

The receiver hand is a free-flying palm frame driven by translation and Euler
increments plus three averaged finger-closure joints.  The giver holds the
object until the grasp indicator flips, then opens.  Grasping attaches the
object rigidly to the palm.  If the giver is open and the thumb-plus-finger
hold is lost, the object falls, and the episode fails after ``fall_window``
steps.  There is no collision handling.

World layout (meters): the receiver's home palm sits at ``home_point`` facing
+x; the giver base is ``giver_base_offset`` further along x; the object's grasp
frame is randomized in a cube around ``handover_point``.

Palm frame: +z is the palm normal, the finger sensors wrap around the palm
x-axis, and the thumb is on the -y side.  Objects have their long axis along
local z.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import InvalidTransitionError, InvariantViolation
from .quatcore import IDENTITY, Quaternion, quat_from_axis_angle, quat_mul
from .reward import (
    DEFAULT_CONTACT_WEIGHTS,
    FINGERS,
    N_CONTACTS,
    PHALANGES,
    ContactState,
    FrameSet,
    PhaseState,
    contact_index,
    evaluate_reward,
    grasp_trigger,
)
from .se3metrics import (
    DEFAULT_WEIGHTS,
    Metric,
    MetricWeights,
    Pose,
    distance_terms,
    make_metric,
    quat_from_euler,
    quat_to_euler,
    wrap_angle,
)

__all__ = [
    "ObjectSpec",
    "OBJECTS",
    "SimConfig",
    "SimState",
    "Action",
    "Observation",
    "StepRecord",
    "EpisodeLog",
    "reset",
    "step",
    "contact_proxy",
    "observe",
    "classify_outcome",
    "HandoverEnv",
    "LOG_COLUMNS",
]

_HALF_PI = 0.5 * math.pi
# Palm normal (+z) facing world +x.
FACING_X = quat_from_axis_angle((0.0, 1.0, 0.0), _HALF_PI)
FACING_MINUS_X = quat_from_axis_angle((0.0, 1.0, 0.0), -_HALF_PI)

# Back-of-hand frame: behind the palm, normal reversed.
HAND_BACK_OFFSET = Pose((0.0, 0.0, -0.04), quat_from_axis_angle((1.0, 0.0, 0.0), math.pi))

PALM_STANDOFF = 0.005  # grasp frame sits this far off the object surface
GIVER_STANDOFF = 0.01
GRAVITY = 9.81


@dataclass(frozen=True)
class ObjectSpec:
    """Handover object: a box (``prism``) or a ``cylinder``, long axis along local z.

    ``dimensions`` are (x, y, z) extents for a prism and (radius, length) for a
    cylinder.  The grasp frame defaults to the object's -x face, palm normal
    pointing at the center.
    """

    shape: str
    dimensions: tuple[float, ...]
    grasp_frame_offset: Optional[Pose] = None

    def __post_init__(self):
        if self.shape not in ("prism", "cylinder"):
            raise ValueError(f"unknown object shape {self.shape!r}")
        expected = 3 if self.shape == "prism" else 2
        if len(self.dimensions) != expected or any(d <= 0 for d in self.dimensions):
            raise ValueError(f"{self.shape} needs {expected} positive dimensions, got {self.dimensions}")
        if self.grasp_frame_offset is None:
            object.__setattr__(
                self, "grasp_frame_offset", Pose((-(self.half_width + PALM_STANDOFF), 0.0, 0.0), FACING_X)
            )

    @property
    def half_width(self) -> float:
        """Half extent along local x (the approach direction)."""
        return 0.5 * self.dimensions[0] if self.shape == "prism" else self.dimensions[0]

    @property
    def bounding_radius(self) -> float:
        if self.shape == "prism":
            return 0.5 * math.sqrt(sum(d * d for d in self.dimensions))
        r, length = self.dimensions
        return math.hypot(r, 0.5 * length)

    def surface_distance(self, p: Sequence[float]) -> float:
        """Distance from a point in object coordinates to the solid (0 inside)."""
        x, y, z = p
        if self.shape == "prism":
            hx, hy, hz = (0.5 * d for d in self.dimensions)
            dx = max(abs(x) - hx, 0.0)
            dy = max(abs(y) - hy, 0.0)
            dz = max(abs(z) - hz, 0.0)
            return math.sqrt(dx * dx + dy * dy + dz * dz)
        r, length = self.dimensions
        dr = max(math.hypot(x, y) - r, 0.0)
        dz = max(abs(z) - 0.5 * length, 0.0)
        return math.hypot(dr, dz)


OBJECTS = {
    "prism": ObjectSpec("prism", (0.035, 0.035, 0.45)),
    "short_prism": ObjectSpec("prism", (0.035, 0.035, 0.35)),
    "cylinder": ObjectSpec("cylinder", (0.019, 0.45)),
    "short_cylinder": ObjectSpec("cylinder", (0.019, 0.35)),
}


def _finger_anchors() -> tuple[tuple[float, float, float], ...]:
    anchors = [(0.0, 0.0, 0.0)] * N_CONTACTS
    # (position along palm x, side); thumb opposes the other three fingers
    layout = {"index": (-0.04, 1.0), "middle": (0.0, 1.0), "ring": (0.04, 1.0), "thumb": (0.0, -1.0)}
    offsets = {"proximal": (0.024, 0.012), "medial": (0.026, 0.030), "distal": (0.012, 0.056)}
    for finger in FINGERS:
        x, side = layout[finger]
        for phalange in PHALANGES:
            y, z = offsets[phalange]
            anchors[contact_index(finger, phalange)] = (x, side * y, z)
    return tuple(anchors)


# Sensor anchor points in the palm frame; index 0 is the palm itself.
CONTACT_ANCHORS = _finger_anchors()


@dataclass(frozen=True)
class SimConfig:
    reset_cube_half_extent: float = 0.15
    reset_rot_roll_yaw: float = 0.3
    reset_rot_pitch: float = 0.6
    max_steps: int = 500
    action_translation_limit: float = 0.01
    action_rotation_limit: float = 0.05
    joint_limit: float = 0.05
    perturbation: bool = False
    giver_linear_speed: float = 0.03
    giver_angular_speed: float = 0.16
    control_dt: float = 1.0 / 30.0
    object: ObjectSpec = OBJECTS["prism"]
    seed: int = 0
    metric: str = "dq"
    weights: MetricWeights = DEFAULT_WEIGHTS
    reward: PhaseState = PhaseState()
    contact_weights: tuple[float, ...] = DEFAULT_CONTACT_WEIGHTS
    home_point: tuple[float, float, float] = (0.0, 0.0, 0.4)
    handover_point: tuple[float, float, float] = (0.4, 0.0, 0.4)
    giver_base_offset: float = 0.8
    contact_epsilon: float = 0.01
    phalange_thresholds: tuple[float, float, float] = (0.3, 0.6, 0.9)
    joint_max: float = 1.6
    fall_window: int = 15
    observation_noise: float = 0.0

    def __post_init__(self):
        for name in (
            "action_translation_limit", "action_rotation_limit", "joint_limit",
            "giver_linear_speed", "giver_angular_speed", "control_dt", "contact_epsilon", "joint_max",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("reset_cube_half_extent", "reset_rot_roll_yaw", "reset_rot_pitch", "observation_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_steps < 1 or self.fall_window < 1:
            raise ValueError("max_steps and fall_window must be at least 1")
        make_metric(self.metric, self.weights)  # validates the name
        ContactState(weights=tuple(self.contact_weights))  # validates the weights

    @property
    def home_pose(self) -> Pose:
        return Pose(self.home_point, FACING_X)

    @property
    def metric_fn(self) -> Metric:
        return make_metric(self.metric, self.weights)

    @property
    def action_limits(self) -> np.ndarray:
        return np.array(
            [self.action_translation_limit] * 3 + [self.action_rotation_limit] * 3 + [self.joint_limit] * 3
        )


class Action(NamedTuple):
    """Per-step increments: palm translation (m), world-frame Euler XYZ (rad), joints (rad)."""

    d_translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    d_euler: tuple[float, float, float] = (0.0, 0.0, 0.0)
    d_joints: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def zero(cls) -> Action:
        return cls()

    @classmethod
    def from_array(cls, a) -> Action:
        a = [float(v) for v in np.asarray(a, dtype=float).ravel()]
        if len(a) != 9:
            raise ValueError(f"an action has 9 components, got {len(a)}")
        return cls(tuple(a[0:3]), tuple(a[3:6]), tuple(a[6:9]))

    def as_array(self) -> np.ndarray:
        return np.array([*self.d_translation, *self.d_euler, *self.d_joints], dtype=float)

    def clamped(self, cfg: SimConfig) -> Action:
        def clip(v, lim):
            return tuple(min(lim, max(-lim, float(c))) for c in v)

        return Action(
            clip(self.d_translation, cfg.action_translation_limit),
            clip(self.d_euler, cfg.action_rotation_limit),
            clip(self.d_joints, cfg.joint_limit),
        )


class Observation(NamedTuple):
    receiver_pose: tuple[float, ...]  # x, y, z, roll, pitch, yaw
    object_pose: tuple[float, ...]
    hand_joints: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.array([*self.receiver_pose, *self.object_pose, *self.hand_joints], dtype=float)


OBS_DIM = 15
ACTION_DIM = 9


@dataclass(frozen=True)
class SimState:
    frames: FrameSet
    object_pose: Pose
    hand_joints: tuple[float, float, float]
    giver_open: bool
    step_index: int
    contacts: ContactState
    phase: PhaseState
    rng_state: dict = field(compare=False, repr=False)
    attached: bool = False
    attach_offset: Optional[Pose] = None
    falling: bool = False
    fall_steps: int = 0
    fall_speed: float = 0.0
    giver_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    giver_omega: tuple[float, float, float] = (0.0, 0.0, 0.0)
    outcome: Optional[str] = None

    @property
    def done(self) -> bool:
        return self.outcome is not None

    @property
    def palm(self) -> Pose:
        return self.frames.hand_palm


class StepRecord(NamedTuple):
    step: int
    phase: str
    d_global: float
    d_trans: float
    d_rot: float
    reward: float
    m_t: int
    eta: float
    contact_mask: int
    grasped: bool
    outcome: str


LOG_COLUMNS = StepRecord._fields


@dataclass
class EpisodeLog:
    """Per-step record of one episode plus its outcome."""

    seed: int = 0
    metric: str = "dq"
    target_tolerance: float = 0.05
    max_steps: int = 500
    records: list[StepRecord] = field(default_factory=list)
    outcome: Optional[str] = None

    @property
    def rewards(self) -> list[float]:
        return [r.reward for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, fh=None) -> str:
        """Write the log as CSV (header row first); returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.records:
            w.writerow(
                [
                    r.step, r.phase, _fmt(r.d_global), _fmt(r.d_trans), _fmt(r.d_rot), _fmt(r.reward),
                    r.m_t, _fmt(r.eta), r.contact_mask, int(r.grasped), r.outcome,
                ]
            )
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, **kwargs) -> EpisodeLog:
        rows = list(csv.DictReader(io.StringIO(text)))
        log = cls(**kwargs)
        for row in rows:
            log.records.append(
                StepRecord(
                    int(row["step"]), row["phase"], float(row["d_global"]), float(row["d_trans"]),
                    float(row["d_rot"]), float(row["reward"]), int(row["m_t"]), float(row["eta"]),
                    int(row["contact_mask"]), bool(int(row["grasped"])), row["outcome"],
                )
            )
        if log.records and log.records[-1].outcome != "pending":
            log.outcome = log.records[-1].outcome
        return log


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _frames(palm: Pose, giver_palm: Pose, object_pose: Pose, cfg: SimConfig) -> FrameSet:
    return FrameSet(
        hand_palm=palm,
        hand_back=palm.compose(HAND_BACK_OFFSET),
        giver_palm=giver_palm,
        object_grasp=object_pose.compose(cfg.object.grasp_frame_offset),
        home=cfg.home_pose,
    )


def _giver_offset(obj: ObjectSpec) -> Pose:
    # giver palm on the object's +x face, facing back toward it
    return Pose((obj.half_width + GIVER_STANDOFF, 0.0, 0.0), FACING_MINUS_X)


def _unit(v: np.ndarray) -> tuple[float, float, float]:
    n = float(np.linalg.norm(v))
    return tuple(float(c) / n for c in v)


def reset(cfg: SimConfig, seed: Optional[int] = None) -> SimState:
    """Fresh episode: receiver at home, object randomized around the handover point."""
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    h = cfg.reset_cube_half_extent
    offset = rng.uniform(-h, h, size=3)
    roll, yaw = rng.uniform(-cfg.reset_rot_roll_yaw, cfg.reset_rot_roll_yaw, size=2)
    pitch = rng.uniform(-cfg.reset_rot_pitch, cfg.reset_rot_pitch)
    # drawn unconditionally so the stream does not depend on the perturbation flag
    direction = rng.normal(size=3)
    axis = rng.normal(size=3)

    grasp_pos = tuple(float(c + o) for c, o in zip(cfg.handover_point, offset))
    obj_rot = quat_from_euler(float(roll), float(pitch), float(yaw))
    g = cfg.object.grasp_frame_offset
    grasp = Pose(grasp_pos, quat_mul(obj_rot, g.rotation))
    object_pose = grasp.compose(g.inverse())
    giver_palm = object_pose.compose(_giver_offset(cfg.object))
    palm = cfg.home_pose

    velocity = omega = (0.0, 0.0, 0.0)
    if cfg.perturbation:
        velocity = tuple(cfg.giver_linear_speed * c for c in _unit(direction))
        omega = tuple(cfg.giver_angular_speed * c for c in _unit(axis))

    frames = _frames(palm, giver_palm, object_pose, cfg)
    joints = (0.0, 0.0, 0.0)
    return SimState(
        frames=frames,
        object_pose=object_pose,
        hand_joints=joints,
        giver_open=False,
        step_index=0,
        contacts=_contacts(palm, joints, object_pose, cfg),
        phase=cfg.reward.reset(),
        rng_state=rng.bit_generator.state,
        giver_velocity=velocity,
        giver_omega=omega,
    )


_NO_CONTACT = (False,) * N_CONTACTS


def _contacts(palm: Pose, joints: Sequence[float], object_pose: Pose, cfg: SimConfig) -> ContactState:
    obj = cfg.object
    weights = cfg.contact_weights
    reach = obj.bounding_radius + cfg.contact_epsilon + 0.08
    pt, ot = palm.translation, object_pose.translation
    if math.dist(pt, ot) > reach:
        return ContactState._unchecked(_NO_CONTACT, weights)
    to_object = object_pose.inverse().compose(palm)
    eps = cfg.contact_epsilon
    thresholds = cfg.phalange_thresholds
    flags = []
    for i, anchor in enumerate(CONTACT_ANCHORS):
        if i > 0:
            level = (i - 1) % len(PHALANGES)
            if joints[level] <= thresholds[level]:
                flags.append(False)
                continue
        flags.append(obj.surface_distance(to_object.transform_point(anchor)) <= eps)
    return ContactState._unchecked(tuple(flags), weights)


def contact_proxy(s: SimState, cfg: SimConfig) -> ContactState:
    """Geometric stand-in for the touch sensors.

    A sensor fires when its anchor point lies within ``contact_epsilon`` of the
    object and, for finger sensors, the joint driving that phalange level is
    closed beyond its threshold.
    """
    return _contacts(s.frames.hand_palm, s.hand_joints, s.object_pose, cfg)


def observe(s: SimState, cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> Observation:
    palm, obj = s.frames.hand_palm, s.object_pose
    recv = (*palm.translation, *palm.euler_xyz)
    objp = (*obj.translation, *obj.euler_xyz)
    joints = s.hand_joints
    if cfg.observation_noise > 0.0 and rng is not None:
        noise = rng.normal(scale=cfg.observation_noise, size=15)
        recv = tuple(v + n for v, n in zip(recv, noise[:6]))
        objp = tuple(v + n for v, n in zip(objp, noise[6:12]))
        joints = tuple(v + n for v, n in zip(joints, noise[12:]))
        recv = recv[:3] + tuple(wrap_angle(a) for a in recv[3:])
        objp = objp[:3] + tuple(wrap_angle(a) for a in objp[3:])
    return Observation(tuple(recv), tuple(objp), tuple(joints))


def apply_increment(palm: Pose, d_translation: Sequence[float], d_euler: Sequence[float]) -> Pose:
    """Move the palm: translation added in the world frame, rotation pre-multiplied."""
    t = palm.translation
    new_t = (t[0] + d_translation[0], t[1] + d_translation[1], t[2] + d_translation[2])
    if d_euler[0] == 0.0 and d_euler[1] == 0.0 and d_euler[2] == 0.0:
        return Pose(new_t, palm.rotation)
    q = quat_mul(quat_from_euler(*d_euler), palm.rotation)
    n = q.norm()
    return Pose(new_t, Quaternion(q.w / n, q.x / n, q.y / n, q.z / n))


def _in_reset_region(object_pose: Pose, cfg: SimConfig) -> bool:
    grasp = object_pose.compose(cfg.object.grasp_frame_offset)
    h = cfg.reset_cube_half_extent + 1e-12
    if any(abs(a - b) > h for a, b in zip(grasp.translation, cfg.handover_point)):
        return False
    roll, pitch, yaw = quat_to_euler(object_pose.rotation)
    lim = 1e-12
    return (
        abs(roll) <= cfg.reset_rot_roll_yaw + lim
        and abs(yaw) <= cfg.reset_rot_roll_yaw + lim
        and abs(pitch) <= cfg.reset_rot_pitch + lim
    )


def _move_giver(s: SimState, cfg: SimConfig) -> tuple[Pose, Pose, tuple, tuple]:
    """Advance the giver palm one control period, reversing at the region boundary."""
    dt = cfg.control_dt
    giver = s.frames.giver_palm
    carry = giver.inverse().compose(s.object_pose)
    v, w = s.giver_velocity, s.giver_omega
    for sv, sw in ((1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)):
        vel = tuple(sv * c for c in v)
        om = tuple(sw * c for c in w)
        angle = math.sqrt(sum(c * c for c in om)) * dt
        rot = quat_from_axis_angle(om, angle) if angle > 0.0 else IDENTITY
        t = giver.translation
        moved = Pose(
            (t[0] + vel[0] * dt, t[1] + vel[1] * dt, t[2] + vel[2] * dt),
            quat_mul(rot, giver.rotation).normalized(),
        )
        obj = moved.compose(carry)
        if _in_reset_region(obj, cfg):
            return moved, obj, vel, om
    return giver, s.object_pose, v, w


def _phase_label(grasped: bool, falling: bool, man_ok: bool, contacts: ContactState) -> str:
    if falling:
        return "falling"
    if grasped:
        return "manipulation"
    if contacts.count > 0:
        return "handover"
    return "approach" if man_ok else "maneuver"


class StepResult(NamedTuple):
    state: SimState
    observation: Observation
    reward: float
    done: bool
    outcome: str
    record: StepRecord


def step(s: SimState, a: Action, cfg: SimConfig) -> StepResult:
    """Advance one control step.

    Returns the new state, the observation, the reward, the done flag and the
    outcome label (``"pending"`` until decided).  ``result.record`` holds the log row.
    """
    if s.done:
        raise InvalidTransitionError(f"episode already finished ({s.outcome}); call reset()")
    if not all(math.isfinite(c) for part in a for c in part):
        raise InvariantViolation(f"non-finite action at step {s.step_index + 1}")
    a = a.clamped(cfg)
    metric = cfg.metric_fn

    palm = apply_increment(s.frames.hand_palm, a.d_translation, a.d_euler)
    joints = tuple(min(cfg.joint_max, max(0.0, j + d)) for j, d in zip(s.hand_joints, a.d_joints))

    giver_palm = s.frames.giver_palm
    object_pose = s.object_pose
    velocity, omega = s.giver_velocity, s.giver_omega
    falling, fall_steps, fall_speed = s.falling, s.fall_steps, s.fall_speed
    if s.attached:
        object_pose = palm.compose(s.attach_offset)
    elif falling:
        fall_speed += GRAVITY * cfg.control_dt
        t = object_pose.translation
        object_pose = Pose((t[0], t[1], t[2] - fall_speed * cfg.control_dt), object_pose.rotation)
        fall_steps += 1
    elif cfg.perturbation and not s.giver_open:
        giver_palm, object_pose, velocity, omega = _move_giver(s, cfg)

    contacts = _contacts(palm, joints, object_pose, cfg)
    frames = _frames(palm, giver_palm, object_pose, cfg)
    rs = evaluate_reward(frames, contacts, s.phase, metric)
    if not (math.isfinite(rs.d_t) and math.isfinite(rs.d_target) and math.isfinite(rs.reward)):
        raise InvariantViolation(f"non-finite distance or reward at step {s.step_index + 1}")

    attached, attach_offset, giver_open = s.attached, s.attach_offset, s.giver_open
    holding = grasp_trigger(contacts)
    if rs.state.grasped and not giver_open:
        giver_open = True
    if attached and not holding:
        attached, attach_offset = False, None
        falling, fall_steps, fall_speed = True, 0, 0.0
    elif not attached and holding and rs.state.grasped:
        attached, attach_offset = True, palm.inverse().compose(object_pose)
        falling, fall_steps, fall_speed = False, 0, 0.0
    elif not attached and giver_open and not falling:
        falling, fall_steps, fall_speed = True, 0, 0.0

    step_index = s.step_index + 1
    outcome = None
    if attached and rs.d_target < s.phase.target_tolerance:
        outcome = "success"
    elif falling and fall_steps >= cfg.fall_window:
        outcome = "fail"
    elif step_index >= cfg.max_steps:
        outcome = "fail" if falling else "timeout"

    grasped = rs.state.grasped
    target = (frames.object_grasp, frames.home) if grasped else (frames.hand_palm, frames.object_grasp)
    d_global, d_trans, d_rot = distance_terms(cfg.metric, *target, cfg.weights)
    record = StepRecord(
        step=step_index,
        phase=_phase_label(grasped, falling, rs.man_ok, contacts),
        d_global=d_global,
        d_trans=d_trans,
        d_rot=d_rot,
        reward=rs.reward,
        m_t=rs.m_t,
        eta=rs.eta,
        contact_mask=contacts.mask,
        grasped=grasped,
        outcome=outcome or "pending",
    )

    rng_state = s.rng_state
    obs_rng = None
    if cfg.observation_noise > 0.0:
        obs_rng = np.random.default_rng()
        obs_rng.bit_generator.state = rng_state
    new_state = replace(
        s,
        frames=frames,
        object_pose=object_pose,
        hand_joints=joints,
        giver_open=giver_open,
        step_index=step_index,
        contacts=contacts,
        phase=rs.state,
        attached=attached,
        attach_offset=attach_offset,
        falling=falling,
        fall_steps=fall_steps,
        fall_speed=fall_speed,
        giver_velocity=velocity,
        giver_omega=omega,
        outcome=outcome,
    )
    obs = observe(new_state, cfg, obs_rng)
    if obs_rng is not None:
        new_state = replace(new_state, rng_state=obs_rng.bit_generator.state)
    return StepResult(new_state, obs, rs.reward, outcome is not None, outcome or "pending", record)


def classify_outcome(log: EpisodeLog) -> str:
    """``success`` if the grasped object reached the target, ``fail`` if it was dropped, else ``timeout``."""
    records = log.records
    if any(r.grasped and r.phase == "manipulation" and r.d_global < log.target_tolerance for r in records):
        return "success"
    if any(r.phase == "falling" for r in records):
        return "fail"
    return "timeout"


class HandoverEnv:
    """Stateful wrapper with the usual ``reset`` / ``step`` loop and an episode log."""

    def __init__(self, cfg: SimConfig = SimConfig()):
        self.cfg = cfg
        self.state: Optional[SimState] = None
        self.log: Optional[EpisodeLog] = None

    def reset(self, seed: Optional[int] = None) -> Observation:
        seed = self.cfg.seed if seed is None else seed
        self.state = reset(self.cfg, seed)
        self.log = EpisodeLog(
            seed=seed, metric=self.cfg.metric,
            target_tolerance=self.cfg.reward.target_tolerance, max_steps=self.cfg.max_steps,
        )
        return observe(self.state, self.cfg)

    def step(self, action: Action) -> tuple[Observation, float, bool, dict[str, Any]]:
        if self.state is None:
            raise InvalidTransitionError("call reset() before step()")
        res = step(self.state, action, self.cfg)
        self.state = res.state
        self.log.records.append(res.record)
        if res.done:
            self.log.outcome = res.outcome
        return res.observation, res.reward, res.done, {"outcome": res.outcome, "record": res.record}
