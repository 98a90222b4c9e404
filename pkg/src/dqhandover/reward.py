"""Phased handover reward.

The reward is a small state machine.  Before the grasp it pays the shaped
approach reward ``m_t * eta_t * exp(-d_t)`` plus the weighted contact sum.  Once
the thumb and another finger touch the object it switches, permanently for the
episode, to ``alpha * exp(-d_TGT)`` plus contacts.  ``d_TGT`` is the distance
from the object's grasp frame to the receiver's home pose.  Two one-off bonuses
are paid: one on the grasp transition and one when the object first reaches the
target.

The distance metric is injected as a ``(Pose, Pose) -> float`` callable, so the
same machine runs on the dual-quaternion, Euler or matrix metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

from .se3metrics import Metric, Pose

__all__ = [
    "N_CONTACTS",
    "FINGERS",
    "PHALANGES",
    "DEFAULT_CONTACT_WEIGHTS",
    "contact_index",
    "ContactState",
    "PhaseState",
    "FrameSet",
    "RewardStep",
    "maneuver_ok",
    "step_modifier",
    "contact_eta",
    "base_reward",
    "grasp_trigger",
    "evaluate_reward",
    "total_reward",
    "discounted_return",
]

FINGERS = ("index", "middle", "ring", "thumb")
PHALANGES = ("proximal", "medial", "distal")
N_CONTACTS = 1 + len(FINGERS) * len(PHALANGES)
PALM = 0


def contact_index(finger: str, phalange: str) -> int:
    """Position of a finger sensor in the 13-flag vector (the palm is index 0)."""
    return 1 + FINGERS.index(finger) * len(PHALANGES) + PHALANGES.index(phalange)


def _default_weights() -> tuple[float, ...]:
    per_finger = (0.09, 0.06, 0.03)
    return (0.28,) + per_finger * len(FINGERS)


DEFAULT_CONTACT_WEIGHTS = _default_weights()
_THUMB = tuple(contact_index("thumb", p) for p in PHALANGES)
_OTHER_FINGERS = tuple(
    contact_index(f, p) for f in FINGERS if f != "thumb" for p in PHALANGES
)


@dataclass(frozen=True)
class ContactState:
    """Boolean touch sensors on the receiver hand and their reward weights.

    Order: palm, then index, middle, ring and thumb, each as proximal, medial,
    distal.  Weights must not increase from proximal to distal within a finger.
    """

    flags: tuple[bool, ...] = (False,) * N_CONTACTS
    weights: tuple[float, ...] = DEFAULT_CONTACT_WEIGHTS

    def __post_init__(self):
        if len(self.flags) != N_CONTACTS or len(self.weights) != N_CONTACTS:
            raise ValueError(f"contact vectors must have {N_CONTACTS} entries")
        object.__setattr__(self, "flags", tuple(bool(f) for f in self.flags))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if any(w < 0.0 for w in self.weights):
            raise ValueError("contact weights must be non-negative")
        for f in range(len(FINGERS)):
            w = self.weights[1 + 3 * f: 4 + 3 * f]
            if not (w[0] >= w[1] >= w[2]):
                raise ValueError(f"{FINGERS[f]} weights must be non-increasing toward the tip, got {w}")

    @classmethod
    def _unchecked(cls, flags: tuple[bool, ...], weights: tuple[float, ...]) -> ContactState:
        # for the simulator's hot loop, where weights were validated once in the config
        c = object.__new__(cls)
        object.__setattr__(c, "flags", flags)
        object.__setattr__(c, "weights", weights)
        return c

    @classmethod
    def from_indices(cls, indices: Sequence[int], weights: Sequence[float] = DEFAULT_CONTACT_WEIGHTS) -> ContactState:
        flags = [False] * N_CONTACTS
        for i in indices:
            flags[i] = True
        return cls(tuple(flags), tuple(weights))

    @property
    def count(self) -> int:
        return sum(self.flags)

    @property
    def weighted_sum(self) -> float:
        return sum(w for f, w in zip(self.flags, self.weights) if f)

    @property
    def mask(self) -> int:
        """Flags packed into an integer, bit ``i`` for sensor ``i``."""
        return sum(1 << i for i, f in enumerate(self.flags) if f)


@dataclass(frozen=True)
class PhaseState:
    """Reward-machine state carried between steps.

    ``grasped`` is the grasp indicator; it latches for the rest of the episode.
    The bonus magnitudes and ``target_tolerance`` are our choices.
    ``first_step_improvement`` decides how the first step, which has no previous
    distance, is scored.
    """

    grasped: bool = False
    prev_distance: Optional[float] = None
    eta0: float = 1.0
    alpha: float = 12.0
    grasp_bonus: float = 5.0
    target_bonus: float = 10.0
    bonuses_paid: tuple[bool, bool] = (False, False)
    target_tolerance: float = 0.05
    first_step_improvement: bool = False
    maneuver_translation_only: bool = False

    def reset(self) -> PhaseState:
        """Fresh episode state keeping the configured parameters."""
        return replace(self, grasped=False, prev_distance=None, bonuses_paid=(False, False))


@dataclass(frozen=True)
class FrameSet:
    """The poses the reward compares.

    ``hand_back`` is a rigid offset of ``hand_palm``; comparing both against the
    grasp frame tells whether the palm or the back of the hand faces the object.
    """

    hand_palm: Pose
    hand_back: Pose
    giver_palm: Pose
    object_grasp: Pose
    home: Pose


class RewardStep(NamedTuple):
    reward: float
    state: PhaseState
    d_t: float
    d_target: float
    man_ok: bool
    m_t: int
    eta: float
    grasp_bonus_paid: bool
    target_bonus_paid: bool


def _translation_metric(p1: Pose, p2: Pose) -> float:
    a, b = p1.translation, p2.translation
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def maneuver_ok(f: FrameSet, metric: Metric, translation_only: bool = False, d_t: float | None = None) -> bool:
    """True when the palm is nearer the grasp frame than both the giver palm and the back of the hand.

    With ``translation_only`` the two guard distances use the Euclidean gap
    instead of ``metric``.
    """
    if d_t is None:
        d_t = metric(f.hand_palm, f.object_grasp)
    guard = _translation_metric if translation_only else metric
    d_robots = guard(f.hand_palm, f.giver_palm)
    d_back = guard(f.hand_back, f.object_grasp)
    return d_robots > d_t and d_back > d_t


def step_modifier(d_t: float, d_prev: float | None, man_ok: bool, first_step_improvement: bool = False) -> int:
    """+1 for a strict improvement inside the approach zone, otherwise -1."""
    improved = first_step_improvement if d_prev is None else d_t < d_prev
    return 1 if (improved and man_ok) else -1


def contact_eta(c: ContactState, eta0: float = 1.0) -> float:
    return eta0 / (c.count + 1)


def base_reward(d_t: float, c: ContactState, eta0: float = 1.0) -> float:
    return contact_eta(c, eta0) * math.exp(-d_t)


def grasp_trigger(c: ContactState) -> bool:
    """Thumb plus at least one other finger in contact; the palm does not count."""
    flags = c.flags
    return any(flags[i] for i in _THUMB) and any(flags[i] for i in _OTHER_FINGERS)


def evaluate_reward(f: FrameSet, c: ContactState, s: PhaseState, metric: Metric) -> RewardStep:
    """One reward step with every intermediate term exposed."""
    d_t = metric(f.hand_palm, f.object_grasp)
    d_tgt = metric(f.object_grasp, f.home)
    man = maneuver_ok(f, metric, s.maneuver_translation_only, d_t=d_t)
    m_t = step_modifier(d_t, s.prev_distance, man, s.first_step_improvement)
    eta = contact_eta(c, s.eta0)
    contact_term = c.weighted_sum

    grasped = s.grasped or grasp_trigger(c)
    grasp_paid, target_paid = s.bonuses_paid
    pay_grasp = pay_target = False
    if not grasped:
        reward = m_t * eta * math.exp(-d_t) + contact_term
    else:
        reward = s.alpha * math.exp(-d_tgt) + contact_term
        if not grasp_paid:
            pay_grasp = True
            reward += s.grasp_bonus
        if not target_paid and d_tgt < s.target_tolerance:
            pay_target = True
            reward += s.target_bonus

    new_state = replace(
        s,
        grasped=grasped,
        prev_distance=d_t,
        bonuses_paid=(grasp_paid or pay_grasp, target_paid or pay_target),
    )
    return RewardStep(reward, new_state, d_t, d_tgt, man, m_t, eta, pay_grasp, pay_target)


def total_reward(f: FrameSet, c: ContactState, s: PhaseState, metric: Metric) -> tuple[float, PhaseState]:
    step = evaluate_reward(f, c, s, metric)
    return step.reward, step.state


def discounted_return(rewards: Sequence[float], gamma: float = 0.99) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    g = 1.0
    for r in rewards:
        total += g * r
        g *= gamma
    return total
