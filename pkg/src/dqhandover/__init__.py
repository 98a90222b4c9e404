"""Dual-quaternion pose metrics and a phased reward for robot-to-robot handover."""

from .controllers import GreedyController, LinearPolicy, RandomSearchPolicy, rollout, summarize
from .exceptions import ConfigError, InvalidOperandError, InvalidTransitionError, InvariantViolation
from .quatcore import DualQuaternion, Quaternion, dq_diff, dq_distance
from .reward import ContactState, FrameSet, PhaseState, total_reward
from .se3metrics import Pose, dq_metric, euler_distance, matrix_distance
from .sim import HandoverEnv, SimConfig, reset, step

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContactState", "DualQuaternion", "FrameSet", "GreedyController", "HandoverEnv",
    "InvalidOperandError", "InvalidTransitionError", "InvariantViolation", "LinearPolicy", "PhaseState",
    "Pose", "Quaternion", "RandomSearchPolicy", "SimConfig", "dq_diff", "dq_distance", "dq_metric",
    "euler_distance", "matrix_distance", "reset", "rollout", "step", "summarize", "total_reward",
]
