"""Scripted agents for the handover simulator.

``GreedyController`` descends a pose metric directly by probing each pose
coordinate, a scripted analog of the distance-minimization curves of a trained
agent.  ``LinearPolicy`` plus :func:`random_search` (or the
:class:`RandomSearchPolicy` estimator) optimize discounted return without
gradients.

Agents share one method, ``act(state, cfg, obs=None) -> Action``, which is all
:func:`rollout` needs.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import InvalidTransitionError
from .reward import discounted_return
from .se3metrics import METRICS, Pose, make_metric
from .sim import (
    ACTION_DIM,
    OBS_DIM,
    Action,
    EpisodeLog,
    HandoverEnv,
    Observation,
    SimConfig,
    SimState,
    apply_increment,
    observe,
)

__all__ = [
    "Agent",
    "GreedyController",
    "greedy_step",
    "LinearPolicy",
    "rollout",
    "summarize",
    "wilson_interval",
    "evaluate_policy",
    "random_search",
    "RandomSearchPolicy",
    "translation_subtask",
    "TRANSLATION_ROWS",
]


class Agent(Protocol):
    def act(self, state: SimState, cfg: SimConfig, obs: Optional[Observation] = None) -> Action: ...


_ZERO3 = (0.0, 0.0, 0.0)
_LINE_SEARCH_STEPS = 10


class GreedyController(BaseEstimator):
    """Coordinate-probing descent on a pose metric.

    Before the grasp the objective is the palm-to-grasp-frame distance.
    Afterwards it is the distance from the carried object's grasp frame to the
    home pose.  Each step probes +/- ``probe_step`` along the three translation
    and three rotation axes and keeps the sign that lowers the objective.  It
    then line-searches along the combined sign pattern, starting from
    ``descent_gain`` times the action limits and halving.  The joints close at
    ``joint_close_rate`` once anything touches the hand.  Joint probes are
    skipped because the joints never enter the pose metric; their probes would
    always tie.

    Parameters
    ----------
    metric : {"dq", "euler", "matrix"}
        Descent objective.  Scaling weights come from the simulator config.
    probe_step : float
        Probe size, meters for translation axes and radians for rotation axes.
        Must not exceed the simulator's action limits.
    descent_gain : float
        Fraction of the action limit tried first in the line search.
    joint_close_rate : float
        Joint increment (rad/step) applied once in contact.
    """

    def __init__(self, metric="dq", probe_step=0.002, descent_gain=1.0, joint_close_rate=0.05):
        self.metric = metric
        self.probe_step = probe_step
        self.descent_gain = descent_gain
        self.joint_close_rate = joint_close_rate

    def fit(self, X=None, y=None):
        """No-op; the controller has nothing to learn.  Validates parameters."""
        self._validate()
        return self

    def _validate(self, cfg: Optional[SimConfig] = None):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.probe_step > 0:
            raise ValueError("probe_step must be strictly positive")
        if cfg is not None and self.probe_step > min(cfg.action_translation_limit, cfg.action_rotation_limit):
            raise ValueError("probe_step must not exceed the action limits")
        if not 0 < self.descent_gain <= 1:
            raise ValueError("descent_gain must lie in (0, 1]")

    def objective(self, state: SimState, cfg: SimConfig):
        """Return ``f(palm) -> distance`` for the current phase."""
        metric = make_metric(self.metric, cfg.weights)
        frames = state.frames
        if state.phase.grasped:
            rel = frames.hand_palm.inverse().compose(frames.object_grasp)
            home = frames.home
            return lambda palm: metric(palm.compose(rel), home)
        target = frames.object_grasp
        return lambda palm: metric(palm, target)

    def act(self, state: SimState, cfg: SimConfig, obs: Optional[Observation] = None) -> Action:
        return greedy_step(state, self, cfg)


def greedy_step(s: SimState, ctrl: GreedyController, cfg: SimConfig) -> Action:
    """One greedy action for state ``s``."""
    if s.done:
        raise InvalidTransitionError("cannot act on a finished episode")
    ctrl._validate(cfg)
    f = ctrl.objective(s, cfg)
    palm = s.frames.hand_palm
    d0 = f(palm)
    h = ctrl.probe_step

    signs = [0.0] * 6
    best_probe = (d0, None)
    for i in range(6):
        vals = []
        for sign in (1.0, -1.0):
            dt = [0.0, 0.0, 0.0]
            de = [0.0, 0.0, 0.0]
            (dt if i < 3 else de)[i % 3] = sign * h
            d = f(apply_increment(palm, dt, de))
            vals.append(d)
            if d < best_probe[0]:
                best_probe = (d, (tuple(dt), tuple(de)))
        d_plus, d_minus = vals
        if d_plus < d0 and d_plus <= d_minus:
            signs[i] = 1.0
        elif d_minus < d0 and d_minus < d_plus:
            signs[i] = -1.0

    move_t, move_e = _ZERO3, _ZERO3
    best = d0
    if any(signs):
        lt, lr = cfg.action_translation_limit, cfg.action_rotation_limit
        scale = ctrl.descent_gain
        for _ in range(_LINE_SEARCH_STEPS + 1):
            dt = (signs[0] * lt * scale, signs[1] * lt * scale, signs[2] * lt * scale)
            de = (signs[3] * lr * scale, signs[4] * lr * scale, signs[5] * lr * scale)
            d = f(apply_increment(palm, dt, de))
            if d < best:
                best, move_t, move_e = d, dt, de
            elif best < d0:
                break  # past the minimum along this ray
            scale *= 0.5
    if best >= d0 and best_probe[1] is not None:
        move_t, move_e = best_probe[1]

    rate = ctrl.joint_close_rate
    closing = s.contacts.count > 0 or s.phase.grasped
    d_joints = (rate, rate, rate) if closing else _ZERO3
    return Action(move_t, move_e, d_joints)


class LinearPolicy:
    """Affine map from the 15-dim observation to the 9-dim action.

    Outputs are clamped by the simulator's action limits when applied.
    """

    def __init__(self, weights=None, bias=None):
        W = np.zeros((ACTION_DIM, OBS_DIM)) if weights is None else np.array(weights, dtype=float)
        b = np.zeros(ACTION_DIM) if bias is None else np.array(bias, dtype=float)
        if W.shape != (ACTION_DIM, OBS_DIM) or b.shape != (ACTION_DIM,):
            raise ValueError(f"expected weights {(ACTION_DIM, OBS_DIM)} and bias {(ACTION_DIM,)}, got {W.shape}, {b.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("policy parameters must be finite")
        self.weights = W
        self.bias = b

    @classmethod
    def zeros(cls) -> LinearPolicy:
        return cls()

    @property
    def params(self) -> np.ndarray:
        """``[W | b]`` as one ``(9, 16)`` array."""
        return np.hstack([self.weights, self.bias[:, None]])

    @classmethod
    def from_params(cls, params) -> LinearPolicy:
        params = np.asarray(params, dtype=float)
        if params.shape != (ACTION_DIM, OBS_DIM + 1):
            raise ValueError(f"expected parameters of shape {(ACTION_DIM, OBS_DIM + 1)}, got {params.shape}")
        return cls(params[:, :OBS_DIM], params[:, OBS_DIM])

    def predict(self, X) -> np.ndarray:
        """Raw (unclamped) actions for a batch of observation vectors."""
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != OBS_DIM:
            raise ValueError(f"observations have {OBS_DIM} features, got {X.shape[1]}")
        return X @ self.weights.T + self.bias

    def act(self, state: SimState, cfg: SimConfig, obs: Optional[Observation] = None) -> Action:
        if obs is None:
            obs = observe(state, cfg)
        return Action.from_array(self.weights @ obs.as_array() + self.bias)

    def __eq__(self, other):
        return isinstance(other, LinearPolicy) and np.array_equal(self.params, other.params)

    def __repr__(self):
        return f"LinearPolicy(|W|={np.linalg.norm(self.weights):.4g}, |b|={np.linalg.norm(self.bias):.4g})"

    def to_text(self) -> str:
        """Plain-text checkpoint: a comment header, then one row ``W[i, :] b[i]`` per action dimension."""
        lines = [f"# LinearPolicy action_dim={ACTION_DIM} obs_dim={OBS_DIM}", "# columns: w_0 .. w_14 bias"]
        for row in self.params:
            lines.append(" ".join(format(float(v), ".17g") for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> LinearPolicy:
        rows = [
            [float(v) for v in line.split()]
            for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
        return cls.from_params(np.array(rows))


def rollout(agent: Agent, cfg: SimConfig, seeds: Iterable[int]) -> list[EpisodeLog]:
    """Run one episode per seed; episodes share nothing but ``cfg``."""
    logs = []
    env = HandoverEnv(cfg)
    for seed in seeds:
        obs = env.reset(int(seed))
        done = False
        while not done:
            obs, _, done, _ = env.step(agent.act(env.state, cfg, obs))
        logs.append(env.log)
    return logs


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def summarize(logs: Sequence[EpisodeLog], gamma: float = 0.99) -> dict:
    """Outcome counts, percentages, mean return and final-distance averages."""
    n = len(logs)
    counts = {k: 0 for k in ("success", "fail", "timeout")}
    for log in logs:
        counts[log.outcome] += 1
    returns = [discounted_return(log.rewards, gamma) for log in logs]
    finals = [log.records[-1] for log in logs if log.records]
    firsts = [log.records[0] for log in logs if log.records]
    pct = (lambda k: 100.0 * counts[k] / n) if n else (lambda k: 0.0)
    return {
        "episodes": n,
        "success": counts["success"],
        "fail": counts["fail"],
        "timeout": counts["timeout"],
        "succ_pct": pct("success"),
        "fail_pct": pct("fail"),
        "timeout_pct": pct("timeout"),
        "success_ci95": wilson_interval(counts["success"], n),
        "mean_return": float(np.mean(returns)) if returns else 0.0,
        "mean_initial_d_trans": float(np.mean([r.d_trans for r in firsts])) if firsts else 0.0,
        "mean_initial_d_rot": float(np.mean([r.d_rot for r in firsts])) if firsts else 0.0,
        "mean_final_d_trans": float(np.mean([r.d_trans for r in finals])) if finals else 0.0,
        "mean_final_d_rot": float(np.mean([r.d_rot for r in finals])) if finals else 0.0,
    }


# Action rows a translation-only policy may use (the palm translation increments).
TRANSLATION_ROWS = (0, 1, 2)


def translation_subtask(cfg: SimConfig, max_steps: int = 20) -> SimConfig:
    """Orientation randomization switched off and a short horizon."""
    return replace(cfg, reset_rot_roll_yaw=0.0, reset_rot_pitch=0.0, max_steps=max_steps, perturbation=False)


def evaluate_policy(policy: LinearPolicy, cfg: SimConfig, seeds: Sequence[int], gamma: float = 0.99) -> float:
    """Mean discounted return of ``policy`` over ``seeds``."""
    logs = rollout(policy, cfg, seeds)
    return float(np.mean([discounted_return(log.rewards, gamma) for log in logs]))


def random_search(
    init: LinearPolicy,
    iterations: int,
    population: int,
    noise_scale: float,
    cfg: SimConfig,
    seeds: Sequence[int] = tuple(range(8)),
    gamma: float = 0.99,
    rows: Optional[Sequence[int]] = None,
    random_state=0,
    callback=None,
) -> tuple[LinearPolicy, list[float]]:
    """Best-of-population random search on mean discounted return.

    Every iteration perturbs the incumbent's parameters with Gaussian noise
    ``population`` times.  The best candidate replaces the incumbent only if it
    scores strictly higher on the fixed ``seeds`` batch, so the incumbent score
    never decreases.  ``rows`` limits the perturbation to those action rows.

    Returns the incumbent and its score after each iteration; the list starts
    with the initial score.
    """
    if iterations < 0 or population < 1:
        raise ValueError("iterations must be >= 0 and population >= 1")
    rng = check_random_state(random_state)
    best = init
    best_score = evaluate_policy(init, cfg, seeds, gamma)
    history = [best_score]
    mask = np.zeros((ACTION_DIM, OBS_DIM + 1))
    mask[list(range(ACTION_DIM)) if rows is None else list(rows), :] = 1.0
    for it in range(iterations):
        noise = rng.standard_normal((population, ACTION_DIM, OBS_DIM + 1)) * noise_scale * mask
        cand_best, cand_score = None, -math.inf
        for k in range(population):
            if noise_scale == 0.0:
                break
            cand = LinearPolicy.from_params(best.params + noise[k])
            score = evaluate_policy(cand, cfg, seeds, gamma)
            if score > cand_score:
                cand_best, cand_score = cand, score
        if cand_best is not None and cand_score > best_score:
            best, best_score = cand_best, cand_score
        history.append(best_score)
        if callback is not None:
            callback(it + 1, best_score)
    return best, history


class RandomSearchPolicy(BaseEstimator):
    """Estimator wrapper: ``fit`` runs :func:`random_search` over a seed batch.

    After fitting, ``policy_`` holds the incumbent and ``scores_`` the per-iteration
    incumbent score.  ``predict`` maps observation vectors to raw actions and
    ``score`` is the mean discounted return on a seed batch.
    """

    def __init__(
        self,
        iterations=200,
        population=32,
        noise_scale=0.05,
        gamma=0.99,
        subtask="translation",
        subtask_steps=20,
        random_state=0,
        sim_config=None,
    ):
        self.iterations = iterations
        self.population = population
        self.noise_scale = noise_scale
        self.gamma = gamma
        self.subtask = subtask
        self.subtask_steps = subtask_steps
        self.random_state = random_state
        self.sim_config = sim_config

    def _task_config(self) -> SimConfig:
        cfg = self.sim_config if self.sim_config is not None else SimConfig()
        if self.subtask == "translation":
            return translation_subtask(cfg, self.subtask_steps)
        if self.subtask == "full":
            return cfg
        raise ValueError(f"subtask must be 'translation' or 'full', got {self.subtask!r}")

    def fit(self, seeds=tuple(range(8)), y=None, init: Optional[LinearPolicy] = None, callback=None):
        seeds = [int(s) for s in seeds]
        if not seeds:
            raise ValueError("need at least one seed")
        rows = TRANSLATION_ROWS if self.subtask == "translation" else None
        self.policy_, self.scores_ = random_search(
            init if init is not None else LinearPolicy.zeros(),
            self.iterations,
            self.population,
            self.noise_scale,
            self._task_config(),
            seeds=seeds,
            gamma=self.gamma,
            rows=rows,
            random_state=self.random_state,
            callback=callback,
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "policy_")
        return self.policy_.predict(X)

    def score(self, seeds, y=None) -> float:
        check_is_fitted(self, "policy_")
        return evaluate_policy(self.policy_, self._task_config(), [int(s) for s in seeds], self.gamma)
