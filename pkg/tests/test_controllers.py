import math
from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone

from dqhandover.controllers import (
    GreedyController,
    LinearPolicy,
    RandomSearchPolicy,
    greedy_step,
    random_search,
    rollout,
    summarize,
    translation_subtask,
    wilson_interval,
)
from dqhandover.exceptions import InvalidTransitionError
from dqhandover.quatcore import quat_from_axis_angle, quat_mul
from dqhandover.se3metrics import Pose, distance_terms
from dqhandover.sim import OBS_DIM, Action, SimConfig, _frames, contact_proxy, reset, step


def palm_at(cfg, pose, seed=0):
    s = reset(cfg, seed)
    s = replace(s, frames=_frames(pose, s.frames.giver_palm, s.object_pose, cfg))
    return replace(s, contacts=contact_proxy(s, cfg))


# --- greedy ---------------------------------------------------------------------------

def test_translation_offset_sign_correct():
    cfg = SimConfig()
    ctrl = GreedyController().fit()
    grasp = reset(cfg, 0).frames.object_grasp
    for offset in [(0.05, -0.03, 0.02), (-0.04, 0.06, -0.01), (0.01, 0.01, -0.08)]:
        palm = Pose(tuple(np.add(grasp.translation, offset)), grasp.rotation)
        a = greedy_step(palm_at(cfg, palm), ctrl, cfg)
        assert np.array_equal(np.sign(a.d_translation), -np.sign(offset))
        assert np.allclose(a.d_euler, 0.0, atol=1e-12)


def test_zero_action_at_target():
    cfg = SimConfig()
    ctrl = GreedyController().fit()
    s = palm_at(cfg, reset(cfg, 0).frames.object_grasp)
    s = replace(s, contacts=contact_proxy(replace(s, hand_joints=(0.0,) * 3), cfg))
    a = greedy_step(s, ctrl, cfg)
    assert a.d_translation == (0.0, 0.0, 0.0)
    assert a.d_euler == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("axis", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, -2, 0.5)])
def test_rotation_offset_descends(axis):
    cfg = SimConfig()
    ctrl = GreedyController().fit()
    grasp = reset(cfg, 0).frames.object_grasp
    palm = Pose(tuple(np.add(grasp.translation, (-0.3, 0, 0))), quat_mul(quat_from_axis_angle(axis, 0.4), grasp.rotation))
    s = palm_at(cfg, palm)
    before = distance_terms("dq", s.frames.hand_palm, s.frames.object_grasp)[2]
    s2 = step(s, greedy_step(s, ctrl, cfg), cfg).state
    after = distance_terms("dq", s2.frames.hand_palm, s2.frames.object_grasp)[2]
    assert after < before


def test_greedy_validation():
    cfg = SimConfig()
    s = reset(cfg, 0)
    with pytest.raises(ValueError):
        GreedyController(metric="cosine").fit()
    with pytest.raises(ValueError):
        GreedyController(probe_step=0.0).fit()
    with pytest.raises(ValueError):
        greedy_step(s, GreedyController(probe_step=0.02), cfg)  # above the 0.01 m limit
    done = replace(s, outcome="timeout")
    with pytest.raises(InvalidTransitionError):
        greedy_step(done, GreedyController(), cfg)


def test_greedy_is_an_estimator():
    g = GreedyController(metric="euler", probe_step=0.001)
    assert g.get_params() == {"metric": "euler", "probe_step": 0.001, "descent_gain": 1.0, "joint_close_rate": 0.05}
    assert clone(g).get_params() == g.get_params()


def test_greedy_descent_is_monotone():
    cfg = SimConfig()
    logs = rollout(GreedyController().fit(), cfg, range(10))
    for log in logs:
        for a, b in zip(log.records, log.records[1:]):
            if a.grasped == b.grasped:
                assert b.d_global <= a.d_global + 1e-12


@pytest.mark.parametrize("metric", ["euler", "matrix"])
def test_greedy_other_metrics_succeed(metric):
    cfg = SimConfig(metric=metric)
    logs = rollout(GreedyController(metric=metric).fit(), cfg, range(5))
    assert sum(log.outcome == "success" for log in logs) >= 4


# --- rollout and summary ----------------------------------------------------------------

def test_rollout_empty_and_deterministic():
    cfg = SimConfig(max_steps=60)
    ctrl = GreedyController().fit()
    assert rollout(ctrl, cfg, []) == []
    a = summarize(rollout(ctrl, cfg, range(4)))
    b = summarize(rollout(ctrl, cfg, range(4)))
    assert a == b
    assert a["episodes"] == 4
    assert a["succ_pct"] + a["fail_pct"] + a["timeout_pct"] == pytest.approx(100.0)


def test_wilson_interval():
    lo, hi = wilson_interval(90, 100)
    assert lo == pytest.approx(0.82564, abs=1e-5)
    assert hi == pytest.approx(0.94478, abs=1e-5)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(10, 10)
    assert hi == pytest.approx(1.0) and 0.7 < lo < 0.73


# --- linear policy ---------------------------------------------------------------------

def test_linear_policy_shapes_and_text(rng):
    p = LinearPolicy(rng.normal(size=(9, OBS_DIM)), rng.normal(size=9))
    assert p.params.shape == (9, 16)
    assert LinearPolicy.from_text(p.to_text()) == p
    assert LinearPolicy.from_params(p.params) == p
    X = rng.normal(size=(4, OBS_DIM))
    assert np.allclose(p.predict(X), X @ p.weights.T + p.bias)
    with pytest.raises(ValueError):
        LinearPolicy(np.zeros((9, 14)))
    with pytest.raises(ValueError):
        LinearPolicy(bias=np.full(9, np.nan))
    with pytest.raises(ValueError):
        p.predict(np.zeros((2, 3)))


def test_zero_policy_acts_zero():
    cfg = SimConfig()
    s = reset(cfg, 0)
    assert LinearPolicy.zeros().act(s, cfg) == Action.zero()


# --- random search -------------------------------------------------------------------------

def test_random_search_degenerate_cases():
    cfg = translation_subtask(SimConfig(), 10)
    init = LinearPolicy.zeros()
    p, hist = random_search(init, 0, 4, 0.05, cfg, seeds=range(2))
    assert p == init and len(hist) == 1
    p, hist = random_search(init, 3, 4, 0.0, cfg, seeds=range(2))
    assert p == init and len(set(hist)) == 1
    with pytest.raises(ValueError):
        random_search(init, 1, 0, 0.05, cfg)


def test_random_search_monotone_and_deterministic():
    cfg = translation_subtask(SimConfig(), 10)
    runs = [random_search(LinearPolicy.zeros(), 4, 6, 0.05, cfg, seeds=range(3), rows=(0, 1, 2), random_state=1)
            for _ in range(2)]
    (p1, h1), (p2, h2) = runs
    assert h1 == h2 and p1 == p2
    assert all(b >= a for a, b in zip(h1, h1[1:]))
    assert np.all(p1.params[3:] == 0.0)  # rows outside the mask stay untouched


def test_random_search_estimator():
    est = RandomSearchPolicy(iterations=2, population=4, subtask_steps=10).fit(range(2))
    assert len(est.scores_) == 3
    assert est.score(range(2)) == pytest.approx(est.scores_[-1])
    assert est.predict(np.zeros((1, OBS_DIM))).shape == (1, 9)
    assert clone(est).get_params()["iterations"] == 2
    with pytest.raises(ValueError):
        RandomSearchPolicy(subtask="rotation").fit(range(2))
    with pytest.raises(ValueError):
        RandomSearchPolicy().fit([])


def test_translation_subtask_config():
    cfg = translation_subtask(SimConfig(perturbation=True))
    assert cfg.max_steps == 20
    assert cfg.reset_rot_roll_yaw == 0.0 and cfg.reset_rot_pitch == 0.0
    assert not cfg.perturbation
    assert math.isclose(cfg.reset_cube_half_extent, 0.15)
