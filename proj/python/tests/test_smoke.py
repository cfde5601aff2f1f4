import math

import numpy as np
import pytest

import dissipanet as dn

TINY = {
    "learners": {
        "ddpg": {"actor_hidden": [8], "critic_hidden": [8], "batch_size": 16, "updates_per_episode": 4}
    },
    "run": {"episodes": 2, "horizon": 40, "eval_horizon": 80},
}


def test_project_affine_example():
    p = dn.project(np.zeros((1, 1)), np.array([2.0]), 2.0, np.array([3.0]))
    assert p["u"][0] == pytest.approx(1.0)
    assert p["a"][0] == pytest.approx(-2.0)
    assert p["residual"] >= -1e-12


def test_project_box_and_infeasible():
    p = dn.project(np.zeros((1, 1)), np.array([-1.0]), 0.0, np.array([5.0]),
                   lo=np.array([-1.0]), hi=np.array([1.0]))
    assert p["u"][0] <= 1.0
    with pytest.raises(dn.InfeasibleConstraint):
        dn.project(np.array([[1.0]]), np.array([0.0]), -1.0, np.array([0.2]),
                   lo=np.array([-0.5]), hi=np.array([0.5]))


def test_supplies():
    one = np.eye(1)
    # a^T S^T y - a^T R a - y^T Q y with Q = 0.25, S = 2, R = 0.5
    w = dn.eval_supply(0.25 * one, 2.0 * one, 0.5 * one, np.array([3.0]), np.array([1.5]))
    assert w == pytest.approx(9.0 - 4.5 - 0.5625)
    wd = dn.desired_supply(np.array([1.0]), np.array([0.0]), np.array([2.0]), 0.5, 0.25, one)
    assert wd == pytest.approx(0.5)
    r = dn.cumulative_supply_check([1.0, -2.0])
    assert not r["ok"] and r["first_violation"] == 1


def test_config_and_assumptions():
    resolved, digest = dn.resolve_config({"run": {"seed": 3}})
    assert resolved["run"]["seed"] == 3 and len(digest) == 16
    with pytest.raises(dn.ConfigError):
        dn.resolve_config({"run": {"nope": 1}})
    rep = dn.check_assumptions()
    assert rep["pass"]
    eq = dn.equilibrium()
    assert np.allclose(eq["V"], 48.0)
    assert np.all((eq["u"] > 0) & (eq["u"] < 1))


def test_train_evaluate_round_trip():
    out = dn.train(TINY)
    assert len(out["episodes"]) == 2
    assert all(e["min_b"] >= -1e-9 for e in out["episodes"])
    assert out["returns_csv"].startswith("episode,return")
    again = dn.train(TINY)
    assert again["returns_csv"] == out["returns_csv"]
    ev = dn.evaluate(out["checkpoint"], TINY)
    assert math.isfinite(ev["metrics"]["max_rel_v_error"])
    assert ev["trajectory_csv"].startswith("t,")
