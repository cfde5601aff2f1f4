"""Python wrapper over the dissipanet C++ core.

Configs are plain dicts (merged onto the defaults); checkpoints are dicts in
the same layout the CLI writes under "nodes".
"""

import json

from . import _dissipanet as _core
from ._dissipanet import (
    AssumptionFailure,
    ConfigError,
    DimensionError,
    Error,
    InfeasibleConstraint,
    InvalidParameter,
    NumericalDivergence,
    cumulative_supply_check,
    desired_supply,
    eval_supply,
    project,
)

__all__ = [
    "AssumptionFailure",
    "ConfigError",
    "DimensionError",
    "Error",
    "InfeasibleConstraint",
    "InvalidParameter",
    "NumericalDivergence",
    "check_assumptions",
    "cumulative_supply_check",
    "desired_supply",
    "equilibrium",
    "eval_supply",
    "evaluate",
    "project",
    "resolve_config",
    "train",
]


def _text(config):
    return None if config is None else json.dumps(config)


def resolve_config(config=None):
    """(resolved config dict, 16-digit hash)."""
    resolved, digest = _core.resolve_config(_text(config))
    return json.loads(resolved), digest


def check_assumptions(config=None):
    return json.loads(_core.check_assumptions(_text(config)))


def equilibrium(config=None):
    return _core.equilibrium(_text(config))


def train(config=None):
    """Runs training; returns dict with episodes, checkpoint and returns_csv."""
    episodes, checkpoint, returns_csv = _core.train(_text(config))
    return {
        "episodes": json.loads(episodes),
        "checkpoint": json.loads(checkpoint),
        "returns_csv": returns_csv,
    }


def evaluate(checkpoint, config=None, shield=True):
    """Deterministic rollout; returns dict with metrics, summary and trajectory_csv."""
    metrics, summary, trajectory = _core.evaluate(_text(config), json.dumps(checkpoint), shield)
    return {
        "metrics": json.loads(metrics),
        "summary": json.loads(summary),
        "trajectory_csv": trajectory,
    }
