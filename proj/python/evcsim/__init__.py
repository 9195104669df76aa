"""Python front-end for the hybrid elastic cluster simulator."""

import json
import os
from dataclasses import dataclass

from . import _core
from ._core import EvcError, accrue_cost

__all__ = ["EvcError", "RunOutput", "accrue_cost", "compare", "plan_topology", "run", "validate"]


def _scenario_text(scenario):
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    with open(os.fspath(scenario), encoding="utf-8") as handle:
        return handle.read()


@dataclass(frozen=True)
class RunOutput:
    summary: dict
    events: list
    timeline_csv: str


def validate(scenario):
    """Every problem found in a scenario (path or dict); empty when valid."""
    return _core.check(_scenario_text(scenario))


def run(scenario, seed=None):
    """Simulate a scenario; `seed` defaults to the scenario's own seed."""
    raw = _core.run(_scenario_text(scenario), seed)
    events = [json.loads(line) for line in raw["events"].splitlines() if line]
    return RunOutput(json.loads(raw["summary"]), events, raw["timeline"])


def compare(a, b, seed=0):
    return json.loads(_core.compare(_scenario_text(a), _scenario_text(b), seed))


def plan_topology(scenario):
    return json.loads(_core.plan_topology(_scenario_text(scenario)))
