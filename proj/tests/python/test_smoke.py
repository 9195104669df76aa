import json
import os
from pathlib import Path

import pytest

import evcsim

FIXTURES = Path(os.environ.get("EVC_FIXTURES_DIR", Path(__file__).resolve().parents[2] / "scenarios"))


def fixture(name):
    return FIXTURES / name


def test_validate_reports_overlap():
    assert evcsim.validate(fixture("paper-usecase.json")) == []
    problems = evcsim.validate(fixture("overlapping-subnets.json"))
    assert problems and problems[0].startswith("subnet overlap")


def test_run_summary_within_bands():
    out = evcsim.run(fixture("paper-usecase.json"))
    assert 0.56 <= out.summary["utilization"] <= 0.76
    assert 0.70 <= sum(out.summary["cost_by_site"].values()) <= 0.80
    assert out.events[0]["kind"]
    assert out.timeline_csv.startswith("node,state,enter_s,exit_s\n")


def test_run_is_deterministic_and_accepts_dicts():
    doc = json.loads(fixture("cesnet-only.json").read_text())
    a = evcsim.run(doc, seed=7)
    b = evcsim.run(doc, seed=7)
    assert a.events == b.events
    assert a.summary == b.summary


def test_empty_workload_has_no_utilization():
    assert evcsim.run(fixture("empty-workload.json")).summary["utilization"] is None


def test_compare_identical_is_zero():
    cmp = evcsim.compare(fixture("paper-usecase.json"), fixture("paper-usecase.json"), seed=42)
    assert cmp["makespan_delta"] == 0
    assert cmp["cost_delta"] == 0


def test_plan_topology_single_central_point():
    plan = evcsim.plan_topology(fixture("paper-usecase.json"))
    assert plan["central_points"] == ["fe"]
    assert plan["vrouters"] == {"aws": "vrouter-aws"}


def test_accrue_cost():
    assert evcsim.accrue_cost(3600, 0.0464) == pytest.approx(0.0464)
    assert evcsim.accrue_cost(61, 3.6, 60) == pytest.approx(0.12)


def test_invalid_scenario_raises():
    with pytest.raises(evcsim.EvcError):
        evcsim.run(fixture("overlapping-subnets.json"))
