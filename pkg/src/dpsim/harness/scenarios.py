"""Canned configurations reproducing the published experiments on the Intel Lab trace."""

from __future__ import annotations

from enum import Enum

from .config import ConfigError, SweepConfig, parse_config

__all__ = ["FIG9_CLUSTER", "PINNED_SLICE", "Scenario", "scenario_paper"]

# first 5,000 cleaned readings per node
PINNED_SLICE = (0, 5000)
FIG9_CLUSTER = {"head": 1, "members": [1, 33, 34, 35, 36, 37]}
FIG9_PREDICTORS = ["MA(2)", "MA(4)", "LMS", "LMS-VSS"]
ALL_PREDICTORS = ["MA(2)", "MA(4)", "MA(10)", "ARMA(2,2)", "LMS", "LMS-VSS"]


class Scenario(str, Enum):
    FIG5 = "Fig5"
    FIG6_7 = "Fig6_7"
    FIG9 = "Fig9"
    AGGREGATION97 = "Aggregation97"


def scenario_paper(
    name: Scenario | str, readings: str | None = None, locations: str | None = None
) -> SweepConfig:
    try:
        scenario = Scenario(name)
    except ValueError:
        choices = ", ".join(s.value for s in Scenario)
        raise ConfigError(f"unknown scenario {name!r} (choose from {choices})") from None
    dataset = {"readings": readings, "locations": locations, "slice": list(PINNED_SLICE)}
    if scenario is Scenario.FIG5:
        data = {
            "dataset": {**dataset, "nodes": [13, 49]},
            "predictors": ALL_PREDICTORS,
            "topology": {"mode": "StarDirect"},
        }
    elif scenario is Scenario.FIG6_7:
        data = {
            "dataset": {**dataset, "nodes": "all", "require_full_slice": True},
            "predictors": ["MA(2)", "MA(4)", "MA(10)", "ARMA(2,2)"],
            "topology": {"mode": "StarDirect"},
        }
    elif scenario is Scenario.FIG9:
        data = {
            "dataset": {**dataset, "nodes": FIG9_CLUSTER["members"]},
            "predictors": FIG9_PREDICTORS,
            "grid": {"values": [0.5]},
            "topology": {"mode": "Relay", "clusters": [FIG9_CLUSTER]},
        }
    else:
        data = {
            "dataset": {**dataset, "nodes": FIG9_CLUSTER["members"]},
            "predictors": ["MA(2)"],
            "grid": {"values": [0.5]},
            "topology": {"mode": "Aggregation", "clusters": [FIG9_CLUSTER], "aggregate": "Average"},
        }
    return parse_config({"name": scenario.value, **data})
