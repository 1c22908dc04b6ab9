"""Built-in scenario corpus.

Six scenarios spanning network sizes 1, 2, 2, 3, 5 and 8, every topology
family and both covariance shorthand forms.  ``scenario_dict`` returns the
canonical JSON document (what the files under scenarios/ hold) and
``build_scenario`` the constructed model and schedule.
"""

from __future__ import annotations

import copy

from .config import ScenarioConfig, scenario_from_dict

_RING5 = [[1, 2], [2, 3], [3, 4], [4, 5], [1, 5], [1, 3]]
_RING8 = [[i, i + 1] for i in range(1, 8)] + [[1, 8], [1, 5], [3, 7]]

_CORPUS = {
    "n1": {
        "name": "n1",
        "model": {"m0": [0.0], "m1": [1.0], "covariance": "identity"},
        "network": {"topology": "static", "edges": []},
        "experiment": {"n_trials": 20000, "master_seed": 101},
    },
    "identity2": {
        "name": "identity2",
        "model": {"m0": [0.0, 0.0], "m1": [1.0, 1.0], "covariance": "identity"},
        "network": {"topology": "static", "edges": [[1, 2]]},
        "experiment": {"n_trials": 20000, "master_seed": 102},
    },
    "correlated2": {
        "name": "correlated2",
        "model": {"m0": [0.0, 0.0], "m1": [1.0, 1.0], "covariance": "exponential(0.5)"},
        "network": {"topology": "static", "edges": [[1, 2]]},
        "experiment": {"n_trials": 20000, "master_seed": 103},
    },
    "ref3": {
        "name": "ref3",
        "model": {
            "m0": [0.0, 0.0, 0.0],
            "m1": [0.6, 0.6, 0.6],
            "covariance": "exponential(0.5)",
        },
        "network": {
            "topology": "alternating-links",
            "link_cycle": [[[1, 2]], [[2, 3]]],
        },
        "experiment": {"n_trials": 100000, "master_seed": 104},
    },
    "rand5": {
        "name": "rand5",
        "model": {
            "m0": [0.0, 0.0, 0.0, 0.0, 0.0],
            "m1": [0.5, 0.5, 0.5, 0.5, 0.5],
            "covariance": "exponential(0.4)",
        },
        "network": {
            "topology": "random-subgraph",
            "edges": _RING5,
            "period": 4,
            "seed": 20240817,
            "keep_prob": 0.7,
        },
        "experiment": {"n_trials": 100000, "master_seed": 105},
    },
    "n8": {
        "name": "n8",
        "model": {
            "m0": [0.0] * 8,
            "m1": [0.4] * 8,
            "covariance": "exponential(0.3)",
        },
        "network": {"topology": "static", "edges": _RING8},
        "experiment": {"n_trials": 50000, "master_seed": 106},
    },
}

CORPUS = tuple(_CORPUS)


def scenario_dict(name: str) -> dict:
    """Deep copy of the canonical config document for ``name``."""
    if name not in _CORPUS:
        raise KeyError(f"unknown scenario {name!r}; corpus: {', '.join(CORPUS)}")
    return copy.deepcopy(_CORPUS[name])


def scenario_config(name: str) -> ScenarioConfig:
    return scenario_from_dict(scenario_dict(name))


def build_scenario(name: str):
    """(model, schedule, config) for a corpus scenario."""
    config = scenario_config(name)
    return config.build_model(), config.build_schedule(), config
