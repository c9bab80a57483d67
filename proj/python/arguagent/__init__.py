# SPDX-License-Identifier: Apache-2.0
"""Python access to the ArguAgent grouping, metrics, stance and scoring core."""

import json

from . import _arguagent as _core
from ._arguagent import (
    ArguAgentError,
    classify_stance,
    cohens_kappa_nominal,
    group_sizes,
    quadratic_weighted_kappa,
)

__all__ = [
    "ArguAgentError",
    "agreement_report",
    "classify_stance",
    "cohens_kappa_nominal",
    "form_groups",
    "group_score",
    "group_sizes",
    "improvement_decomposition",
    "krippendorff_alpha_ordinal",
    "quadratic_weighted_kappa",
    "random_grouping",
    "run_simulation",
    "score",
]


def group_score(members):
    return json.loads(_core.group_score(json.dumps(members)))


def form_groups(grouping_input, group_size=3, seed=0, restarts=5):
    return json.loads(_core.form_groups(json.dumps(grouping_input), group_size, seed, restarts))


def random_grouping(grouping_input, group_size=3, seed=0):
    return json.loads(_core.random_grouping(json.dumps(grouping_input), group_size, seed))


def run_simulation(config=None, threads=0):
    return json.loads(_core.run_simulation(json.dumps(config or {}), threads))


def krippendorff_alpha_ordinal(matrix):
    return _core.krippendorff_alpha_ordinal(json.dumps(matrix))


def agreement_report(human, ai):
    return json.loads(_core.agreement_report(list(human), list(ai)))


def improvement_decomposition(uncalibrated, calibrated_small, calibrated_large):
    return json.loads(_core.improvement_decomposition(uncalibrated, calibrated_small, calibrated_large))


def score(roster, backend="heuristic", calibrated=True):
    return json.loads(_core.score(json.dumps(roster), backend, calibrated))
