# SPDX-License-Identifier: Apache-2.0
import json
import os
import random
from pathlib import Path

import pytest

import arguagent

FIXTURES = Path(os.environ.get("ARGUAGENT_TEST_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))


def members(levels, clusters):
    return [
        {"student_id": f"s{i}", "level": level, "cluster_id": cluster}
        for i, (level, cluster) in enumerate(zip(levels, clusters))
    ]


def qwk_oracle(a, b, k=5):
    n = len(a)
    observed = [[0] * k for _ in range(k)]
    for x, y in zip(a, b):
        observed[x][y] += 1
    row = [sum(r) for r in observed]
    col = [sum(observed[i][j] for i in range(k)) for j in range(k)]
    num = den = 0.0
    for i in range(k):
        for j in range(k):
            w = (i - j) ** 2 / (k - 1) ** 2
            num += w * observed[i][j]
            den += w * row[i] * col[j] / n
    return 1.0 - num / den


def test_group_score_examples():
    assert arguagent.group_score(members([2, 2, 3], [0, 1, 0]))["total"] == 70
    assert arguagent.group_score(members([1, 1, 1], [0, 0, 0]))["total"] == -10
    assert arguagent.group_score(members([0, 2, 2], [0, 1, 2]))["total"] == -60


def test_form_groups_is_a_partition():
    rng = random.Random(3)
    students = members([rng.randrange(5) for _ in range(24)], [rng.randrange(4) for _ in range(24)])
    grouping = arguagent.form_groups({"class_id": "py", "students": students}, seed=9)
    ids = sorted(i for g in grouping["groups"] for i in g["member_ids"])
    assert ids == sorted(s["student_id"] for s in students)
    assert grouping == arguagent.form_groups({"class_id": "py", "students": students}, seed=9)
    baseline = arguagent.random_grouping({"class_id": "py", "students": students}, seed=9)
    assert grouping["total_score"] >= baseline["total_score"]


def test_simulation_small_run():
    report = arguagent.run_simulation({"n_classes": 5, "seed": 2})
    assert report["policies"]["optimizer"]["group_count"] == 40
    assert report["policies"]["optimizer"]["both_criteria_rate"] >= report["policies"]["random"]["both_criteria_rate"]


def test_metrics_against_oracles():
    rng = random.Random(7)
    for _ in range(50):
        a = [rng.randrange(5) for _ in range(30)]
        b = [rng.randrange(5) for _ in range(30)]
        assert arguagent.quadratic_weighted_kappa(a, b) == pytest.approx(qwk_oracle(a, b), abs=1e-12)
    matrix = {"coders": ["a", "b"], "items": ["i", "j", "k"], "ratings": [[0, 2, 4], [0, 2, 4]]}
    assert arguagent.krippendorff_alpha_ordinal(matrix) == 1.0
    assert arguagent.cohens_kappa_nominal(["ALL", "SOME_NO"], ["ALL", "SOME_NO"]) == 1.0
    d = arguagent.improvement_decomposition(0.531, 0.686, 0.708)
    assert d["prompt_delta"] == 0.155
    assert d["model_delta"] == 0.022


def test_stance_and_scoring():
    assert arguagent.classify_stance("not all objects change") == "SOME_NO"
    assert arguagent.classify_stance("All objects technically deform even a little bit") == "ALL"
    roster = json.loads((FIXTURES / "class24.json").read_text())
    scores = arguagent.score(roster, backend="fixture")
    levels = {a["student_id"]: a["level"] for a in scores["assessments"]}
    assert [levels[f"s0{i}"] for i in range(1, 6)] == [0, 1, 2, 3, 4]
    assert len(arguagent.score(roster)["assessments"]) == 24


def test_errors_carry_their_kind():
    with pytest.raises(arguagent.ArguAgentError, match="GroupTooSmall"):
        arguagent.group_score(members([1], [0]))
    with pytest.raises(arguagent.ArguAgentError, match="ParseError"):
        arguagent._core.form_groups("{", 3, 0, 5)
