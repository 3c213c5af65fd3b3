import json

import pytest

from vrr import harness
from vrr.agent import TrainingRun
from vrr.harness import (EVAL_SEED_BASE, ExperimentConfig, MetricsReport,
                         QUOTED_BASELINES, _eval_levels)


def test_config_validation():
    ExperimentConfig().validate()
    with pytest.raises(ValueError):
        ExperimentConfig(game="pong").validate()
    with pytest.raises(ValueError):
        ExperimentConfig(size=3).validate()
    with pytest.raises(ValueError):
        ExperimentConfig(rotations=(45,)).validate()
    with pytest.raises(ValueError):
        ExperimentConfig(episodes=0).validate()
    with pytest.raises(ValueError):
        # eval seeds must stay disjoint from training streams
        ExperimentConfig(eval_seed=3).validate()


def test_eval_levels_deterministic_and_fresh():
    a = _eval_levels("sokoban", 7, 1, (0,), EVAL_SEED_BASE, 10)
    b = _eval_levels("sokoban", 7, 1, (0,), EVAL_SEED_BASE, 10)
    assert all(x == y for x, y in zip(a, b))
    assert all(lvl.seed >= EVAL_SEED_BASE for lvl in a)


def test_metrics_report_json_is_stable():
    report = MetricsReport("demo", {"x": 1})
    report.conditions.append({"condition": "c", "return_mean": 1.0})
    assert report.to_json() == report.to_json()
    parsed = json.loads(report.to_json())
    assert parsed["name"] == "demo"
    assert report.ok
    report.invariant_failures.append("boom")
    assert not report.ok


def test_quoted_baselines_are_annotated_not_computed():
    assert "quoted" in QUOTED_BASELINES["note"]
    assert QUOTED_BASELINES["table1"]["sokoban"]["scratch"]["steps"] == 440
    assert QUOTED_BASELINES["table1"]["doorkey"]["scratch"]["steps"] == 1058
    assert QUOTED_BASELINES["table1"]["sokoban"]["human"]["steps"] == 81
    assert QUOTED_BASELINES["table1"]["doorkey"]["human"]["steps"] == 89


def test_emit_curves_format(tmp_path):
    run = TrainingRun(returns=[0.0, 1.0], steps_at_episode=[10, 14],
                      rule_counts=[5, 7], total_steps=14)
    path = tmp_path / "curves.csv"
    harness.emit_curves(run, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "step,return,rule_count"
    assert lines[1] == "10,0.0,5"
    counts = [int(l.split(",")[2]) for l in lines[1:]]
    assert counts == sorted(counts)


def test_artifact_save_load_round_trip(tmp_path, sokoban_trained):
    rules, _run, pipeline = sokoban_trained
    path = tmp_path / "table.rules"
    harness.save_artifacts(rules, pipeline, path)
    loaded_rules, loaded_pipeline = harness.load_artifacts(path)
    assert loaded_rules.save() == rules.save()
    assert loaded_pipeline.vocab.content_hash() == pipeline.vocab.content_hash()


def test_run_train_and_eval_small(tmp_path):
    cfg = ExperimentConfig(game="sokoban", size=5, boxes=1,
                           train_seeds=(1,), episodes=10, max_steps=6000,
                           out_dir=str(tmp_path))
    rules, run, pipeline, report = harness.run_train(cfg)
    assert report.ok and run.converged
    eval_report = harness.run_eval(cfg, rules, pipeline)
    assert eval_report.ok
    cond = eval_report.conditions[0]
    assert cond["episodes"] == 10
    assert cond["return_mean"] == 1.0
    # byte-identical rerun
    again = harness.run_eval(cfg, rules, pipeline)
    assert again.to_json() == eval_report.to_json()
