"""Experiment runner: training/eval protocols behind the tables and figures.

Reports are deterministic JSON (sorted keys, no wall-clock inside); timings
are written separately so reruns stay byte-comparable. Published baseline
numbers appear only as quoted annotations and are never recomputed.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import gridworld as gw
from .agent import (ObservationPipeline, TrainConfig, evaluate,
                    perception_warmup, train_from_demonstrations,
                    train_from_scratch, _level_stream)
from .demos import scripted_doorkey_demo, scripted_sokoban_demo
from .gridworld import objects as obj
from .planner import DEFAULT_BUDGET
from .rules import RuleSet

EVAL_EPISODES = 100
EVAL_SEED_BASE = 1_000_000  # disjoint from training-side seed streams by construction

# Reported values quoted from the publication for side-by-side display.
# Never recomputed here; deep baselines are out of scope.
QUOTED_BASELINES = {
    "table1": {
        "sokoban": {"scratch": {"steps": 440, "return": 1.0, "avg_steps": 4.528},
                    "human": {"steps": 81, "return": 0.96, "avg_steps": 4.239}},
        "doorkey": {"scratch": {"steps": 1058, "return": 1.0, "avg_steps": 12.724},
                    "human": {"steps": 89, "return": 1.0, "avg_steps": 10.249}},
    },
    "table2": {
        "sokoban_7x7": {"vrr": 1.0, "dreamerv2": 0.65, "impala": 0.76, "ppo": 0.64},
        "sokoban_13x13": {"vrr": 1.0, "dreamerv2": 0.04, "impala": 0.11, "ppo": 0.0},
        "doorkey_6x6": {"vrr": 1.0, "dreamerv2": 1.0, "impala": 1.0, "ppo": 1.0},
        "doorkey_32x32": {"vrr": 1.0, "dreamerv2": 0.0, "impala": 0.0, "ppo": 0.0},
    },
    "table3": {
        "original": {"vrr": 1.0, "dreamerv2": 0.91, "impala": 1.0, "ppo": 1.0},
        "rotated": {"vrr": 1.0, "dreamerv2": 0.07, "impala": 0.43, "ppo": 0.37},
    },
    "note": "quoted from the publication; not recomputed",
}


@dataclass
class ExperimentConfig:
    game: str = obj.SOKOBAN
    size: int = 7
    boxes: int = 1
    rotations: tuple[int, ...] = (0,)
    train_seeds: tuple[int, ...] = (0,)
    eval_seed: int = EVAL_SEED_BASE
    episodes: int = EVAL_EPISODES
    learn: bool = True
    max_steps: int = 20_000
    budget: int = DEFAULT_BUDGET
    rules_in: str | None = None
    rules_out: str | None = None
    out_dir: str = "out"

    def validate(self) -> None:
        if self.game not in (obj.SOKOBAN, obj.DOORKEY):
            raise ValueError(f"unknown game {self.game!r}")
        if self.size < 5:
            raise ValueError("size must be >= 5")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        for r in self.rotations:
            if r not in gw.ROTATIONS:
                raise ValueError(f"bad rotation {r}")
        if self.eval_seed < EVAL_SEED_BASE:
            raise ValueError("eval seeds must come from the reserved range "
                             f">= {EVAL_SEED_BASE} (disjoint from training)")


@dataclass
class MetricsReport:
    name: str
    config: dict
    conditions: list[dict] = field(default_factory=list)
    quoted_baselines: dict = field(default_factory=dict)
    invariant_failures: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "config": self.config,
            "conditions": self.conditions,
            "quoted_baselines": self.quoted_baselines,
            "invariant_failures": self.invariant_failures,
        }
        return json.dumps(payload, sort_keys=True, indent=2,
                          separators=(",", ": ")) + "\n"

    @property
    def ok(self) -> bool:
        return not self.invariant_failures


def _eval_levels(game: str, size: int, boxes: int, rotations, seed: int,
                 episodes: int) -> list[gw.Level]:
    """Fresh evaluation levels; multi-box boards are solvable by the
    generator's reverse-play construction, so no post-filtering is needed."""
    rng = random.Random(f"eval:{seed}")
    out = []
    for _ in range(episodes):
        s = EVAL_SEED_BASE + rng.randrange(2**30)
        rot = rotations[rng.randrange(len(rotations))]
        out.append(gw.generate(game, s, size, boxes, rot))
    return out


def _condition(name: str, rules: RuleSet, pipeline: ObservationPipeline,
               levels, budget: int, report: MetricsReport,
               extra: dict | None = None) -> dict:
    ret, steps, logs = evaluate(rules, pipeline, levels, budget)
    rets = [l.ret for l in logs]
    lens = [l.env_steps for l in logs]
    cond = {
        "condition": name,
        "episodes": len(logs),
        "return_mean": round(float(np.mean(rets)), 6),
        "return_std": round(float(np.std(rets)), 6),
        "steps_mean": round(float(np.mean(lens)), 6),
        "steps_std": round(float(np.std(lens)), 6),
        "nodes_expanded": int(sum(l.nodes_expanded for l in logs)),
        "wins": int(sum(1 for l in logs if l.ret > 0)),
    }
    if extra:
        cond.update(extra)
    report.conditions.append(cond)
    return cond


def _train(game: str, size: int, boxes: int, rotations, seed: int,
           max_steps: int, budget: int):
    cfg = TrainConfig(kind=game, size=size, n_boxes=boxes,
                      rotations=tuple(rotations), seed=seed,
                      max_steps=max_steps, budget=budget)
    rules, run, pipeline = train_from_scratch(cfg)
    if not run.converged:
        raise RuntimeError(
            f"training did not converge within {max_steps} steps "
            f"({game} size={size} seed={seed})")
    return rules, run, pipeline


def _check_run_invariants(run, report: MetricsReport, label: str) -> None:
    counts = run.rule_counts
    if any(b < a for a, b in zip(counts, counts[1:])):
        report.invariant_failures.append(f"{label}: rule count decreased")
    if run.total_steps < 0 or len(run.returns) != len(run.steps_at_episode):
        report.invariant_failures.append(f"{label}: malformed curves")


def run_table1(cfg: ExperimentConfig) -> MetricsReport:
    """Scratch vs scripted-demonstration training, both games."""
    cfg.validate()
    report = MetricsReport("table1", asdict(cfg),
                           quoted_baselines=QUOTED_BASELINES["table1"])
    for game, size in ((obj.SOKOBAN, 7), (obj.DOORKEY, 6)):
        for seed in cfg.train_seeds:
            rules, run, pipeline = _train(game, size, cfg.boxes, (0,), seed,
                                          cfg.max_steps, cfg.budget)
            _check_run_invariants(run, report, f"{game} scratch s{seed}")
            levels = _eval_levels(game, size, cfg.boxes, (0,), cfg.eval_seed,
                                  cfg.episodes)
            _condition(f"{game}_scratch_seed{seed}", rules, pipeline, levels,
                       cfg.budget, report,
                       extra={"train_steps": run.total_steps,
                              "train_episodes": run.episodes,
                              "rules": len(rules)})

            demo_cfg = TrainConfig(kind=game, size=size, seed=seed)
            demo_pipe = perception_warmup(_level_stream(demo_cfg, "warm"),
                                          demo_cfg.warmup_steps, 16, seed)
            if game == obj.SOKOBAN:
                log = scripted_sokoban_demo(demo_pipe, size)
            else:
                log = scripted_doorkey_demo(demo_pipe, size)
            demo_rules = demo_pipe.new_ruleset(game)
            train_from_demonstrations(log, demo_rules)
            demo_len = len(log.strip().split("\n")) - 4
            _condition(f"{game}_human_seed{seed}", demo_rules, demo_pipe,
                       levels, cfg.budget, report,
                       extra={"train_steps": demo_len,
                              "warmup_steps": demo_cfg.warmup_steps,
                              "rules": len(demo_rules)})
    return report


def run_table2(cfg: ExperimentConfig) -> MetricsReport:
    """Zero-shot board-size transfer: train small, evaluate small and large."""
    cfg.validate()
    report = MetricsReport("table2", asdict(cfg),
                           quoted_baselines=QUOTED_BASELINES["table2"])
    plans = (
        (obj.SOKOBAN, 7, ((obj.SOKOBAN, 7), (obj.SOKOBAN, 13))),
        (obj.DOORKEY, 6, ((obj.DOORKEY, 6), (obj.DOORKEY, 32))),
    )
    for game, train_size, evals in plans:
        for seed in cfg.train_seeds:
            rules, run, pipeline = _train(game, train_size, cfg.boxes, (0,),
                                          seed, cfg.max_steps, cfg.budget)
            _check_run_invariants(run, report, f"{game} s{seed}")
            for egame, esize in evals:
                levels = _eval_levels(egame, esize, cfg.boxes, (0,),
                                      cfg.eval_seed + esize, cfg.episodes)
                _condition(f"{egame}_{esize}x{esize}_seed{seed}", rules,
                           pipeline, levels, cfg.budget, report,
                           extra={"train_size": train_size,
                                  "train_steps": run.total_steps})
    return report


def run_table3(cfg: ExperimentConfig) -> MetricsReport:
    """Rotated DoorKey: rotation-uniform training, rotated and control evals."""
    cfg.validate()
    report = MetricsReport("table3", asdict(cfg),
                           quoted_baselines=QUOTED_BASELINES["table3"])
    rotations = cfg.rotations if len(cfg.rotations) > 1 else gw.ROTATIONS
    for seed in cfg.train_seeds:
        rules, run, pipeline = _train(obj.DOORKEY, 6, 1, rotations, seed,
                                      cfg.max_steps, cfg.budget)
        _check_run_invariants(run, report, f"doorkey rotated s{seed}")
        rotated = _eval_levels(obj.DOORKEY, 6, 1, rotations,
                               cfg.eval_seed, cfg.episodes)
        _condition(f"rotated_seed{seed}", rules, pipeline, rotated,
                   cfg.budget, report,
                   extra={"rotations": list(rotations),
                          "train_steps": run.total_steps})
        control = _eval_levels(obj.DOORKEY, 6, 1, (0,),
                               cfg.eval_seed + 1, cfg.episodes)
        _condition(f"original_seed{seed}", rules, pipeline, control,
                   cfg.budget, report, extra={"rotations": [0]})
    return report


def run_boxsweep(cfg: ExperimentConfig) -> MetricsReport:
    """Train on one box, evaluate on one through four."""
    cfg.validate()
    report = MetricsReport("boxsweep", asdict(cfg),
                           quoted_baselines={"note": QUOTED_BASELINES["note"]})
    for seed in cfg.train_seeds:
        rules, run, pipeline = _train(obj.SOKOBAN, 7, 1, (0,), seed,
                                      cfg.max_steps, cfg.budget)
        _check_run_invariants(run, report, f"boxsweep s{seed}")
        means = []
        for boxes in (1, 2, 3, 4):
            levels = _eval_levels(obj.SOKOBAN, 7, boxes, (0,),
                                  cfg.eval_seed + boxes, cfg.episodes)
            cond = _condition(f"boxes{boxes}_seed{seed}", rules, pipeline,
                              levels, cfg.budget, report,
                              extra={"boxes": boxes})
            means.append(cond["return_mean"])
        if any(b > a + 1e-9 for a, b in zip(means, means[1:])):
            report.invariant_failures.append(
                f"seed {seed}: return not non-increasing in box count {means}")
    return report


def run_train(cfg: ExperimentConfig):
    """Plain training run; returns (rules, run, pipeline, report)."""
    cfg.validate()
    report = MetricsReport("train", asdict(cfg))
    rules, run, pipeline = _train(cfg.game, cfg.size, cfg.boxes,
                                  cfg.rotations, cfg.train_seeds[0],
                                  cfg.max_steps, cfg.budget)
    _check_run_invariants(run, report, "train")
    report.conditions.append({
        "condition": "train",
        "train_steps": run.total_steps,
        "episodes": run.episodes,
        "rules": len(rules),
        "converged": run.converged,
    })
    return rules, run, pipeline, report


def run_eval(cfg: ExperimentConfig, rules: RuleSet,
             pipeline: ObservationPipeline) -> MetricsReport:
    cfg.validate()
    report = MetricsReport("eval", asdict(cfg))
    levels = _eval_levels(cfg.game, cfg.size, cfg.boxes, cfg.rotations,
                          cfg.eval_seed, cfg.episodes)
    _condition("eval", rules, pipeline, levels, cfg.budget, report)
    return report


def emit_curves(run, path) -> None:
    """Step-indexed CSV (`step,return,rule_count`) for external plotting."""
    lines = ["step,return,rule_count"]
    for step, ret, count in zip(run.steps_at_episode, run.returns,
                                run.rule_counts):
        lines.append(f"{step},{ret},{count}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(report: MetricsReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{report.name}.json"
    path.write_text(report.to_json())
    return path


def save_artifacts(rules: RuleSet, pipeline: ObservationPipeline,
                   path: str | Path) -> None:
    """Rule table plus its vocabulary bundle (sibling `.vocab` file)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rules.vocab_hash = pipeline.vocab.content_hash()
    path.write_bytes(rules.save())
    path.with_suffix(path.suffix + ".vocab").write_bytes(pipeline.save())


def load_artifacts(path: str | Path) -> tuple[RuleSet, ObservationPipeline]:
    path = Path(path)
    pipeline = ObservationPipeline.load(
        path.with_suffix(path.suffix + ".vocab").read_bytes())
    rules = RuleSet.load(path.read_bytes(),
                         expect_vocab_hash=pipeline.vocab.content_hash())
    return rules, pipeline


class Timer:
    def __init__(self):
        self.t0 = time.time()

    def elapsed(self) -> float:
        return time.time() - self.t0
