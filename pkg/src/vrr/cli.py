"""Command-line experiment runner.

    vrr train    --game sokoban --size 7 --boxes 1 --seed 0 --rules out/s.rules
    vrr eval     --game sokoban --size 13 --rules out/s.rules --episodes 100
    vrr demo-import --game sokoban --log demo.log --rules out/d.rules
    vrr table1 | table2 | table3 | boxsweep   [--out DIR]
    vrr dump-rules --rules out/s.rules
    vrr serve    --port 7601 [--ws-port 7602]

Flags override a `key=value` config file (--config). Exit code is 0 only when
every invariant check in the run passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .agent import train_from_demonstrations
from .gridworld import objects as obj
from .harness import ExperimentConfig, MetricsReport, Timer
from .planner import DEFAULT_BUDGET


def _parse_rotations(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _load_config_file(path: str) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _build_config(args) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        raw = _load_config_file(args.config)
        casts = {"size": int, "boxes": int, "seed": int, "episodes": int,
                 "budget": int, "max_steps": int}
        for k, v in raw.items():
            if k == "rotations":
                values["rotations"] = _parse_rotations(v)
            elif k == "learn":
                values["learn"] = v.lower() in ("on", "true", "1")
            elif k in casts:
                values[k] = casts[k](v)
            else:
                values[k] = v
    for k in ("game", "size", "boxes", "episodes", "budget", "max_steps"):
        v = getattr(args, k.replace("-", "_"), None)
        if v is not None:
            values[k] = v
    if getattr(args, "rotations", None):
        values["rotations"] = _parse_rotations(args.rotations)
    if getattr(args, "seed", None) is not None:
        values["train_seeds"] = (args.seed,)
    if getattr(args, "learn", None):
        values["learn"] = args.learn == "on"
    seed = values.pop("seed", None)
    if seed is not None and "train_seeds" not in values:
        values["train_seeds"] = (int(seed),)
    if getattr(args, "out", None):
        values["out_dir"] = args.out
    cfg = ExperimentConfig(**{k: v for k, v in values.items()
                              if k in ExperimentConfig.__dataclass_fields__})
    cfg.validate()
    return cfg


def _finish(report: MetricsReport, out_dir: str, timer: Timer) -> int:
    path = harness.write_report(report, out_dir)
    timing = Path(out_dir) / f"{report.name}.timing.json"
    timing.write_text(json.dumps({"wall_clock_s": round(timer.elapsed(), 3)}) + "\n")
    print(report.to_json(), end="")
    print(f"report: {path}", file=sys.stderr)
    if not report.ok:
        print("INVARIANT FAILURES:", report.invariant_failures, file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vrr", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--game", choices=(obj.SOKOBAN, obj.DOORKEY))
        p.add_argument("--size", type=int)
        p.add_argument("--boxes", type=int)
        p.add_argument("--rotations", help="e.g. 0,90,180,270")
        p.add_argument("--seed", type=int)
        p.add_argument("--episodes", type=int)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--max-steps", type=int, dest="max_steps")
        p.add_argument("--learn", choices=("on", "off"))
        p.add_argument("--rules", help="rule-set path (reads/writes .vocab sibling)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="key=value config file")

    for name in ("train", "eval", "demo-import", "table1", "table2",
                 "table3", "boxsweep", "dump-rules"):
        common(sub.add_parser(name))
    sub.choices["demo-import"].add_argument("--log", required=True)
    serve = sub.add_parser("serve")
    serve.add_argument("--port", type=int, default=7601)
    serve.add_argument("--ws-port", type=int, default=None)
    serve.add_argument("--rules")
    args = parser.parse_args(argv)

    if args.cmd == "serve":
        from .server import serve_forever
        serve_forever(port=args.port, ws_port=args.ws_port,
                      rules_path=args.rules)
        return 0

    timer = Timer()
    cfg = _build_config(args)

    if args.cmd == "train":
        rules, run, pipeline, report = harness.run_train(cfg)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        harness.emit_curves(run, out / "curves.csv")
        if args.rules:
            harness.save_artifacts(rules, pipeline, args.rules)
        return _finish(report, cfg.out_dir, timer)

    if args.cmd == "eval":
        if not args.rules:
            parser.error("eval requires --rules")
        rules, pipeline = harness.load_artifacts(args.rules)
        report = harness.run_eval(cfg, rules, pipeline)
        return _finish(report, cfg.out_dir, timer)

    if args.cmd == "demo-import":
        if not args.rules:
            parser.error("demo-import requires --rules (output path)")
        log_text = Path(args.log).read_text()
        from .agent import perception_warmup, _level_stream, TrainConfig
        tc = TrainConfig(kind=cfg.game, size=cfg.size, n_boxes=cfg.boxes,
                         seed=cfg.train_seeds[0])
        pipeline = perception_warmup(_level_stream(tc, "warm"),
                                     tc.warmup_steps, 16, tc.seed)
        rules = pipeline.new_ruleset(cfg.game)
        train_from_demonstrations(log_text, rules)
        harness.save_artifacts(rules, pipeline, args.rules)
        report = MetricsReport("demo-import", {"log": args.log})
        report.conditions.append({"rules": len(rules)})
        return _finish(report, cfg.out_dir, timer)

    if args.cmd == "dump-rules":
        if not args.rules:
            parser.error("dump-rules requires --rules")
        rules, pipeline = harness.load_artifacts(args.rules)
        print(f"# vocabulary ({len(pipeline.vocab)} tiles, "
              f"hash {pipeline.vocab.content_hash()[:16]}..)")
        for line in pipeline.vocab.dump().splitlines():
            print(f"#   {line}")
        print(rules.dump_text(obj.action_names(rules.kind)), end="")
        return 0

    runners = {"table1": harness.run_table1, "table2": harness.run_table2,
               "table3": harness.run_table3, "boxsweep": harness.run_boxsweep}
    report = runners[args.cmd](cfg)
    return _finish(report, cfg.out_dir, timer)


if __name__ == "__main__":
    sys.exit(main())
