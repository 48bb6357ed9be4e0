"""Command-line interface for running scenarios, batches, and analyses.

Verbs: run, batch, schelling, train, presets, print-default-config.
Configuration comes from a preset or a YAML file; `--set key=value`
overrides individual (dotted) keys.  `--out-dir` controls artifact
placement and can also be set through the ESGSIM_OUT_DIR environment
variable.  Exit code 0 on success, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import yaml

from . import learner as learner_mod
from . import schelling as schelling_mod
from .engine import (
    PRESETS,
    ConfigError,
    ScenarioConfig,
    run_batch,
    run_episode,
    scenario_preset,
    scripted_assignment,
    write_outputs,
    write_summary,
)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        config = scenario_preset(args.preset)
        doc = config.to_dict()
    elif args.config:
        try:
            with open(args.config) as f:
                doc = yaml.safe_load(f)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {args.config}: {exc}") from exc
    else:
        doc = ScenarioConfig().to_dict()
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError(f"--set expects key=value, got {override!r}")
        key, raw = override.split("=", 1)
        value = yaml.safe_load(raw)
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not a mapping")
        node[parts[-1]] = value
    return ScenarioConfig.from_dict(doc)


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    return Path(os.environ.get("ESGSIM_OUT_DIR", "out"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="named scenario preset (see `presets`)")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (dotted paths allowed), repeatable",
    )
    p.add_argument("--out-dir", help="output directory (or ESGSIM_OUT_DIR)")


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--company-policy",
        default="defector",
        help="scripted kind for all companies, or comma-separated per-company kinds",
    )
    p.add_argument(
        "--investor-policy",
        default="profit",
        help="scripted kind for all investors (profit | conscious), or comma-separated",
    )


def _parse_kinds(value: str) -> str | list[str]:
    return [v.strip() for v in value.split(",")] if "," in value else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esgsim",
        description="Multi-agent climate-investment market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single episode")
    _add_common(p_run)
    _add_policy_flags(p_run)
    p_run.add_argument("--seed", type=int, default=0, help="episode seed")

    p_batch = sub.add_parser("batch", help="run a batch of episodes")
    _add_common(p_batch)
    _add_policy_flags(p_batch)
    p_batch.add_argument(
        "--seeds", default=None, help="comma-separated episode seeds (default 0..batch_size-1)"
    )

    p_sch = sub.add_parser("schelling", help="cooperate/defect payoff curves")
    _add_common(p_sch)
    p_sch.add_argument("--cooperator", default="cooperator", help="cooperating kind")
    p_sch.add_argument("--defector", default="defector", help="defecting kind")
    p_sch.add_argument("--investor-policy", default="profit", help="profit | conscious")
    p_sch.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")

    p_train = sub.add_parser("train", help="train independent learners")
    _add_common(p_train)
    p_train.add_argument("--iterations", type=int, help="override learner.iterations")
    p_train.add_argument("--episodes-per-iter", type=int, help="override learner.episodes_per_iter")
    p_train.add_argument("--learning-rate", type=float, help="override learner.learning_rate")
    p_train.add_argument("--window", type=int, help="override learner.window")
    p_train.add_argument("--seed", type=int, default=0, help="training seed")

    sub.add_parser("presets", help="list scenario presets")

    sub.add_parser("print-default-config", help="emit the full default configuration")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(name)
        return 0

    if args.command == "print-default-config":
        print(yaml.safe_dump(ScenarioConfig().to_dict(), sort_keys=False), end="")
        return 0

    config = _load_config(args)
    out_dir = _out_dir(args)

    if args.command == "run":
        assignment = scripted_assignment(
            config, _parse_kinds(args.company_policy), _parse_kinds(args.investor_policy)
        )
        record = run_episode(config, assignment, args.seed)
        paths = write_outputs(record, out_dir)
        s = record.summary
        print(f"episode done: P_end={s.p_end:.4f} W_end={s.w_end:.4f} events={s.events_total}")
        for p in paths:
            print(f"wrote {p}")
        return 0

    if args.command == "batch":
        assignment = scripted_assignment(
            config, _parse_kinds(args.company_policy), _parse_kinds(args.investor_policy)
        )
        if args.seeds:
            seeds = [int(s) for s in args.seeds.split(",")]
        else:
            seeds = list(range(config.batch_size))
        result = run_batch(config, assignment, seeds)
        paths = write_outputs(result, out_dir)
        agg = result.aggregate()
        print(
            f"batch of {agg['episodes']}: P_end={agg['P100_mean']:.4f}"
            f"±{agg['P100_stderr']:.4f} W_end={agg['W100_mean']:.4f}"
        )
        for p in paths:
            print(f"wrote {p}")
        return 0

    if args.command == "schelling":
        seeds = [int(s) for s in args.seeds.split(",")]
        curve = schelling_mod.schelling_curve(
            config,
            cooperator_kind=args.cooperator,
            defector_kind=args.defector,
            investor_kind=args.investor_policy,
            seeds=seeds,
        )
        path = schelling_mod.write_curve(curve, Path(out_dir) / "schelling.csv")
        dilemma, diag = schelling_mod.is_social_dilemma(curve)
        print(f"social dilemma: {dilemma} ({diag})")
        print(f"wrote {path}")
        return 0

    if args.command == "train":
        try:
            settings = learner_mod.settings_from_config(
                config,
                iterations=args.iterations,
                episodes_per_iter=args.episodes_per_iter,
                learning_rate=args.learning_rate,
                window=args.window,
            )
        except ValueError as exc:
            raise ConfigError(f"learner: {exc}") from exc
        params, report = learner_mod.train_independent(config, settings, seeds=[args.seed])
        write_summary(report.to_dict(), Path(out_dir) / "train_report.json")
        print(
            f"trained {report.iterations} iterations: "
            f"mitigation={report.trailing_mitigation:.4f} "
            f"P_end={report.trailing_p_end:.4f} W_end={report.trailing_w_end:.4f}"
        )
        print(f"wrote {Path(out_dir) / 'train_report.json'}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
