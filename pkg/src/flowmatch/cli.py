"""Command-line front end.

Subcommands: run a scenario, train the policy table or the degradation
predictor, score a detection CSV, and summarize metrics CSVs side by side.
Exit codes: 0 success, 2 config or usage error, 3 runtime invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import harness, qlearning, svm
from .harness import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowmatch")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write metrics CSV")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="metrics CSV path")
    p_run.add_argument("--directives", default=None, help="directive log CSV path")
    p_run.add_argument("--detection-out", default=None, help="detection CSV path")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")

    p_tq = sub.add_parser("train-q", help="train the policy table on the simulator")
    p_tq.add_argument("config")
    p_tq.add_argument("--out", required=True)
    p_tq.add_argument("--curve", default=None, help="training-curve CSV path")
    p_tq.add_argument("--seed", type=int, default=None)

    p_ts = sub.add_parser("train-svm", help="train the degradation predictor")
    p_ts.add_argument("config")
    p_ts.add_argument("--out", required=True)
    p_ts.add_argument("--seed", type=int, default=None)

    p_fit = sub.add_parser("fitness", help="score a detection CSV")
    p_fit.add_argument("csv")

    p_rep = sub.add_parser("report", help="summarize metrics CSVs")
    p_rep.add_argument("csv", nargs="+")
    return parser


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    result = harness.run_scenario(cfg)
    out = args.out or (args.config.rsplit(".", 1)[0] + "_metrics.csv")
    with open(out, "w") as fh:
        fh.write(result.metrics_csv())
    print(f"wrote {out} ({len(result.rows)} windows)")
    if args.directives:
        with open(args.directives, "w") as fh:
            fh.write(result.directives_csv())
        print(f"wrote {args.directives} ({len(result.directives)} directives)")
    if result.detection is not None:
        line = harness.detection_csv(result.detection)
        score = harness.fitness(result.detection)
        print(f"detection: dr={result.detection.dr:.4f} ac={result.detection.ac:.4f} "
              f"fa={result.detection.fa:.4f} fitness={score:.4f} "
              f"threshold={result.threshold:.1f}")
        if args.detection_out:
            with open(args.detection_out, "w") as fh:
                fh.write(line)
            print(f"wrote {args.detection_out}")
    return 0


def _cmd_train_q(args) -> int:
    cfg = harness.load_config(args.config)
    raw = harness.read_raw_config(args.config)
    seed = args.seed if args.seed is not None else int(raw.get("train_seed", cfg.seed))
    env_kwargs = {}
    if "train_rate_lo" in raw:
        env_kwargs["rate_lo"] = float(raw["train_rate_lo"])
    if "train_rate_hi" in raw:
        env_kwargs["rate_hi"] = float(raw["train_rate_hi"])
    if "train_flood_prob" in raw:
        env_kwargs["flood_prob"] = float(raw["train_flood_prob"])
    env = harness.build_training_env(cfg, seed=seed, **env_kwargs)
    episodes = int(raw.get("train_episodes", 1200))
    steps = int(raw.get("train_steps", 12))
    epsilon = float(raw.get("train_epsilon", 0.8))
    alpha = float(raw.get("train_alpha", cfg.alpha))
    gamma = float(raw.get("train_gamma", cfg.gamma))
    q = qlearning.train(env, episodes, steps, alpha, gamma, epsilon, seed=seed)
    qlearning.save_qtable(q, args.out)
    print(f"wrote {args.out} (alpha={alpha} gamma={gamma} epsilon={epsilon} "
          f"episodes={episodes} steps={steps})")
    if args.curve:
        with open(args.curve, "w") as fh:
            fh.write(qlearning.training_curve_csv(q))
        print(f"wrote {args.curve}")
    return 0


def _cmd_train_svm(args) -> int:
    cfg = harness.load_config(args.config)
    raw = harness.read_raw_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    rates = raw.get("svm_rates")
    duration = float(raw.get("svm_duration_s", 300.0))
    horizon = raw.get("svm_horizon_s")
    model = harness.train_default_svm(cfg, rates=rates, duration_s=duration,
                                      horizon_s=horizon)
    svm.save_model(model, args.out)
    print(f"wrote {args.out} (w1={model.w1:.4f} w2={model.w2:.4f} b={model.b:.4f})")
    return 0


def _cmd_fitness(args) -> int:
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"empty detection file: {args.csv}")
    row = rows[0]
    out = harness.DetectionOutcome(float(row["dr"]), float(row["ac"]), float(row["fa"]))
    print(f"{harness.fitness(out):.6f}")
    return 0


def _cmd_report(args) -> int:
    sys.stdout.write(harness.report_table(args.csv))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "train-q": _cmd_train_q,
    "train-svm": _cmd_train_svm,
    "fitness": _cmd_fitness,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
