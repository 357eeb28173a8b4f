"""Command line entry point: ``batchrace {run,sweep,verify,presets}``.

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .harness import (
    ConfigError,
    ExperimentConfig,
    OutputError,
    emit_outputs,
    full_scale_configs,
    preset_table,
    run_experiment,
    summary_csv,
    write_atomic,
)
from .model import BanditModel
from .oracles import (
    check_bounds,
    check_coverage,
    grid_gap,
    random_instance,
    scheduling_gap,
    verify_scheduling_lemma,
)
from .sim import execute_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

COVERAGE_MEANS = (0.2, 0.4, 0.5, 0.55, 0.6)


def _csv_list(text: str) -> list:
    return [s.strip() for s in text.split(",") if s.strip()]


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="flat JSON experiment config")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int, help="base seed (overrides config)")
    p.add_argument("--reps", type=int, help="repetitions (overrides config)")
    p.add_argument("--strategies", type=_csv_list, help="comma-separated strategy names")
    p.add_argument("--jobs", type=int, default=1, help="max concurrent runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batchrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configuration (any sweep in the config is ignored)")
    _common_flags(run)

    sweep = sub.add_parser("sweep", help="sweep the deadline or epsilon")
    _common_flags(sweep)
    sweep.add_argument("--axis", choices=("deadline", "epsilon"))
    sweep.add_argument("--values", type=_csv_list, help="comma-separated sweep values")
    sweep.add_argument("--full-scale", action="store_true",
                       help="full-scale grid (n=100, eps=0.01); an overnight job")
    sweep.add_argument("--preset", default="setup1", help="preset for --full-scale")

    verify = sub.add_parser("verify", help="run the theory oracles")
    verify.add_argument("--out-dir", type=Path)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, default=1000, help="scheduling-lemma instances")
    verify.add_argument("--reps", type=int, default=200, help="EBR runs per bound check")
    verify.add_argument("--coverage-runs", type=int, default=2000)

    sub.add_parser("presets", help="list model presets")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.reps is not None:
        changes["repetitions"] = args.reps
    if args.strategies is not None:
        changes["strategies"] = args.strategies
    return cfg.replace(**changes) if changes else cfg


def _parse_values(axis, values):
    conv = int if axis == "deadline" else float
    try:
        return [conv(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from None


def _execute(cfg, args, stem="summary"):
    t0 = time.perf_counter()
    rows, results = run_experiment(cfg, jobs=args.jobs)
    csv_path, log_path = emit_outputs(rows, results, args.out_dir, cfg, stem=stem)
    sys.stdout.write(summary_csv(rows))
    print(f"# {len(results)} runs in {time.perf_counter() - t0:.1f}s -> {csv_path}, {log_path}",
          file=sys.stderr)


def cmd_run(args) -> int:
    cfg = _load_config(args).replace(sweep_axis=None, sweep_values=None)
    _execute(cfg, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.full_scale:
        reps = args.reps or 100
        seed = args.seed or 0
        for i, cfg in enumerate(full_scale_configs(args.preset, reps, seed)):
            if args.strategies:
                cfg = cfg.replace(strategies=args.strategies)
            _execute(cfg, args, stem=f"full_{args.preset}_{cfg.sweep_axis}")
        return EXIT_OK
    cfg = _load_config(args)
    if args.axis or args.values:
        if not (args.axis and args.values):
            raise ConfigError("--axis and --values go together")
        cfg = cfg.replace(sweep_axis=args.axis, sweep_values=_parse_values(args.axis, args.values))
    if cfg.sweep_axis is None:
        raise ConfigError("sweep needs 'sweep_axis'/'sweep_values' in the config or --axis/--values")
    cfg.validate()
    _execute(cfg, args)
    return EXIT_OK


def run_verification(seed=0, trials=1000, reps=200, coverage_runs=2000, delta=0.05) -> list:
    """All oracle checks; returns ``(label, BoundReport, tolerance)`` triples."""
    checks = []
    checks.append(("scheduling lemma", verify_scheduling_lemma(trials, seed=seed), 0.0))

    import numpy as np
    from .oracles import BoundReport
    rng = np.random.default_rng(seed + 1)
    mismatches = 0
    for _ in range(100):
        inst = random_instance(rng, int(rng.integers(2, 9)))
        exact = scheduling_gap(inst)
        approx = grid_gap(inst)
        resolution = 1.0 + (inst.n_total - inst.r_min) / (10_000 * inst.r_min)
        mismatches += not (approx <= exact * (1 + 1e-12) and exact <= approx * resolution * (1 + 1e-12))
    checks.append(("scheduling gap vs x-grid", BoundReport("scheduling_lemma", 100, mismatches), 0.0))

    eps = 0.05
    deadline = 6  # first integer with T >= 2 log(1/eps)
    for preset in ("setup1-desk", "setup2-desk"):
        cfg = ExperimentConfig(preset=preset, epsilon=eps, delta=delta, deadline=deadline)
        model = cfg.build_model()
        traces = [execute_run("ebr", cfg.params_at(deadline), model, seed + r) for r in range(reps)]
        for name, rep in check_bounds(traces, model, eps, delta, deadline).items():
            checks.append((f"{preset} T={deadline} {name}", rep, delta))

    model = BanditModel.bernoulli(COVERAGE_MEANS)
    params = dict(epsilon=eps, delta=delta, deadline=5)
    traces = [execute_run("ebr", params, model, seed + r) for r in range(coverage_runs)]
    checks.append(("coverage 5-arm T=5", check_coverage(traces, model, delta, 5), delta))
    return checks


def cmd_verify(args) -> int:
    checks = run_verification(args.seed, args.trials, args.reps, args.coverage_runs)
    ok = True
    lines = ["check,bound,runs,violations,rate,tolerance,worst_ratio,pass"]
    records = []
    for label, rep, tol in checks:
        passed = rep.within(tol)
        ok &= passed
        lines.append(f"{label},{rep.bound_name},{rep.runs_checked},{rep.violations},"
                     f"{rep.rate!r},{tol!r},{rep.worst_ratio!r},{passed}")
        records.append({"check": label, "bound_name": rep.bound_name, "runs_checked": rep.runs_checked,
                        "violations": rep.violations, "rate": rep.rate, "tolerance": tol,
                        "worst_ratio": rep.worst_ratio, "pass": passed})
        print(f"{'PASS' if passed else 'FAIL'}  {label:40s} {rep.violations}/{rep.runs_checked}")
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        write_atomic({
            args.out_dir / "bounds.csv": "\n".join(lines) + "\n",
            args.out_dir / "bounds.json": json.dumps(records, indent=2, sort_keys=True) + "\n",
        })
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_presets(args) -> int:
    print("name,low,high,n")
    for name, low, high, n in preset_table():
        print(f"{name},{low},{high},{n}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
