"""Experiment configuration, sweep driver, aggregation and file outputs."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .model import DESK_N, PRESETS, BanditModel, preset_model
from .oracles import run_violates
from .records import RunTrace
from .sim import SEED_MASK, execute_run
from .strategies import RECONSTRUCTED, STRATEGY_NAMES

SUMMARY_HEADER = ("axis", "strategy", "mean_cost", "stderr_cost", "success_rate", "violation_rate")
AXES = ("deadline", "epsilon")


class ConfigError(ValueError):
    pass


class OutputError(OSError):
    pass


@dataclass
class ExperimentConfig:
    preset: str | None = "setup1"
    means: list | None = None
    arm_kind: str = "bernoulli"
    stddev: float | None = None
    n: int | None = None
    sigma: float | None = None
    epsilon: float = 0.05
    delta: float = 0.01
    deadline: int = 5
    strategies: list = field(default_factory=lambda: ["ebr"])
    repetitions: int = 100
    base_seed: int = 0
    sweep_axis: str | None = None
    sweep_values: list | None = None
    pull_cap: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if (self.preset is None) == (self.means is None):
            raise ConfigError("give exactly one of 'preset' or 'means'")
        if self.preset is not None:
            base = self.preset.removesuffix("-desk")
            if base not in PRESETS:
                raise ConfigError(f"unknown preset {self.preset!r}; see `batchrace presets`")
        if self.means is not None:
            if len(self.means) < 2:
                raise ConfigError("need at least 2 arm means")
            if any(not 0.0 <= float(m) <= 1.0 for m in self.means):
                raise ConfigError("arm means must lie in [0, 1]")
        if self.arm_kind not in ("bernoulli", "gaussian"):
            raise ConfigError(f"arm_kind must be 'bernoulli' or 'gaussian', got {self.arm_kind!r}")
        if self.arm_kind == "gaussian" and not (self.stddev and self.stddev > 0):
            raise ConfigError("gaussian arms need a positive 'stddev'")
        if self.n is not None and (not isinstance(self.n, int) or self.n < 2):
            raise ConfigError("'n' must be an integer >= 2")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError("'sigma' must be positive")
        _check_open_unit("epsilon", self.epsilon)
        _check_open_unit("delta", self.delta)
        _check_deadline(self.deadline)
        if not self.strategies:
            raise ConfigError("'strategies' must be nonempty")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigError(f"unknown strategy {s!r}; known: {', '.join(STRATEGY_NAMES)}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("duplicate strategy names")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise ConfigError("'repetitions' must be an integer >= 1")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed <= SEED_MASK - self.repetitions:
            raise ConfigError("'base_seed' must be an unsigned 64-bit integer")
        if (self.sweep_axis is None) != (self.sweep_values is None):
            raise ConfigError("'sweep_axis' and 'sweep_values' go together")
        if self.sweep_axis is not None:
            if self.sweep_axis not in AXES:
                raise ConfigError(f"sweep_axis must be one of {AXES}, got {self.sweep_axis!r}")
            vals = list(self.sweep_values)
            if not vals:
                raise ConfigError("'sweep_values' must be nonempty")
            for v in vals:
                (_check_deadline if self.sweep_axis == "deadline" else lambda v: _check_open_unit("epsilon", v))(v)
            inc = all(a < b for a, b in zip(vals, vals[1:]))
            dec = all(a > b for a, b in zip(vals, vals[1:]))
            if not (inc or dec):
                raise ConfigError("'sweep_values' must be strictly monotone")
        if self.pull_cap is not None and (not isinstance(self.pull_cap, int) or self.pull_cap < 1):
            raise ConfigError("'pull_cap' must be a positive integer")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def build_model(self) -> BanditModel:
        if self.preset is not None:
            n = self.n
            if n is None and self.preset.endswith("-desk"):
                n = DESK_N
            return preset_model(self.preset.removesuffix("-desk"), n, self.sigma)
        if self.arm_kind == "gaussian":
            return BanditModel.gaussian(self.means, self.stddev, self.sigma)
        return BanditModel.bernoulli(self.means, self.sigma)

    def points(self) -> list:
        """Sweep values, or the single configured value of the deadline."""
        if self.sweep_axis is None:
            return [self.deadline]
        return list(self.sweep_values)

    @property
    def axis(self) -> str:
        return self.sweep_axis or "deadline"

    def params_at(self, value) -> dict:
        params = dict(epsilon=self.epsilon, delta=self.delta, deadline=self.deadline,
                      sigma=self.sigma, pull_cap=self.pull_cap)
        params[self.axis] = value
        return params


def _check_open_unit(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
        raise ConfigError(f"'{name}' must lie in (0, 1), got {v!r}")


def _check_deadline(v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"deadline values must be integers >= 1, got {v!r}")


@dataclass(frozen=True)
class SummaryRow:
    axis: float
    strategy: str
    mean_cost: float
    stderr_cost: float
    success_rate: float
    violation_rate: float | None


@dataclass
class RunResult:
    axis_value: float
    strategy: str
    trace: RunTrace
    violated: bool | None = None


def _run_task(args):
    config_dict, value, strategy, seed = args
    config = ExperimentConfig.from_dict(config_dict)
    model = config.build_model()
    params = config.params_at(value)
    trace = execute_run(strategy, params, model, seed)
    violated = None
    if strategy == "ebr" and trace.error is None:
        violated = run_violates(trace, model, params["epsilon"], params["delta"], params["deadline"], params["sigma"])
    return RunResult(value, strategy, trace, violated)


def _tasks(config: ExperimentConfig):
    cfg = config.to_dict()
    return [
        (cfg, value, strategy, config.base_seed + rep)
        for value in config.points()
        for strategy in config.strategies
        for rep in range(config.repetitions)
    ]


def run_experiment(config: ExperimentConfig, jobs: int = 1):
    """Execute every (sweep point, strategy, repetition) run.

    Returns ``(rows, results)``; both are in a deterministic order no
    matter how many worker processes were used.
    """
    config.validate()
    tasks = _tasks(config)
    if jobs <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    results.sort(key=lambda r: (r.axis_value, r.strategy, r.trace.seed))
    return aggregate(results), results


def aggregate(results) -> list:
    groups = {}
    for r in sorted(results, key=lambda r: (r.axis_value, r.strategy, r.trace.seed)):
        groups.setdefault((r.axis_value, r.strategy), []).append(r)
    rows = []
    for (value, strategy), runs in groups.items():
        costs = [float(r.trace.total_cost) for r in runs]
        k = len(costs)
        mean = math.fsum(costs) / k
        stderr = 0.0
        if k > 1:
            var = math.fsum((c - mean) ** 2 for c in costs) / (k - 1)
            stderr = math.sqrt(var / k)
        success = sum(bool(r.trace.success) for r in runs) / k
        violation = None
        if strategy == "ebr":
            violation = sum(r.violated is not False for r in runs) / k
        rows.append(SummaryRow(value, strategy, mean, stderr, success, violation))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def summary_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for r in rows:
        writer.writerow([_fmt(r.axis), r.strategy, _fmt(r.mean_cost), _fmt(r.stderr_cost),
                         _fmt(r.success_rate), _fmt(r.violation_rate)])
    return buf.getvalue()


def _parse_num(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        return float(s)


def read_summary(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {header}")
        return [
            SummaryRow(_parse_num(a), s, float(m), float(se), float(sr), _parse_num(v))
            for a, s, m, se, sr, v in reader
        ]


def run_log_lines(results, config: ExperimentConfig | None = None) -> str:
    echo = config.to_dict() if config is not None else None
    axis = config.axis if config is not None else None
    lines = []
    for r in results:
        entry = {"config": echo, "axis": axis, "axis_value": r.axis_value,
                 "reconstructed": r.strategy in RECONSTRUCTED, "bound_violation": r.violated}
        entry.update(r.trace.to_json())
        lines.append(json.dumps(entry, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def write_atomic(files: dict):
    """Write ``{path: text}``; either every file is replaced or none is."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
            staged.append((tmp, path))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise OutputError(f"cannot write outputs: {exc}") from exc


def emit_outputs(rows, results, out_dir, config: ExperimentConfig | None = None,
                 stem: str = "summary") -> tuple:
    """Write ``<stem>.csv`` and ``<stem>_runs.jsonl`` into ``out_dir``."""
    if not rows:
        raise ValueError("nothing to write: no summary rows")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    csv_path = out / f"{stem}.csv"
    log_path = out / f"{stem}_runs.jsonl"
    write_atomic({csv_path: summary_csv(rows), log_path: run_log_lines(results, config)})
    return csv_path, log_path


def desk_config(**overrides) -> ExperimentConfig:
    """Setup 1 at n=20, eps=0.05, delta=0.01 swept over the deadline."""
    base = dict(preset="setup1-desk", epsilon=0.05, delta=0.01, deadline=15,
                strategies=list(STRATEGY_NAMES), repetitions=100,
                sweep_axis="deadline", sweep_values=[1, 2, 3, 5, 10, 15])
    base.update(overrides)
    return ExperimentConfig(**base)


FULL_SCALE_EPSILONS = [0.1, 0.05, 0.02, 0.01]


def full_scale_configs(preset: str = "setup1", repetitions: int = 100, base_seed: int = 0) -> list:
    """The full-scale grid: n=100, delta=0.01, eps=0.01 with T in 1..15,
    then T=15 with an epsilon sweep."""
    common = dict(preset=preset, delta=0.01, strategies=list(STRATEGY_NAMES),
                  repetitions=repetitions, base_seed=base_seed)
    return [
        ExperimentConfig(epsilon=0.01, deadline=15, sweep_axis="deadline",
                         sweep_values=list(range(1, 16)), **common),
        ExperimentConfig(epsilon=0.01, deadline=15, sweep_axis="epsilon",
                         sweep_values=FULL_SCALE_EPSILONS, **common),
    ]


def preset_table() -> list:
    rows = []
    for name, (low, high, n) in PRESETS.items():
        rows.append((name, low, high, n))
        rows.append((f"{name}-desk", low, high, DESK_N))
    return rows
