"""Command-line front end.

Configuration is one JSON document; command-line flags override the matching
JSON fields (``--seed`` > ``"seed"``, ``--threads`` > ``"threads"``,
``--axis/--values`` > ``"sweep"``, ``--which`` > ``"oracle.which"``).
Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 failed verdict.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .core_model import ExpCosine, PhysicalParams, ThermalState, drive_from_dict
from .errors import ConfigError, CycloworkError, NumericError
from .kernels import long_time_horizon, mean_work
from .numerics import QuadratureConfig, RngStream
from .provenance import config_hash, header_lines
from .work_stats import InvalidRegimeWarning, WorkStatistics, limit_long_time, work_distribution, work_statistics

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4
SWEEP_AXES = ("gamma", "omega_c", "big_omega", "big_gamma", "temperature", "omega_d", "t")


# ---------------------------------------------------------------- config


class RunConfig:
    """Parsed run configuration; ``raw`` is the JSON document with flag overrides applied."""

    def __init__(self, raw: dict):
        self.raw = raw
        try:
            self.params = PhysicalParams.from_dict(raw.get("params", {}))
            self.thermal = ThermalState.from_dict(raw.get("thermal", {"beta": 1.0}), kb=self.params.kb)
            self.drive = drive_from_dict(raw.get("drive", {"type": "expcos", "f0": 1.0, "big_gamma": 0.05,
                                                           "big_omega": 0.0}))
            self.quad = QuadratureConfig(**raw.get("quadrature", {}))
        except (TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        self.seed = int(raw.get("seed", 42))
        self.threads = int(raw.get("threads", 1))
        self.method = raw.get("method", "full")

    @property
    def hash(self) -> str:
        """Hash of everything that determines the numbers (the worker count does not)."""
        return config_hash({k: v for k, v in self.raw.items() if k != "threads"})

    def resolve_time(self, value: Any) -> float:
        if value in (None, "t_star"):
            return long_time_horizon(self.params, self.drive)
        if value in ("inf", "infinity"):
            return math.inf
        t = float(value)
        if t < 0:
            raise ConfigError("times must be >= 0")
        return t

    def times(self) -> list[float]:
        if "times" in self.raw:
            return [self.resolve_time(v) for v in self.raw["times"]]
        grid = self.raw.get("t_grid")
        if grid is not None:
            return [float(v) for v in np.linspace(float(grid["start"]), float(grid["stop"]), int(grid["num"]))]
        return [self.resolve_time(self.raw.get("t"))]

    def with_value(self, axis: str, value: float) -> "RunConfig":
        raw = json.loads(json.dumps(self.raw))
        if axis in ("gamma", "omega_c", "omega_d"):
            raw.setdefault("params", {})[axis] = value
        elif axis in ("big_omega", "big_gamma"):
            raw.setdefault("drive", {"type": "expcos", "f0": 1.0, "big_gamma": 0.05, "big_omega": 0.0})[axis] = value
        elif axis == "temperature":
            raw["thermal"] = {"zero_temperature": True} if value == 0 else {"temperature": value}
        elif axis == "t":
            raw["t"] = value
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
        return RunConfig(raw)


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    if getattr(args, "axis", None) is not None or getattr(args, "values", None) is not None:
        sweep = raw.setdefault("sweep", {})
        if args.axis is not None:
            sweep["axis"] = args.axis
        if args.values is not None:
            sweep["values"] = [float(v) for v in args.values.split(",")]
    if getattr(args, "which", None) is not None:
        raw.setdefault("oracle", {})["which"] = args.which
    return RunConfig(raw)


# ---------------------------------------------------------------- output


def _fmt(x: Any) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def csv_text(cfg: RunConfig, columns: list[str], rows: list[list[Any]]) -> str:
    lines = header_lines(cfg.hash, cfg.seed) + [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def json_text(cfg: RunConfig, payload: dict) -> str:
    doc = {"config_hash": cfg.hash, "seed": cfg.seed, "version": __version__, **payload}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj: Any):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def emit(text: str, out_dir: str | None, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _rows_to_json(columns: list[str], rows: list[list[Any]]) -> list[dict]:
    return [dict(zip(columns, r)) for r in rows]


# ---------------------------------------------------------------- statistics


def statistics_for(cfg: RunConfig, t: float) -> WorkStatistics:
    if cfg.method == "long_time":
        if not isinstance(cfg.drive, ExpCosine):
            raise ConfigError("method 'long_time' needs an expcos drive")
        return limit_long_time(cfg.params, cfg.thermal, cfg.drive, cfg.quad)
    if cfg.method not in ("full", "rwa"):
        raise ConfigError(f"unknown method {cfg.method!r}; use full, rwa or long_time")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InvalidRegimeWarning)
        return work_statistics(cfg.params, cfg.thermal, cfg.drive, t, cfg.method, cfg.quad)


def _alpha_kt(stats: WorkStatistics, thermal: ThermalState) -> float | None:
    return None if thermal.zero_temperature else stats.alpha_kt(thermal)


# ---------------------------------------------------------------- commands


def cmd_mean_work(cfg: RunConfig, args: argparse.Namespace) -> int:
    columns = ["t", "mean_W"]
    rows = [[t, mean_work(cfg.params, cfg.drive, t, cfg.quad)] for t in cfg.times()]
    if args.format == "json":
        emit(json_text(cfg, {"command": "mean-work", "rows": _rows_to_json(columns, rows)}), args.out, "mean_work.json")
    else:
        emit(csv_text(cfg, columns, rows), args.out, "mean_work.csv")
    return EXIT_OK


def cmd_fdt(cfg: RunConfig, args: argparse.Namespace) -> int:
    t = cfg.resolve_time(cfg.raw.get("t"))
    stats = statistics_for(cfg, t)
    dist = work_distribution(stats)
    sd = math.sqrt(stats.sigma2)
    w = np.linspace(-4.0, 4.0, 33) * sd
    table = [[float(a), float(b), float(c)] for a, b, c in zip(w, dist.log_ratio(w), dist.alpha * w)]
    columns = ["W", "log_ratio", "alpha_W"]
    summary = {"t": t, "mean_W": stats.mean_W, "sigma2": stats.sigma2, "alpha": stats.alpha,
               "alpha_kT": _alpha_kt(stats, cfg.thermal), "method": stats.method.value, "flags": list(stats.flags)}
    if args.format == "csv":
        meta = [f"# {k}={_fmt(v)}" for k, v in summary.items()]
        text = csv_text(cfg, columns, table)
        head, body = text.split(",".join(columns), 1)
        emit(head + "\n".join(meta) + "\n" + ",".join(columns) + body, args.out, "fdt.csv")
    else:
        emit(json_text(cfg, {"command": "fdt", **summary, "log_ratio_table": _rows_to_json(columns, table)}),
             args.out, "fdt.json")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    sweep = cfg.raw.get("sweep", {})
    axis, values = sweep.get("axis"), sweep.get("values")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    row_cfgs = [cfg.with_value(axis, float(v)) for v in values]

    def row(i: int) -> list[Any]:
        c = row_cfgs[i]
        st = statistics_for(c, c.resolve_time(c.raw.get("t")))
        return [float(values[i]), st.mean_W, st.sigma2, st.alpha, _alpha_kt(st, c.thermal)]

    with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
        rows = list(pool.map(row, range(len(row_cfgs))))
    columns = ["value", "mean_W", "sigma2", "alpha", "alpha_kT"]
    if args.format == "json":
        emit(json_text(cfg, {"command": "sweep", "axis": axis, "rows": _rows_to_json(columns, rows)}),
             args.out, "sweep.json")
    else:
        emit(csv_text(cfg, columns, rows), args.out, "sweep.csv")
    return EXIT_OK


def run_oracle(cfg: RunConfig) -> tuple[Any, dict]:
    """Run the configured oracle; returns (ensemble, comparison with verdicts)."""
    from .oracles.bath import BathDiscretization, discrete_variance, sample_bath_work
    from .oracles.bath_ode import ENERGY_DRIFT_LIMIT, BathOdeConfig, simulate_bath_ode
    from .oracles.classical import ClassicalSimConfig, simulate_classical
    from .work_stats import variance_full

    oracle_cfg = cfg.raw.get("oracle", {})
    which = oracle_cfg.get("which", "bath-fast")
    n = int(oracle_cfg.get("n", 10_000))
    t = cfg.resolve_time(oracle_cfg.get("t_end", cfg.raw.get("t", 20.0)))
    rng = RngStream(cfg.seed)
    p, th, d = cfg.params, cfg.thermal, cfg.drive
    phi = mean_work(p, d, t, cfg.quad)
    verdicts: dict[str, bool] = {}
    if which == "classical":
        sim = ClassicalSimConfig(t, n, rng, dt=oracle_cfg.get("dt"), initial=oracle_cfg.get("initial", "thermal"))
        ens = simulate_classical(p, th, d, sim, threads=cfg.threads)
        s = ens.stats
        verdicts["mean_within_5se"] = abs(s.mean - phi) < 5 * s.se_mean
        analytic = {"mean_W": phi}
        if sim.initial == "thermal":
            ratio = s.variance / (2 * th.kt * s.mean)
            analytic["fdt_ratio"] = 1.0
            verdicts["fdt_ratio_within_5pct"] = abs(ratio - 1.0) <= 0.05
    elif which == "bath-fast":
        bath = BathDiscretization.uniform(p, int(oracle_cfg.get("n_modes", 400)))
        ens = sample_bath_work(p, th, d, bath, t, n, rng, threads=cfg.threads)
        s = ens.stats
        v_disc = discrete_variance(p, th, d, bath, t)
        analytic = {"mean_W": phi, "variance_discrete": v_disc}
        verdicts["mean_within_5se"] = abs(s.mean - phi) < 5 * s.se_mean
        verdicts["variance_within_5se"] = abs(s.variance - v_disc) < 5 * s.se_variance
        verdicts["skewness_gaussian"] = abs(s.skewness) < 5 * math.sqrt(6 / n)
        verdicts["kurtosis_gaussian"] = abs(s.excess_kurtosis) < 5 * math.sqrt(24 / n)
        verdicts["no_recurrence"] = "recurrence_violation" not in ens.flags
    elif which == "bath-ode":
        bath = BathDiscretization.uniform(p, int(oracle_cfg.get("n_modes", 800)))
        ode = BathOdeConfig(t, n, rng, dt=oracle_cfg.get("dt"), method=oracle_cfg.get("method", "adjoint"))
        ens = simulate_bath_ode(p, th, d, bath, ode, threads=cfg.threads)
        s = ens.stats
        v = variance_full(p, th, d, t, cfg.quad)
        analytic = {"mean_W": phi, "variance_full": v}
        verdicts["mean_within_5se_plus_3pct"] = abs(s.mean - phi) < 5 * s.se_mean + 0.03 * abs(phi)
        verdicts["variance_within_5se_plus_3pct"] = abs(s.variance - v) < 5 * s.se_variance + 0.03 * v
        verdicts["energy_drift"] = ens.metadata["energy_drift"] < ENERGY_DRIFT_LIMIT
        verdicts["no_recurrence"] = not ens.metadata["rejected"]
    else:
        raise ConfigError(f"unknown oracle {which!r}; use classical, bath-fast or bath-ode")
    return ens, {"which": which, "analytic": analytic, "verdicts": verdicts, "passed": all(verdicts.values())}


def cmd_oracle(cfg: RunConfig, args: argparse.Namespace) -> int:
    ens, comparison = run_oracle(cfg)
    summary = json_text(cfg, {"command": "oracle", "summary": ens.summary(), **comparison})
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows = [[i, float(w)] for i, w in enumerate(ens.samples)]
        (out / f"{comparison['which']}_samples.csv").write_text(csv_text(cfg, ["trajectory_id", "W"], rows))
        (out / f"{comparison['which']}_summary.json").write_text(summary)
    else:
        sys.stdout.write(summary)
    return EXIT_OK if comparison["passed"] else EXIT_VERDICT


def cmd_check(cfg: RunConfig, args: argparse.Namespace) -> int:
    from .acceptance import CRITERIA, determinism, run_criteria

    numbers = sorted(CRITERIA) + [11]
    if args.only:
        try:
            numbers = [int(k) for k in args.only.split(",")]
        except ValueError as exc:
            raise ConfigError(f"--only expects comma-separated criterion numbers: {exc}") from exc
        bad = [k for k in numbers if k not in CRITERIA and k != 11]
        if bad:
            raise ConfigError(f"unknown criteria {bad}")
    out = Path(args.out) if args.out else None

    def log(line: str) -> None:
        print(line, file=sys.stderr, flush=True)

    results = run_criteria([k for k in numbers if k != 11], seed=cfg.seed, threads=cfg.threads, out_dir=out, log=log)
    if 11 in numbers:
        res = determinism(cfg.seed, thread_counts=(1, max(2, cfg.threads)))
        log(res.line())
        results.append(res)
    report = {"results": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    if out is not None:
        (out / "acceptance.json").write_text(json_text(cfg, report))
    else:
        sys.stdout.write(json_text(cfg, report))
    return EXIT_OK if report["passed"] else EXIT_VERDICT


COMMANDS = {"mean-work": cmd_mean_work, "fdt": cmd_fdt, "sweep": cmd_sweep, "oracle": cmd_oracle, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, help="master RNG seed (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="output format")

    parser = argparse.ArgumentParser(prog="cyclowork", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mean-work", parents=[common], help="mean work on a time grid")
    sub.add_parser("fdt", parents=[common], help="work statistics and fluctuation-theorem table")
    sp = sub.add_parser("sweep", parents=[common], help="statistics over one parameter")
    sp.add_argument("--axis", choices=SWEEP_AXES)
    sp.add_argument("--values", help="comma-separated values")
    op = sub.add_parser("oracle", parents=[common], help="run a Monte Carlo oracle with verdicts")
    op.add_argument("--which", choices=("classical", "bath-fast", "bath-ode"))
    cp = sub.add_parser("check", parents=[common], help="run the acceptance suite")
    cp.add_argument("--only", help="comma-separated criterion numbers (1-11)")
    return parser


DEFAULT_FORMAT = {"mean-work": "csv", "fdt": "json", "sweep": "csv", "oracle": "json", "check": "json"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = DEFAULT_FORMAT[args.command]
    try:
        cfg = load_config(args)
        if cfg.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CycloworkError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
