"""Command line entry point: ``openchain {run,preset,sweep,plot,verify}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .config import parse_assignments, parse_config
from .dynamics import evolve
from .errors import ConfigError, InputError, OpenChainError
from .model import ChainConfig
from .output import emit_plot, ensure_dir, jsonable_config, write_csv, write_manifest, write_table, write_text
from .presets import (
    PRESET_NAMES,
    SUMMARY_COLUMNS,
    SWEEP_AXES,
    get_preset,
    summarize,
    sweep_configs,
    value_label,
)


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("openchain")
    except Exception:
        return "0.1.0"


@dataclass
class RunManifest:
    kind: str  # "config", "preset" or "sweep"
    name: str
    outdir: str
    seed: int
    timestamp: str
    version: str
    runs: list[dict] = field(default_factory=list)  # label, csv, config, dt, t_max
    summary_csv: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _override(cfg: ChainConfig, dt: float | None, t_max: float | None) -> ChainConfig:
    changes = {}
    if dt is not None:
        changes["dt"] = dt
    if t_max is not None:
        changes["t_max"] = t_max
    return cfg.with_(**changes) if changes else cfg


def _run_one(args: tuple[str, ChainConfig, str]) -> tuple[str, dict]:
    label, cfg, path = args
    rec = evolve(cfg)
    write_csv(rec, path)
    return label, summarize(rec)


def execute(
    kind: str,
    name: str,
    runs: Sequence[tuple[str, ChainConfig]],
    outdir,
    seed: int = 0,
    jobs: int = 1,
    summary: bool = False,
) -> RunManifest:
    """Write the manifest, integrate every run, write one CSV each (+ summary)."""
    out = ensure_dir(outdir)
    manifest = RunManifest(
        kind=kind,
        name=name,
        outdir=str(out),
        seed=seed,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        version=_version(),
    )
    tasks = []
    for label, cfg in runs:
        path = out / f"{label}.csv"
        manifest.runs.append(
            {"label": label, "csv": path.name, "config": jsonable_config(cfg.as_dict()), "dt": cfg.dt, "t_max": cfg.t_max}
        )
        tasks.append((label, cfg, str(path)))
    if summary:
        manifest.summary_csv = f"{name}_summary.csv"
    write_manifest(manifest.to_dict(), out / f"{name}_manifest.json")

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    if summary:
        rows = [{"label": label, **s} for label, s in results]
        write_table(rows, SUMMARY_COLUMNS, out / manifest.summary_csv)
    return manifest


def run_config(cfg: ChainConfig, outdir, name: str = "run", seed: int = 0) -> RunManifest:
    return execute("config", name, [(name, cfg)], outdir, seed)


def run_preset(name: str, outdir, dt=None, t_max=None, seed: int = 0, jobs: int = 1) -> RunManifest:
    preset = get_preset(name)
    runs = [(label, _override(cfg, dt, t_max)) for label, cfg in preset.configs()]
    return execute("preset", name, runs, outdir, seed, jobs, summary=preset.sweep is not None)


def sweep(base: ChainConfig, axis: str, values, outdir, name: str = "sweep", seed: int = 0, jobs: int = 1) -> RunManifest:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    cfgs = sweep_configs(base, axis, values)
    runs = [(f"{name}_{axis}={value_label(v)}", c) for v, c in zip(values, cfgs)]
    return execute("sweep", name, runs, outdir, seed, jobs, summary=True)


def _parse_value(axis: str, text: str):
    low = text.strip().lower()
    if low in ("inf", "markov"):
        if axis != "gamma":
            raise ConfigError(f"{text!r} is only valid on the gamma axis")
        return math.inf
    try:
        return int(low) if axis in ("n", "N") else float(low)
    except ValueError:
        raise ConfigError(f"cannot parse sweep value {text!r}") from None


def _load_config(path: str | None, sets: Sequence[str]) -> ChainConfig:
    cfg = ChainConfig()
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
        cfg = parse_config(text)
    return _apply_sets(cfg, sets)


def _apply_sets(cfg: ChainConfig, sets: Sequence[str]) -> ChainConfig:
    pairs = []
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return parse_assignments(pairs, cfg) if pairs else cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="openchain", description="Information scrambling in open XXZ chains.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="runs", help="output directory (default: runs)")
        sp.add_argument("--dt", type=float, help="override the time step")
        sp.add_argument("--tmax", type=float, help="override the horizon")
        sp.add_argument("--seed", type=int, default=0, help="recorded in the manifest")

    r = sub.add_parser("run", help="run one explicit configuration")
    r.add_argument("config", nargs="?", help="key=value configuration file")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--name", default="run")
    common(r)

    pr = sub.add_parser("preset", help="run a named figure preset")
    pr.add_argument("name", nargs="?")
    pr.add_argument("--list", action="store_true", help="list preset names and exit")
    pr.add_argument("--jobs", type=int, default=1)
    common(pr)

    sw = sub.add_parser("sweep", help="sweep one parameter")
    sw.add_argument("--config", help="base configuration file")
    sw.add_argument("--preset", help="use a preset's base configuration")
    sw.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True, help="comma separated, e.g. 1,2,inf")
    sw.add_argument("--name", default="sweep")
    sw.add_argument("--jobs", type=int, default=1)
    common(sw)

    pl = sub.add_parser("plot", help="SVG line chart from trajectory CSVs")
    pl.add_argument("csv", nargs="*")
    pl.add_argument("--quantity", default="TMI")
    pl.add_argument("--label", action="append", help="legend entry per CSV")
    pl.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="run the oracle self-checks")
    v.add_argument("--dt", type=float, default=1e-3)
    v.add_argument("--out", help="directory for one CSV report per oracle")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except OpenChainError as exc:
        print(f"openchain: error: {exc}", file=sys.stderr)
        return exc.exit_code


def _dispatch(args) -> int:
    if args.command == "run":
        cfg = _override(_load_config(args.config, args.set), args.dt, args.tmax)
        m = run_config(cfg, args.out, args.name, args.seed)
    elif args.command == "preset":
        if args.list or not args.name:
            for name in PRESET_NAMES:
                print(f"{name:7s} {get_preset(name).description}")
            return 0
        m = run_preset(args.name, args.out, args.dt, args.tmax, args.seed, args.jobs)
    elif args.command == "sweep":
        if args.config and args.preset:
            raise ConfigError("give --config or --preset, not both")
        base = get_preset(args.preset).base if args.preset else _load_config(args.config, [])
        base = _override(_apply_sets(base, args.set), args.dt, args.tmax)
        values = [_parse_value(args.axis, v) for v in args.values.split(",") if v.strip()]
        m = sweep(base, args.axis, values, args.out, args.name, args.seed, args.jobs)
    elif args.command == "plot":
        emit_plot(args.csv, args.out, args.quantity, args.label)
        print(args.out)
        return 0
    else:
        from .oracles import run_oracle_suite

        reports = run_oracle_suite(args.dt)
        out = ensure_dir(args.out) if args.out else None
        for i, rep in enumerate(reports, start=1):
            print(rep.summary())
            if out is not None:
                write_text(out / f"oracle_{i}.csv", rep.to_csv())
        return 0 if all(r.passed for r in reports) else 3
    for run in m.runs:
        print(Path(m.outdir) / run["csv"])
    if m.summary_csv:
        print(Path(m.outdir) / m.summary_csv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
