"""Command-line entry point: ``simulate``, ``theory``, ``throughput``, ``map`` and ``replay``.

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration, 3 censored simulation
points, 4 configuration beyond the exact-theory enumeration cap.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, combinadic, harness, theory
from .core import ConfigError, config_from_dict, config_to_dict, parse_key_values

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CENSORED = 3
EXIT_ENUM_CAP = 4

WORKERS_ENV = "FBILORA_WORKERS"

CSV_FIELDS = (
    "ebn0_db", "bits_sent", "bit_errors", "symbols_sent", "symbol_errors", "ber", "ser",
    "theory_ber", "theory_ser", "ber_group_field", "ber_in_group", "wall_time_s",
)

_CONFIG_KEYS = ("sf", "scheme", "fnum", "gnum", "ngs", "bw_hz", "es")
# defaults for run options that may also come from a --config file
_RUN_DEFAULTS = {
    "channel": "awgn",
    "ebn0": "0:1:12",
    "seed": 0,
    "min_errors": 200,
    "max_symbols": 100_000_000,
    "format": "csv",
    "fpa": 8,
    "quadrature_nodes": 256,
}
_RUN_TYPES = {"seed": int, "min_errors": int, "max_symbols": lambda s: int(float(s)),
              "fpa": int, "quadrature_nodes": int, "workers": int}


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ formatting

def format_value(value):
    """Round-trippable text for one CSV cell; ``None`` becomes the empty string."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    # repr-style formatting is locale independent
    return format(value, ".17g")


def records_to_csv(records):
    buf = io.StringIO(newline="")
    buf.write(",".join(CSV_FIELDS) + "\n")
    for rec in records:
        d = rec.to_dict() if hasattr(rec, "to_dict") else rec
        buf.write(",".join(format_value(d.get(k)) for k in CSV_FIELDS) + "\n")
    return buf.getvalue()


def records_to_json(records):
    rows = [rec.to_dict() if hasattr(rec, "to_dict") else dict(rec) for rec in records]
    return json.dumps(rows, indent=1, allow_nan=True) + "\n"


def render(records, fmt):
    return records_to_csv(records) if fmt == "csv" else records_to_json(records)


def parse_grid(text):
    """``start:step:stop`` (inclusive), a comma list, or a single value."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"--ebn0 expects start:step:stop, got {text!r}")
        start, step, stop = map(float, parts)
        if step <= 0:
            raise UsageError("--ebn0 step must be positive")
        if stop < start:
            return []
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    if not text:
        return []
    return [float(x) for x in text.split(",")]


# --------------------------------------------------------------------- options

def _resolve(args):
    """Merge ``--config`` file values under explicit flags."""
    file_values = {}
    if getattr(args, "config", None):
        file_values = parse_key_values(Path(args.config).read_text())
    cfg_values = {k: v for k, v in file_values.items() if k in _CONFIG_KEYS}
    run_values = {k: v for k, v in file_values.items() if k not in _CONFIG_KEYS}
    unknown = set(run_values) - set(_RUN_DEFAULTS) - {"workers", "timing", "theory"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg_values[key] = value
    if "sf" not in cfg_values:
        raise ConfigError("--sf is required", "sf")
    cfg = config_from_dict(cfg_values)

    run = dict(_RUN_DEFAULTS)
    run["workers"] = int(os.environ.get(WORKERS_ENV, "1") or 1)
    for key, value in run_values.items():
        run[key] = _RUN_TYPES.get(key, str)(value)
    for key in list(_RUN_DEFAULTS) + ["workers"]:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    if run["channel"] not in theory.CHANNELS:
        raise ConfigError(f"channel must be one of {theory.CHANNELS}", "channel")
    if run["workers"] < 1:
        raise ConfigError("workers must be >= 1", "workers")
    return cfg, run


def _write_output(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
        return None
    path = Path(out)
    path.write_bytes(text.encode("utf-8"))
    return path


def manifest_path(out):
    return Path(str(out) + ".manifest.json")


def _write_manifest(command, cfg, run, grid, out_path, text, started):
    manifest = {
        "tool": "fbilora",
        "version": __version__,
        "command": command,
        "config": config_to_dict(cfg),
        "channel": run["channel"],
        "ebn0_grid_db": grid,
        "seed": run.get("seed"),
        "stop": {"min_bit_errors": run.get("min_errors"), "max_symbols": run.get("max_symbols")},
        "options": {k: run[k] for k in ("format", "fpa", "quadrature_nodes", "timing", "theory") if k in run},
        "workers": run.get("workers"),
        "output": out_path.name,
        "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "started_utc": started,
        "finished_utc": _now(),
    }
    manifest_path(out_path).write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# -------------------------------------------------------------------- commands

def _simulate(cfg, run, grid):
    plan = harness.SweepPlan(
        cfg, run["channel"], tuple(grid),
        harness.StopRule(run["min_errors"], run["max_symbols"]),
        seed=run["seed"], workers=run["workers"],
    )
    with_theory = run.get("theory", True)
    if with_theory:
        try:
            theory.check_enumerable(cfg)
        except theory.EnumerationCapError as exc:
            print(f"note: {exc}; theory columns left empty (Monte Carlo only)", file=sys.stderr)
            with_theory = False
    try:
        return harness.run_sweep(plan, with_theory=with_theory, timing=run.get("timing", False)), False
    except harness.SweepError as exc:
        print(f"error: {exc}; {len(exc.partial)} completed points kept", file=sys.stderr)
        return exc.partial, True


def _theory_records(cfg, run, grid):
    theory.check_enumerable(cfg)
    records = []
    for e in grid:
        rep = theory.theory_report(cfg, e, run["channel"], max_nodes=run["quadrature_nodes"])
        records.append({
            "ebn0_db": float(e), "theory_ber": rep.ber, "theory_ser": rep.ser,
            "ber_group_field": rep.ber_group_field, "ber_in_group": rep.ber_in_group,
        })
    return records


def _throughput_records(cfg, run, grid):
    rows = harness.compare_throughput([cfg], run["channel"], grid, run["fpa"], seed=run["seed"])
    return rows


def _emit(command, cfg, run, grid, records, out):
    if command == "throughput":
        text = _throughput_text(records, run["format"])
    elif command == "theory" and run["format"] == "csv":
        text = records_to_csv(records)
    else:
        text = render(records, run["format"])
    path = _write_output(text, out)
    return path, text


def _throughput_text(rows, fmt):
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    keys = ("config", "ebn0_db", "ser", "throughput_bps", "conventional_bps", "ratio")
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys)
    for row in rows:
        writer.writerow([row[k] if k == "config" else format_value(row[k]) for k in keys])
    return buf.getvalue()


def execute(command, cfg, run, grid, out):
    """Run one records-producing command; returns the exit code."""
    started = _now()
    failed = False
    if command == "simulate":
        records, failed = _simulate(cfg, run, grid)
    elif command == "theory":
        records = _theory_records(cfg, run, grid)
    else:
        records = _throughput_records(cfg, run, grid)
    path, text = _emit(command, cfg, run, grid, records, out)
    if path is not None:
        _write_manifest(command, cfg, run, grid, path, text, started)
    if failed:
        return EXIT_FAILURE
    if command == "simulate" and any(r.censored for r in records):
        censored = [format_value(r.ebn0_db) for r in records if r.censored]
        print(f"warning: censored points (max_symbols reached): {', '.join(censored)} dB",
              file=sys.stderr)
        return EXIT_CENSORED
    return EXIT_OK


def cmd_records(args):
    cfg, run = _resolve(args)
    if args.command == "simulate":
        run["timing"] = bool(args.timing)
        run["theory"] = not args.no_theory
    grid = parse_grid(run["ebn0"])
    return execute(args.command, cfg, run, grid, args.out)


def cmd_map(args):
    if args.op == "rank":
        seq = [int(x) for x in args.value.split(",") if x.strip()]
        print(combinadic.rank(seq, args.m1, args.m2))
    else:
        print(",".join(str(x) for x in combinadic.unrank(int(args.value), args.m1, args.m2)))
    return EXIT_OK


def cmd_replay(args):
    """Re-run the command recorded in a manifest and compare output hashes."""
    manifest = json.loads(Path(args.manifest).read_text())
    cfg = config_from_dict({k: v for k, v in manifest["config"].items() if v is not None})
    run = dict(_RUN_DEFAULTS)
    run.update(manifest.get("options", {}))
    run["channel"] = manifest["channel"]
    run["seed"] = manifest["seed"]
    run["min_errors"] = manifest["stop"]["min_bit_errors"]
    run["max_symbols"] = manifest["stop"]["max_symbols"]
    run["workers"] = args.workers or int(os.environ.get(WORKERS_ENV, "1") or 1)
    out = args.out or str(Path(args.manifest).with_name(manifest["output"]))
    code = execute(manifest["command"], cfg, run, manifest["ebn0_grid_db"], out)
    digest = hashlib.sha256(Path(out).read_bytes()).hexdigest()
    if digest != manifest["output_sha256"]:
        print("replay output differs from the recorded hash", file=sys.stderr)
        return 1
    print(f"replay reproduced {out}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------- parser

def _add_config_flags(p):
    p.add_argument("--config", help="key=value file; explicit flags override it")
    p.add_argument("--sf", type=int)
    p.add_argument("--scheme", choices=("conventional", "s1", "s2"))
    p.add_argument("--fnum", type=int)
    p.add_argument("--gnum", type=int)
    p.add_argument("--ngs", type=int)
    p.add_argument("--bw-hz", dest="bw_hz", type=float)
    p.add_argument("--es", type=float)
    p.add_argument("--channel", choices=theory.CHANNELS)
    p.add_argument("--ebn0", help="start:step:stop (inclusive) or comma list, dB")
    p.add_argument("--out", help="output file (default stdout, no manifest)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser():
    parser = argparse.ArgumentParser(prog="fbilora", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo BER/SER sweep")
    _add_config_flags(sim)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--min-errors", dest="min_errors", type=int)
    sim.add_argument("--max-symbols", dest="max_symbols", type=lambda s: int(float(s)))
    sim.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sim.add_argument("--timing", action="store_true", help="fill wall_time_s (output no longer reproducible)")
    sim.add_argument("--no-theory", action="store_true", help="skip theory columns")
    sim.set_defaults(func=cmd_records)

    th = sub.add_parser("theory", help="closed-form BER/SER curves")
    _add_config_flags(th)
    th.add_argument("--quadrature-nodes", dest="quadrature_nodes", type=int,
                    help="maximum Gauss-Laguerre nodes for Rayleigh averaging")
    th.set_defaults(func=cmd_records)

    tp = sub.add_parser("throughput", help="throughput against conventional LoRa")
    _add_config_flags(tp)
    tp.add_argument("--fpa", type=int, help="symbols per packet (default 8)")
    tp.add_argument("--seed", type=int)
    tp.set_defaults(func=cmd_records)

    mp = sub.add_parser("map", help="combinadic rank/unrank")
    mp.add_argument("op", choices=("rank", "unrank"))
    mp.add_argument("value", help="comma-separated sequence (rank) or integer (unrank)")
    mp.add_argument("--m1", type=int, required=True)
    mp.add_argument("--m2", type=int, required=True)
    mp.set_defaults(func=cmd_map)

    rp = sub.add_parser("replay", help="reproduce an output file from its manifest")
    rp.add_argument("manifest")
    rp.add_argument("--out")
    rp.add_argument("--workers", type=int)
    rp.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except theory.EnumerationCapError as exc:
        print(f"error: {exc}; use simulate for Monte Carlo results", file=sys.stderr)
        return EXIT_ENUM_CAP
    except theory.QuadratureError as exc:
        print(f"error: {exc}; raise --quadrature-nodes", file=sys.stderr)
        return EXIT_FAILURE
    except ConfigError as exc:
        name = getattr(exc, "parameter", None)
        prefix = f"invalid {name}: " if name else "invalid configuration: "
        print(f"error: {prefix}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
