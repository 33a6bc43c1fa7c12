"""Command line entry point: ``python -m swarmcover <study> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..errors import ConfigurationError
from .config import normalize, validate_config
from .studies import run_studies

OUT_ENV = "SWARMCOVER_OUT"
COMMANDS = ("coverage", "convergence", "loss", "all", "validate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="swarmcover",
        description="Swarm coverage planning experiments: coverage sweep, learning convergence, mission loss.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, default=None, help="JSON config (default: built-in preset)")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (overrides ${OUT_ENV} and the config)")
    p.add_argument("--seeds", type=int, default=None, help="number of seeds per cell")
    p.add_argument("--master-seed", type=int, default=None, help="master seed (unsigned 64-bit)")
    p.add_argument("--format", choices=("csv", "csv+svg"), default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    return p


def _overrides(args: argparse.Namespace) -> dict:
    exp, out = {}, {}
    if args.seeds is not None:
        exp["seeds"] = args.seeds
    if args.master_seed is not None:
        exp["master_seed"] = args.master_seed
    if args.jobs is not None:
        exp["jobs"] = args.jobs
    if args.format is not None:
        out["format"] = args.format
    over = {}
    if exp:
        over["experiment"] = exp
    if out:
        over["output"] = out
    return over


def _apply(cfg: dict, over: dict) -> dict:
    raw = json.loads(json.dumps(cfg))
    for section, values in over.items():
        raw[section].update(values)
    merged, errors = normalize(raw)
    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))
    return merged


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply(validate_config(args.config), _overrides(args))
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return 0

    out = args.out or Path(os.environ.get(OUT_ENV) or cfg["output"]["directory"])
    names = ("coverage", "convergence", "loss") if args.command == "all" else (args.command,)
    try:
        results = run_studies(cfg, out, names)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    status = 0
    for r in results:
        print(f"[{r.name}] {'ok' if r.ok else 'FAILED'} in {r.wall_time_s:.1f}s")
        for f in r.files:
            print(f"  wrote {f}")
        for msg in r.failures + r.violations:
            print(f"  {msg}")
        if not r.ok:
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
