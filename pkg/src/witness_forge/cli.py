"""Command-line entry point ``witness-forge``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import InvalidArgument
from .experiments import COMMANDS, ExperimentConfig, execute


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected p1,p2")
    return vals[0], vals[1]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="witness-forge",
        description="Iterated nonlinear entanglement witness experiments (CSV/JSON output).",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--eps", dest="eps_values", type=_floats, help="comma-separated eps values")
    p.add_argument("--grid", dest="grid_resolution", type=int, help="grid points per triangle edge")
    p.add_argument("--n-steps", dest="n_steps", type=_ints, help="comma-separated n values (averaged-scan)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--map", choices=("transpose", "reduction"))
    p.add_argument("--max-iter", dest="max_iterations", type=int)
    p.add_argument("--out", dest="output_path", help="output file (default: stdout)")
    p.add_argument("--target", type=_pair, help="p1,p2 of a fixed Bell-diagonal target (scan-triangle)")
    p.add_argument("--workers", type=int, help="worker processes (capped by WITNESS_FORGE_THREADS)")
    p.add_argument("--quick", action="store_true", default=None, help="verify: reduced sample sizes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    data["command"] = args.command
    for key in ("eps_values", "grid_resolution", "n_steps", "samples", "seed", "map",
                "max_iterations", "output_path", "target", "workers", "quick"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        text, code = execute(cfg)
    except InvalidArgument as exc:
        print(f"witness-forge: error: {exc}", file=sys.stderr)
        return 2
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"witness-forge: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
            return 3
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
