"""Run the four CSV experiments with their default report sizes.

Usage: python3 scripts/run_experiments.py [outdir] [--quick]
"""

import logging
import sys
import time
from pathlib import Path

from witness_forge.experiments import ExperimentConfig, execute

FULL = {
    "scan-triangle": dict(grid_resolution=101, eps_values=[0.0, 0.5, 0.8, 1.0]),
    "scan-triangle-target": dict(grid_resolution=101, eps_values=[0.5, 0.8, 1.0], target=(0.2, 0.6)),
    "detect-stats": dict(samples=1000, eps_values=[0.5, 0.8, 1.0]),
    "random-stats": dict(samples=200, eps_values=[0.5, 0.8, 1.0], max_iterations=500),
    "averaged-scan": dict(grid_resolution=101, eps_values=[0.0, 0.5, 1.0]),
}
QUICK = {
    "scan-triangle": dict(grid_resolution=21),
    "scan-triangle-target": dict(grid_resolution=21),
    "detect-stats": dict(samples=100),
    "random-stats": dict(samples=20),
    "averaged-scan": dict(grid_resolution=21),
}


def main(argv):
    quick = "--quick" in argv
    args = [a for a in argv if a != "--quick"]
    outdir = Path(args[0] if args else "results")
    outdir.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for name, kw in FULL.items():
        kw = {**kw, **(QUICK[name] if quick else {})}
        cfg = ExperimentConfig(command=name.replace("-target", ""), seed=42, **kw)
        t0 = time.perf_counter()
        text, _ = execute(cfg)
        (outdir / f"{name}.csv").write_text(text)
        print(f"{name}: {len(text.splitlines()) - 1} rows in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main(sys.argv[1:])
