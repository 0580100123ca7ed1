"""Experiment sweeps behind the ``witness-forge`` subcommands.

Every sweep is split into independent tasks whose random streams are derived
from ``(seed, task index)``; rows are emitted in task order, so outputs are
byte-identical for a given config whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .averaged import averaged_values
from .errors import InvalidArgument
from .iteration import Strategy, run, run_with_unitaries
from .maps import PositiveMap, apply_one_sided
from .states import bell_diagonal, make_rng, random_npt_state, starting_operator

log = logging.getLogger(__name__)

COMMANDS = ("scan-triangle", "detect-stats", "random-stats", "averaged-scan", "verify")
DEFAULT_MAX_ITER = {"scan-triangle": 50, "detect-stats": 50, "random-stats": 500, "averaged-scan": 200}
RANDOM_BINS = ((1, 10), (11, 50), (51, 100), (101, 500))
THREADS_ENV = "WITNESS_FORGE_THREADS"

# task-stream namespaces under the master seed
_NS_STATE, _NS_RANDOM = 0, 1


@dataclass
class ExperimentConfig:
    command: str = "scan-triangle"
    eps_values: list[float] = field(default_factory=lambda: [0.5, 0.8, 1.0])
    grid_resolution: int = 21
    n_steps: list[int] = field(default_factory=lambda: [1, 2, 5, 10, 20, 50, 100, 200])
    samples: int = 1000
    max_iterations: int | None = None
    seed: int = 42
    map: str = "transpose"
    output_path: str | None = None
    target: tuple[float, float] | None = None
    workers: int | None = None
    quick: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidArgument(f"unknown command {self.command!r}")
        self.eps_values = [float(e) for e in self.eps_values]
        if any(not 0.0 <= e <= 1.0 for e in self.eps_values):
            raise InvalidArgument("eps values must lie in [0, 1]")
        if self.grid_resolution < 2:
            raise InvalidArgument("grid resolution must be >= 2")
        if self.samples < 1:
            raise InvalidArgument("samples must be >= 1")
        self.n_steps = sorted({int(n) for n in self.n_steps})
        if not self.n_steps or self.n_steps[0] < 1:
            raise InvalidArgument("n_steps must be positive integers")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidArgument("max_iterations must be >= 1")
        if self.target is not None:
            self.target = (float(self.target[0]), float(self.target[1]))
        PositiveMap.from_tag(self.map, 2)

    @property
    def iterations(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return DEFAULT_MAX_ITER.get(self.command, 50)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _pmap(fn, tasks, workers):
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def triangle_grid(resolution: int) -> list[tuple[float, float]]:
    """Points (i, j)/(resolution-1) with i + j <= resolution - 1."""
    m = resolution - 1
    return [(i / m, j / m) for i in range(resolution) for j in range(resolution - i)]


def _mapped(cfg: ExperimentConfig, state):
    return apply_one_sided(PositiveMap.from_tag(cfg.map, state.dB), state)


def _nd(trace) -> int:
    return trace.detected_at if trace.detected_at is not None else -1


# --- scan-triangle -------------------------------------------------------


def _target_unitaries(cfg, eps):
    target = _mapped(cfg, bell_diagonal(*cfg.target))
    tr = run(target, starting_operator(eps), Strategy.optimized(), cfg.iterations,
             stop_at_detection=False, keep_operators=True)
    return [s.U for s in tr.steps[:-1]]


def _scan_task(args):
    cfg, eps, p1, p2, unitaries = args
    rhoL = _mapped(cfg, bell_diagonal(p1, p2))
    b1 = starting_operator(eps)
    if unitaries is None:
        tr = run(rhoL, b1, Strategy.optimized(), cfg.iterations)
    else:
        tr = run_with_unitaries(rhoL, b1, unitaries)
    return (eps, p1, p2, _nd(tr))


def scan_triangle_rows(cfg: ExperimentConfig) -> list[tuple]:
    grid = triangle_grid(cfg.grid_resolution)
    tasks = []
    for eps in cfg.eps_values:
        unitaries = _target_unitaries(cfg, eps) if cfg.target is not None else None
        tasks += [(cfg, eps, p1, p2, unitaries) for p1, p2 in grid]
    return _pmap(_scan_task, tasks, worker_count(cfg.workers))


def cmd_scan_triangle(cfg: ExperimentConfig) -> str:
    return to_csv(("eps", "p1", "p2", "n_detect"), scan_triangle_rows(cfg))


# --- detect-stats / random-stats -----------------------------------------


def sample_state(cfg: ExperimentConfig, index: int):
    return random_npt_state(make_rng(cfg.seed, _NS_STATE, index))


def _detect_task(args):
    cfg, i = args
    rhoL = _mapped(cfg, sample_state(cfg, i))
    return [_nd(run(rhoL, starting_operator(eps), Strategy.optimized(), cfg.iterations))
            for eps in cfg.eps_values]


def detection_counts(cfg: ExperimentConfig) -> np.ndarray:
    """Detection step per (state, eps) for the optimized iteration; -1 if undetected."""
    res = _pmap(_detect_task, [(cfg, i) for i in range(cfg.samples)], worker_count(cfg.workers))
    return np.array(res, dtype=int).reshape(cfg.samples, len(cfg.eps_values))


def cmd_detect_stats(cfg: ExperimentConfig) -> str:
    nd = detection_counts(cfg)
    rows = []
    for k, eps in enumerate(cfg.eps_values):
        col = nd[:, k]
        rows += [(eps, n, int(np.sum(col == n))) for n in range(1, cfg.iterations + 1)]
        rows.append((eps, -1, int(np.sum(col < 0))))
    return to_csv(("eps", "n", "count"), rows)


def random_seed_for(cfg: ExperimentConfig, state_index: int, eps_index: int) -> int:
    return int(make_rng(cfg.seed, _NS_RANDOM, state_index, eps_index).integers(2**63))


def _random_task(args):
    cfg, i = args
    rhoL = _mapped(cfg, sample_state(cfg, i))
    out = []
    for k, eps in enumerate(cfg.eps_values):
        b1 = starting_operator(eps)
        rnd = run(rhoL, b1, Strategy.random(random_seed_for(cfg, i, k)), cfg.iterations)
        opt = run(rhoL, b1, Strategy.optimized(), min(cfg.iterations, 50))
        out.append((_nd(rnd), _nd(opt)))
    return out


def random_detection(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """(random, optimized) detection steps, each shape (samples, n_eps)."""
    res = np.array(_pmap(_random_task, [(cfg, i) for i in range(cfg.samples)], worker_count(cfg.workers)),
                   dtype=int).reshape(cfg.samples, len(cfg.eps_values), 2)
    return res[..., 0], res[..., 1]


def bin_labels(max_iter: int) -> list[tuple[str, int, int]]:
    bins = [(lo, min(hi, max_iter)) for lo, hi in RANDOM_BINS if lo <= max_iter]
    last = RANDOM_BINS[-1][1]
    if max_iter > last:
        bins.append((last + 1, max_iter))
    return [(f"{lo}-{hi}", lo, hi) for lo, hi in bins]


def random_histogram(nd: np.ndarray, max_iter: int) -> list[tuple[str, int]]:
    rows = [(label, int(np.sum((nd >= lo) & (nd <= hi)))) for label, lo, hi in bin_labels(max_iter)]
    rows.append(("undetected", int(np.sum(nd < 0))))
    return rows


def dominance_fraction(nd_random: np.ndarray, nd_opt: np.ndarray) -> float:
    """Share of trials where random needed at least as many steps as optimized."""
    big = np.iinfo(np.int64).max
    r = np.where(nd_random < 0, big, nd_random)
    o = np.where(nd_opt < 0, big, nd_opt)
    return float(np.mean(r >= o))


def cmd_random_stats(cfg: ExperimentConfig) -> str:
    nd_rand, nd_opt = random_detection(cfg)
    rows = []
    for k, eps in enumerate(cfg.eps_values):
        rows += [(eps, label, count) for label, count in random_histogram(nd_rand[:, k], cfg.iterations)]
        log.info("eps=%g: random >= optimized in %.1f%% of trials", eps,
                 100 * dominance_fraction(nd_rand[:, k], nd_opt[:, k]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("eps", "bin", "count"))
    for eps, label, count in rows:
        writer.writerow((fmt(eps), label, count))
    return buf.getvalue()


# --- averaged-scan -------------------------------------------------------


def _averaged_task(args):
    cfg, eps, p1, p2 = args
    rhoL = _mapped(cfg, bell_diagonal(p1, p2))
    n_max = min(max(cfg.n_steps), cfg.iterations)
    vals = averaged_values(rhoL, starting_operator(eps), n_max)
    rows = []
    for n in cfg.n_steps:
        if n > n_max:
            break
        # past the divergence guard the sequence has run off to -inf
        w = vals[n - 1] if n <= len(vals) else -np.inf
        rows.append((eps, p1, p2, n, w, w < -1e-10))
    return rows


def averaged_scan_rows(cfg: ExperimentConfig) -> list[tuple]:
    grid = triangle_grid(cfg.grid_resolution)
    tasks = [(cfg, eps, p1, p2) for eps in cfg.eps_values for p1, p2 in grid]
    return [row for rows in _pmap(_averaged_task, tasks, worker_count(cfg.workers)) for row in rows]


def cmd_averaged_scan(cfg: ExperimentConfig) -> str:
    return to_csv(("eps", "p1", "p2", "n", "wbar", "detected"), averaged_scan_rows(cfg))


# --- verify --------------------------------------------------------------


def cmd_verify(cfg: ExperimentConfig) -> tuple[str, int]:
    from . import verify

    report = verify.run_all(seed=cfg.seed, quick=cfg.quick)
    for suite in report["suites"]:
        log.info("%s %s: max residual %.3e", "PASS" if suite["passed"] else "FAIL",
                 suite["name"], suite["max_residual"])
    return json.dumps(report, indent=2) + "\n", 0 if report["passed"] else 1


def execute(cfg: ExperimentConfig) -> tuple[str, int]:
    """Run the configured command; returns (output text, exit code)."""
    handlers = {
        "scan-triangle": cmd_scan_triangle,
        "detect-stats": cmd_detect_stats,
        "random-stats": cmd_random_stats,
        "averaged-scan": cmd_averaged_scan,
    }
    if cfg.command == "verify":
        return cmd_verify(cfg)
    return handlers[cfg.command](cfg), 0
