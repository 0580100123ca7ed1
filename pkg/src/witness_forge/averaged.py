"""Haar-averaged iteration: closed-form recursion and Monte-Carlo estimate.

Averaging ``w_n`` over independent Haar unitaries ``U_1 .. U_{n-1}`` gives
``w̄_n = tr(A_n B1 B1†)`` with ``A_1 = ρ`` and

    A' = A + (tr(A) ρ² - (ρA + Aρ)) / d.

The Monte-Carlo route samples unitary sequences explicitly and runs the
per-step recursion, so it serves as an independent check of the closed form.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericFailure
from .iteration import (
    DETECTION_TOL,
    DIVERGENCE_GUARD,
    IMAG_TOL,
    IterationTrace,
    StepRecord,
    Strategy,
    StrategyKind,
    _finish_flags,
)
from .linalg import as_matrix, dag, hermitian_part
from .maps import MappedState
from .states import haar_unitaries, make_rng

MC_CHUNK = 4096


@dataclass(frozen=True)
class AveragedState:
    A: np.ndarray
    n: int
    d: int

    @classmethod
    def initial(cls, rhoL: MappedState) -> "AveragedState":
        return cls(rhoL.operator.copy(), 1, rhoL.dim)


def averaged_step(a: AveragedState, rhoL: MappedState) -> AveragedState:
    if a.d != rhoL.dim:
        raise InvalidArgument("averaged state and mapped state dimensions differ")
    rho = rhoL.operator
    A = a.A
    nxt = A + (np.trace(A).real * (rho @ rho) - (rho @ A + A @ rho)) / a.d
    return AveragedState(hermitian_part(nxt), a.n + 1, a.d)


def averaged_expectation(a: AveragedState, b1) -> float:
    b1 = as_matrix(b1)
    if b1.shape[0] != a.d:
        raise InvalidArgument("starting operator and averaged state dimensions differ")
    val = np.trace(a.A @ b1 @ dag(b1))
    scale = max(1.0, float(np.linalg.norm(a.A)) * float(np.linalg.norm(b1)) ** 2)
    if abs(val.imag) > IMAG_TOL * scale:
        raise NumericFailure(f"averaged expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def averaged_sequence(rhoL: MappedState, n_max: int, step_fn=averaged_step):
    """A_1 .. A_{n_max} as a list of :class:`AveragedState`."""
    out = [AveragedState.initial(rhoL)]
    for _ in range(n_max - 1):
        out.append(step_fn(out[-1], rhoL))
    return out


def commutator_norm(a, b) -> float:
    return float(np.linalg.norm(a @ b - b @ a))


# --- Monte-Carlo ---------------------------------------------------------


def _batched_w(rho, B):
    # tr(ρ B B†) for a stack of B
    return np.einsum("ij,sjk,sik->s", rho, B, B.conj()).real


def _mc_chunk(rho, b1, n, count, rng):
    """w_1..w_n for ``count`` independent Haar unitary sequences; shape (n, count)."""
    d = rho.shape[0]
    B = np.broadcast_to(b1, (count, d, d)).copy()
    out = np.empty((n, count))
    out[0] = _batched_w(rho, B)
    eye = np.eye(d)
    for k in range(1, n):
        U = haar_unitaries(d, count, rng)
        BU = B @ U
        t = np.einsum("ij,sji->s", rho, BU)
        B = BU - t[:, None, None] * eye
        out[k] = _batched_w(rho, B)
    return out


def _merge(stats, chunk):
    # Chan et al. parallel variance merge; applied in chunk order for determinism
    count, mean, m2 = stats
    c = chunk.shape[1]
    cm = chunk.mean(axis=1)
    cm2 = ((chunk - cm[:, None]) ** 2).sum(axis=1)
    if count == 0:
        return c, cm, cm2
    tot = count + c
    delta = cm - mean
    return tot, mean + delta * c / tot, m2 + cm2 + delta**2 * count * c / tot


def averaged_monte_carlo_path(rhoL: MappedState, b1, n: int, samples: int, seed: int,
                              workers: int | None = None):
    """Monte-Carlo means and standard errors of w_1..w_n, each shape (n,).

    Samples are split into fixed-size chunks seeded by (seed, chunk index),
    so the result does not depend on ``workers``.
    """
    if n < 1 or samples < 1:
        raise InvalidArgument("need n >= 1 and samples >= 1")
    b1 = as_matrix(b1)
    rho = rhoL.operator
    sizes = [min(MC_CHUNK, samples - s) for s in range(0, samples, MC_CHUNK)]

    def job(i):
        return _mc_chunk(rho, b1, n, sizes[i], make_rng(seed, i))

    if workers and workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, range(len(sizes))))
    else:
        chunks = [job(i) for i in range(len(sizes))]
    stats = (0, None, None)
    for ch in chunks:
        stats = _merge(stats, ch)
    count, mean, m2 = stats
    var = m2 / (count - 1) if count > 1 else np.zeros_like(m2)
    return mean, np.sqrt(var / count)


def averaged_monte_carlo(rhoL: MappedState, b1, n: int, samples: int, seed: int,
                         workers: int | None = None) -> tuple[float, float]:
    """(mean, standard error) of w_n over Haar-random unitary sequences."""
    mean, err = averaged_monte_carlo_path(rhoL, b1, n, samples, seed, workers)
    return float(mean[-1]), float(err[-1])


# --- trace-producing runs ------------------------------------------------


def _trace_from_values(tag, values, max_steps, detection_tol, stop_at_detection):
    trace = IterationTrace(strategy=tag, steps=[])
    for i, w in enumerate(values[:max_steps]):
        n = i + 1
        c = values[i] - values[i + 1] if i + 1 < len(values) else float("nan")
        trace.steps.append(StepRecord(n, float(w), float(c)))
        if w < -detection_tol and trace.detected_at is None:
            trace.detected_at = n
        if abs(w) > DIVERGENCE_GUARD:
            trace.diverged = True
            break
        if trace.detected_at is not None and stop_at_detection:
            break
    _finish_flags(trace)
    return trace


def averaged_values(rhoL: MappedState, b1, max_steps: int, step_fn=averaged_step,
                    stop_below: float | None = None) -> list[float]:
    """Closed-form w̄_1..w̄_{max_steps}; stops early past the divergence guard
    or, if ``stop_below`` is given, once a value drops below it."""
    a = AveragedState.initial(rhoL)
    vals = [averaged_expectation(a, b1)]
    while len(vals) < max_steps:
        if abs(vals[-1]) > DIVERGENCE_GUARD or (stop_below is not None and vals[-1] < stop_below):
            break
        a = step_fn(a, rhoL)
        vals.append(averaged_expectation(a, b1))
    return vals


def run_averaged(rhoL: MappedState, b1, strategy: Strategy, max_steps: int,
                 detection_tol: float = DETECTION_TOL, stop_at_detection: bool = True) -> IterationTrace:
    if strategy.kind is StrategyKind.AVERAGED_CLOSED_FORM:
        # one extra value so the last recorded step also has c̄_n
        vals = averaged_values(rhoL, b1, max_steps + 1)
    elif strategy.kind is StrategyKind.AVERAGED_MONTE_CARLO:
        vals = list(averaged_monte_carlo_path(rhoL, b1, max_steps + 1, strategy.samples, strategy.seed)[0])
    else:
        raise InvalidArgument(f"{strategy.kind.value} is not an averaged strategy")
    return _trace_from_values(strategy.tag(), vals, max_steps, detection_tol, stop_at_detection)
