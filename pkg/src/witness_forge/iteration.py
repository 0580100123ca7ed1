"""Witness iteration engine.

Starting from an operator ``B1`` (linear witness ``(id⊗Λ†)(B1 B1†)``) each
step picks a unitary ``U`` and replaces ``B`` by ``B U - tr(ρ B U) 1``.  The
expectation ``w = tr(ρ B B†)`` then drops by ``c = |tr(ρ B U)|²``.  Here
``ρ`` always denotes the unit-trace mapped state (``ρ^Γ`` for the transpose).

Strategies for the unitary:

* ``example``   -- ``U1 = P+ - P-`` then ``U_n = -U1``
* ``optimized`` -- ``U = W V†`` from the SVD ``ρB = V D W†``
* ``random``    -- Haar-random, seeded
* ``averaged``  -- closed-form Haar average (see :mod:`witness_forge.averaged`)
* ``averaged-mc`` -- Monte-Carlo estimate of the same average
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericFailure
from .linalg import as_matrix, dag, hermitian_eig, require_unitary, svd
from .maps import MappedState
from .states import haar_unitary

DETECTION_TOL = 1e-10
DIVERGENCE_GUARD = 1e12
STALL_TOL = 1e-14
STALL_STEPS = 3
IMAG_TOL = 1e-10


class StrategyKind(enum.Enum):
    EXAMPLE = "example"
    OPTIMIZED = "optimized"
    RANDOM = "random"
    AVERAGED_CLOSED_FORM = "averaged"
    AVERAGED_MONTE_CARLO = "averaged-mc"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    seed: int | None = None
    samples: int | None = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.kind in (StrategyKind.RANDOM, StrategyKind.AVERAGED_MONTE_CARLO) and self.seed is None:
            raise InvalidArgument(f"{self.kind.value} strategy needs an explicit seed")
        if self.kind is StrategyKind.AVERAGED_MONTE_CARLO and (self.samples is None or self.samples < 1):
            raise InvalidArgument("averaged-mc strategy needs samples >= 1")

    @classmethod
    def example(cls):
        return cls(StrategyKind.EXAMPLE)

    @classmethod
    def optimized(cls):
        return cls(StrategyKind.OPTIMIZED)

    @classmethod
    def random(cls, seed: int):
        return cls(StrategyKind.RANDOM, seed=seed)

    @classmethod
    def averaged(cls):
        return cls(StrategyKind.AVERAGED_CLOSED_FORM)

    @classmethod
    def averaged_mc(cls, samples: int, seed: int):
        return cls(StrategyKind.AVERAGED_MONTE_CARLO, seed=seed, samples=samples)

    @property
    def is_averaged(self) -> bool:
        return self.kind in (StrategyKind.AVERAGED_CLOSED_FORM, StrategyKind.AVERAGED_MONTE_CARLO)

    def tag(self) -> str:
        if self.kind is StrategyKind.RANDOM:
            return f"random(seed={self.seed})"
        if self.kind is StrategyKind.AVERAGED_MONTE_CARLO:
            return f"averaged-mc(samples={self.samples},seed={self.seed})"
        return self.kind.value


@dataclass
class IterationState:
    """Live state of a per-step iteration: current ``B_n``, ``n`` and ``w_n``."""

    B: np.ndarray
    n: int
    w: float
    history: list[tuple[float, float]] = field(default_factory=list)


@dataclass(frozen=True)
class StepRecord:
    n: int
    w: float
    c: float
    B: np.ndarray | None = None
    U: np.ndarray | None = None


@dataclass
class IterationTrace:
    strategy: str
    steps: list[StepRecord]
    detected_at: int | None = None
    diverged: bool = False
    stalled: bool = False

    @property
    def w(self) -> np.ndarray:
        return np.array([s.w for s in self.steps])

    @property
    def c(self) -> np.ndarray:
        return np.array([s.c for s in self.steps])

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "detected_at": self.detected_at,
            "stalled": self.stalled,
            "diverged": self.diverged,
            "steps": [{"n": s.n, "w": s.w, "c": s.c} for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def step(b, u, rhoL: MappedState) -> np.ndarray:
    """B' = B U - tr(ρ B U) 1."""
    b = as_matrix(b)
    u = require_unitary(u)
    bu = b @ u
    return bu - np.trace(rhoL.operator @ bu) * np.eye(b.shape[0])


def expectation(rhoL: MappedState, b) -> float:
    """w = tr(ρ B B†)."""
    b = as_matrix(b)
    val = np.trace(rhoL.operator @ b @ dag(b))
    scale = max(1.0, float(np.linalg.norm(b)) ** 2)
    if abs(val.imag) > IMAG_TOL * scale:
        raise NumericFailure(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def improvement(rhoL: MappedState, b, u) -> float:
    """c = |tr(ρ B U)|²."""
    return float(abs(np.trace(rhoL.operator @ as_matrix(b) @ as_matrix(u))) ** 2)


def optimized_unitary(rhoL: MappedState, b) -> np.ndarray:
    """U = W V† from ρB = V D W†, which makes ρ B U = V D V† PSD."""
    v, _, w = svd(rhoL.operator @ as_matrix(b))
    return w @ dag(v)


def sign_projectors(rhoL: MappedState, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """(P+, P-); eigenvalues in [-tol, 0] count towards P+."""
    vals, vecs = hermitian_eig(rhoL.operator)
    neg = vals < -tol
    p_minus = vecs[:, neg] @ dag(vecs[:, neg])
    return np.eye(rhoL.dim) - p_minus, p_minus


def example_unitary(rhoL: MappedState, n: int, projectors=None) -> np.ndarray:
    if n < 1:
        raise InvalidArgument("step index must be >= 1")
    p_plus, p_minus = projectors if projectors is not None else sign_projectors(rhoL)
    u1 = p_plus - p_minus
    return u1 if n == 1 else -u1


class _Chooser:
    """Per-run unitary selection for the per-step strategies."""

    def __init__(self, strategy: Strategy, rhoL: MappedState):
        if strategy.is_averaged:
            raise InvalidArgument("averaged strategies have no per-step unitary")
        self.strategy = strategy
        self.rhoL = rhoL
        self._projectors = None
        self._rng = None
        if strategy.kind is StrategyKind.EXAMPLE:
            self._projectors = sign_projectors(rhoL)
        elif strategy.kind is StrategyKind.RANDOM:
            self._rng = np.random.default_rng(strategy.seed)

    def __call__(self, b: np.ndarray, n: int) -> np.ndarray:
        kind = self.strategy.kind
        if kind is StrategyKind.OPTIMIZED:
            return optimized_unitary(self.rhoL, b)
        if kind is StrategyKind.EXAMPLE:
            return example_unitary(self.rhoL, n, self._projectors)
        return haar_unitary(self.rhoL.dim, self._rng)


def choose_unitary(strategy: Strategy, rhoL: MappedState, b, n: int) -> np.ndarray:
    """One-off unitary choice; stateful strategies (random) start a fresh stream."""
    return _Chooser(strategy, rhoL)(as_matrix(b), n)


def _monotone_or_raise(w_prev: float, w: float, b: np.ndarray):
    scale = max(1.0, abs(w_prev), float(np.linalg.norm(b)) ** 2)
    if w > w_prev + 1e-10 * scale:
        raise NumericFailure(f"expectation increased from {w_prev!r} to {w!r}")


def _finish_flags(trace: IterationTrace):
    run_len = 0
    for s in trace.steps:
        run_len = run_len + 1 if s.c < STALL_TOL else 0
        if run_len >= STALL_STEPS:
            trace.stalled = True
            break


def run_with_unitaries(rhoL: MappedState, b1, unitaries, detection_tol: float = DETECTION_TOL,
                       stop_at_detection: bool = True, strategy_tag: str = "fixed",
                       keep_operators: bool = False) -> IterationTrace:
    """Iterate with a prescribed unitary sequence (``len(unitaries)`` + 1 steps at most)."""
    seq = list(unitaries)
    return _run(rhoL, b1, lambda b, n: seq[n - 1] if n <= len(seq) else None, len(seq) + 1,
                detection_tol, stop_at_detection, strategy_tag, keep_operators)


def run(rhoL: MappedState, b1, strategy: Strategy, max_steps: int,
        detection_tol: float = DETECTION_TOL, stop_at_detection: bool = True,
        keep_operators: bool = False) -> IterationTrace:
    """Run an iteration for up to ``max_steps`` expectation values.

    Stops at the first ``w_n < -detection_tol`` (unless ``stop_at_detection`` is
    false), at ``max_steps``, or when ``|w_n|`` exceeds the divergence guard.
    Averaged strategies are delegated to :mod:`witness_forge.averaged`.
    """
    if max_steps < 1:
        raise InvalidArgument("max_steps must be >= 1")
    b1 = as_matrix(b1)
    if not np.any(b1):
        raise InvalidArgument("starting operator must be nonzero")
    if b1.shape[0] != rhoL.dim:
        raise InvalidArgument("starting operator and mapped state dimensions differ")
    if strategy.is_averaged:
        from .averaged import run_averaged

        return run_averaged(rhoL, b1, strategy, max_steps, detection_tol, stop_at_detection)
    chooser = _Chooser(strategy, rhoL)
    return _run(rhoL, b1, chooser, max_steps, detection_tol, stop_at_detection,
                strategy.tag(), keep_operators)


def _run(rhoL, b1, choose, max_steps, detection_tol, stop_at_detection, tag, keep_operators):
    trace = IterationTrace(strategy=tag, steps=[])
    state = IterationState(B=as_matrix(b1), n=1, w=expectation(rhoL, b1))
    while True:
        n, w = state.n, state.w
        u = choose(state.B, n)
        c = improvement(rhoL, state.B, u) if u is not None else float("nan")
        trace.steps.append(StepRecord(n, w, c, state.B if keep_operators else None,
                                      u if keep_operators else None))
        if w < -detection_tol and trace.detected_at is None:
            trace.detected_at = n
        if abs(w) > DIVERGENCE_GUARD:
            trace.diverged = True
            break
        if (trace.detected_at is not None and stop_at_detection) or n >= max_steps or u is None:
            break
        b_next = step(state.B, u, rhoL)
        w_next = expectation(rhoL, b_next)
        _monotone_or_raise(w, w_next, b_next)
        state.history.append((w, c))
        state = IterationState(B=b_next, n=n + 1, w=w_next, history=state.history)
    _finish_flags(trace)
    return trace
