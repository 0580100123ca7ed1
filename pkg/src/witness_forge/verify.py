"""Invariant suites.

Each suite samples its own inputs from a seed, measures a residual and
returns a :class:`SuiteResult`.  ``run_all`` bundles them into the report
emitted by ``witness-forge verify``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .averaged import (
    AveragedState,
    averaged_expectation,
    averaged_monte_carlo_path,
    averaged_step,
    commutator_norm,
)
from .errors import NumericFailure
from .iteration import Strategy, run
from .linalg import hermitian_eig, trace_norm
from .maps import MappedState, PositiveMap, apply_one_sided
from .states import (
    haar_unitaries,
    make_rng,
    random_npt_state,
    random_ppt_state,
    random_separable_state,
    starting_operator,
)

TRANSPOSE = PositiveMap("transpose", 2)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    cases: int
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        # numpy scalars are not JSON serializable
        self.passed = bool(self.passed)
        self.max_residual = float(self.max_residual)
        self.tolerance = float(self.tolerance)
        self.cases = int(self.cases)
        self.detail = {k: v.item() if isinstance(v, np.generic) else v for k, v in self.detail.items()}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: max residual {self.max_residual:.3e} "
                f"(tol {self.tolerance:.1e}, {self.cases} cases, {self.seconds:.1f}s)")


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _mapped(state) -> MappedState:
    return apply_one_sided(TRANSPOSE, state)


def random_start(rng, d=4) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return g / np.linalg.norm(g)


PER_STEP = ("example", "optimized", "random")


@_timed
def monotonicity(runs=1000, steps=50, seed=1, tol=1e-10) -> SuiteResult:
    """w_{n+1} <= w_n + tol over random NPT states, random B1, mixed strategies."""
    worst = 0.0
    failures = 0
    for i in range(runs):
        rng = make_rng(seed, i)
        rhoL = _mapped(random_npt_state(rng))
        b1 = random_start(rng)
        kind = PER_STEP[i % 3]
        strategy = Strategy.random(int(rng.integers(2**63))) if kind == "random" else Strategy(kind)
        try:
            w = run(rhoL, b1, strategy, steps, stop_at_detection=False).w
        except NumericFailure:
            failures += 1
            continue
        if len(w) > 1:
            worst = max(worst, float(np.max(np.diff(w))))
    resid = max(worst, 0.0)
    return SuiteResult("monotonicity", failures == 0 and resid <= tol, resid, tol, runs,
                       detail={"numeric_failures": failures})


@_timed
def ppt_soundness(states=1000, steps=50, seed=2, tol=1e-9) -> SuiteResult:
    """PPT inputs never give w_n < -tol under any strategy."""
    worst = 0.0
    strategies = [Strategy.example(), Strategy.optimized(), None, Strategy.averaged()]
    for i in range(states):
        rng = make_rng(seed, i)
        state = random_separable_state(rng) if i % 2 == 0 else random_ppt_state(rng)
        rhoL = _mapped(state)
        b1 = random_start(rng)
        for strat in strategies:
            if strat is None:
                strat = Strategy.random(int(rng.integers(2**63)))
            w = run(rhoL, b1, strat, steps, detection_tol=np.inf).w
            worst = max(worst, -float(np.min(w)))
    resid = max(worst, 0.0)
    return SuiteResult("ppt-soundness", resid <= tol, resid, tol, states)


def geometric_law_errors(rhoL: MappedState, b1, n_max=10) -> np.ndarray:
    """Relative errors of c_n against c_2 * ||ρ||_1^(2(n-2)) for n = 3..n_max."""
    tr = run(rhoL, b1, Strategy.example(), n_max, stop_at_detection=False)
    c = tr.c
    norm = trace_norm(rhoL.operator)
    n = np.arange(1, len(c) + 1)
    predicted = c[1] * norm ** (2 * (n - 2))
    return (np.abs(c - predicted) / np.abs(predicted))[2:]


@_timed
def geometric_law(states=100, n_max=10, seed=3, tol=1e-8) -> SuiteResult:
    worst = 0.0
    for i in range(states):
        rhoL = _mapped(random_npt_state(make_rng(seed, i)))
        worst = max(worst, float(np.max(geometric_law_errors(rhoL, np.eye(4), n_max))))
    return SuiteResult("example-geometric-law", worst <= tol, worst, tol, states)


def optimized_step_residuals(rhoL: MappedState, b1, steps=50):
    """(max rel. error of c_n vs ||ρB_n||_1², max of -mineig(ρB_nU_n)/||ρB_n||_1)."""
    tr = run(rhoL, b1, Strategy.optimized(), steps, stop_at_detection=False, keep_operators=True)
    c_err = psd_err = 0.0
    for s in tr.steps:
        m = rhoL.operator @ s.B
        tn = trace_norm(m)
        if tn == 0:
            continue
        c_err = max(c_err, abs(s.c - tn**2) / tn**2)
        post = m @ s.U
        lam_min = hermitian_eig(0.5 * (post + post.conj().T)).eigenvalues[0]
        psd_err = max(psd_err, -lam_min / tn)
    return c_err, psd_err


@_timed
def optimized_contracts(runs=500, steps=50, seed=4, tol=1e-9) -> SuiteResult:
    c_worst = psd_worst = 0.0
    for i in range(runs):
        rng = make_rng(seed, i)
        rhoL = _mapped(random_npt_state(rng))
        c_err, psd_err = optimized_step_residuals(rhoL, random_start(rng), steps)
        c_worst, psd_worst = max(c_worst, c_err), max(psd_worst, psd_err)
    resid = max(c_worst, psd_worst, 0.0)
    return SuiteResult("optimized-contracts", resid <= tol, resid, tol, runs,
                       detail={"c_rel_err": c_worst, "psd_violation": psd_worst})


def detection_bound_residual(rhoL: MappedState, b1, steps=50) -> float:
    """max over n >= 2 of d_1 λ_min - d_n  (should be <= 0)."""
    lam_min = abs(hermitian_eig(rhoL.operator).eigenvalues[0])
    tr = run(rhoL, b1, Strategy.optimized(), steps, stop_at_detection=False, keep_operators=True)
    d = np.array([np.trace(rhoL.operator @ s.B @ s.U).real for s in tr.steps])
    if len(d) < 2:
        return -np.inf
    return float(np.max(d[0] * lam_min - d[1:]))


@_timed
def detection_bound(states=500, eps_values=(0.5, 0.8), steps=50, seed=5, tol=1e-8) -> SuiteResult:
    worst = -np.inf
    for i in range(states):
        rhoL = _mapped(random_npt_state(make_rng(seed, i)))
        for eps in eps_values:
            worst = max(worst, detection_bound_residual(rhoL, starting_operator(eps), steps))
    resid = max(worst, 0.0)
    return SuiteResult("optimized-detection-bound", resid <= tol, resid, tol, states * len(eps_values))


def averaged_bound_residuals(rhoL: MappedState, n_max=200, step_fn=averaged_step):
    """Worst violations of the eigenvalue bounds on A_n and the commutator sizes.

    Returns (bound_violation, max ||[A_n, ρ]||_F, max ||[A_n, ρ]||_F / max(1, ||A_n||_F)).
    """
    d = rhoL.dim
    lam, vecs = hermitian_eig(rhoL.operator)
    neg = lam < 0
    mag = np.abs(lam)
    a = AveragedState.initial(rhoL)
    viol = comm = comm_rel = 0.0
    for n in range(1, n_max + 1):
        if n > 1:
            a = step_fn(a, rhoL)
        diag = np.einsum("ji,jk,ki->i", vecs.conj(), a.A, vecs).real
        upper_pos = mag + (n - 1) * mag**2 / d
        upper_neg = -mag * (1 + mag / d) ** (n - 1)
        bound = np.where(neg, upper_neg, upper_pos)
        viol = max(viol, float(np.max(diag - bound)))
        cn = commutator_norm(a.A, rhoL.operator)
        comm = max(comm, cn)
        comm_rel = max(comm_rel, cn / max(1.0, float(np.linalg.norm(a.A))))
    return viol, comm, comm_rel


@_timed
def averaged_bounds(states=100, n_max=200, seed=6, tol=1e-9, step_fn=averaged_step) -> SuiteResult:
    worst = 0.0
    for i in range(states):
        viol, _, _ = averaged_bound_residuals(_mapped(random_npt_state(make_rng(seed, i))), n_max, step_fn)
        worst = max(worst, viol)
    return SuiteResult("averaged-eigenvalue-bounds", worst <= tol, worst, tol, states)


@_timed
def averaged_commutation(states=100, n_max=200, seed=6, tol=1e-9, step_fn=averaged_step) -> SuiteResult:
    """Commutator of A_n with ρ, measured relative to max(1, ||A_n||_F).

    ||A_n|| grows exponentially, and a double-precision commutator of matrices
    that commute exactly already carries ~1e-16 ||A_n|| of rounding, so the
    absolute residual is reported alongside but not gated on.
    """
    rel = absolute = 0.0
    for i in range(states):
        _, cn, cr = averaged_bound_residuals(_mapped(random_npt_state(make_rng(seed, i))), n_max, step_fn)
        rel, absolute = max(rel, cr), max(absolute, cn)
    return SuiteResult("averaged-commutation", rel <= tol, rel, tol, states,
                       detail={"max_absolute_commutator": absolute})


@_timed
def averaged_mc_agreement(states=10, n_values=(2, 3, 4), samples=100_000, seed=7,
                          sigmas=3.0, step_fn=averaged_step, b1=None) -> SuiteResult:
    """Closed-form w̄_n against a Monte-Carlo estimate, in standard errors."""
    worst = 0.0
    n_max = max(n_values)
    for i in range(states):
        rhoL = _mapped(random_npt_state(make_rng(seed, i)))
        start = np.eye(4) if b1 is None else b1
        mean, err = averaged_monte_carlo_path(rhoL, start, n_max, samples, int(make_rng(seed, i, 1).integers(2**63)))
        a = AveragedState.initial(rhoL)
        closed = [averaged_expectation(a, start)]
        for _ in range(n_max - 1):
            a = step_fn(a, rhoL)
            closed.append(averaged_expectation(a, start))
        for n in n_values:
            worst = max(worst, abs(closed[n - 1] - mean[n - 1]) / err[n - 1])
    return SuiteResult("averaged-closed-form-vs-monte-carlo", worst <= sigmas, worst, sigmas,
                       states * len(n_values))


def peter_weyl_moment(a, b, samples, rng, chunk=20_000):
    """Mean and complex standard error of d tr(AU) tr(BU†) over Haar U."""
    d = a.shape[0]
    vals = []
    for start in range(0, samples, chunk):
        U = haar_unitaries(d, min(chunk, samples - start), rng)
        tau = np.einsum("ij,sji->s", a, U)
        tbu = np.einsum("ij,sij->s", b, U.conj())  # tr(B U†) = Σ B_ij conj(U_ij)
        vals.append(d * tau * tbu)
    v = np.concatenate(vals)
    return v.mean(), float(np.sqrt((v.real.var(ddof=1) + v.imag.var(ddof=1)) / len(v)))


@_timed
def peter_weyl(pairs=20, samples=100_000, d=4, seed=8, sigmas=3.0) -> SuiteResult:
    worst = 0.0
    for i in range(pairs):
        rng = make_rng(seed, i)
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        mean, err = peter_weyl_moment(a, b, samples, rng)
        worst = max(worst, abs(mean - np.trace(a @ b)) / err)
    return SuiteResult("peter-weyl-moment", worst <= sigmas, worst, sigmas, pairs)


def default_suites(quick: bool = False):
    """(name, callable) pairs at report sizes; ``quick`` shrinks sample counts."""
    k = 10 if quick else 1
    return [
        ("monotonicity", lambda seed: monotonicity(runs=1000 // k, seed=seed + 1)),
        ("ppt-soundness", lambda seed: ppt_soundness(states=1000 // k, seed=seed + 2)),
        ("example-geometric-law", lambda seed: geometric_law(states=100 // k, seed=seed + 3)),
        ("optimized-contracts", lambda seed: optimized_contracts(runs=500 // k, seed=seed + 4)),
        ("optimized-detection-bound", lambda seed: detection_bound(states=500 // k, seed=seed + 5)),
        ("averaged-eigenvalue-bounds", lambda seed: averaged_bounds(states=100 // k, seed=seed + 6)),
        ("averaged-commutation", lambda seed: averaged_commutation(states=100 // k, seed=seed + 6)),
        ("averaged-closed-form-vs-monte-carlo",
         lambda seed: averaged_mc_agreement(states=10 // k or 1, samples=100_000 // k, seed=seed + 7)),
        ("peter-weyl-moment", lambda seed: peter_weyl(pairs=20 // k, samples=100_000 // k, seed=seed + 8)),
    ]


def run_all(seed: int = 42, quick: bool = False, suites=None) -> dict:
    results = [fn(seed) for _, fn in (suites or default_suites(quick))]
    return {
        "seed": seed,
        "passed": all(r.passed for r in results),
        "failed": [r.name for r in results if not r.passed],
        "suites": [asdict(r) for r in results],
    }
