import json
from dataclasses import asdict

import numpy as np
import pytest

from witness_forge import verify
from witness_forge.averaged import AveragedState, averaged_step
from witness_forge.linalg import hermitian_part


def flipped_step(a, rhoL):
    """Averaged recursion with the sign of the anticommutator term flipped."""
    rho = rhoL.operator
    nxt = a.A + (np.trace(a.A).real * (rho @ rho) + (rho @ a.A + a.A @ rho)) / a.d
    return AveragedState(hermitian_part(nxt), a.n + 1, a.d)


def dropped_trace_step(a, rhoL):
    """Averaged recursion missing the tr(A) rho^2 term."""
    rho = rhoL.operator
    return AveragedState(hermitian_part(a.A - (rho @ a.A + a.A @ rho) / a.d), a.n + 1, a.d)


def test_suite_result_line_and_json():
    res = verify.SuiteResult("x", np.bool_(True), np.float64(1e-12), 1e-9, np.int64(3),
                             detail={"k": np.float64(2.0)})
    assert res.line().startswith("PASS x: max residual 1.000e-12")
    json.dumps(asdict(res))


@pytest.mark.parametrize("suite", [
    lambda: verify.monotonicity(runs=30, steps=20),
    lambda: verify.ppt_soundness(states=20, steps=20),
    lambda: verify.geometric_law(states=10),
    lambda: verify.optimized_contracts(runs=20),
    lambda: verify.detection_bound(states=20),
    lambda: verify.averaged_bounds(states=5, n_max=60),
    lambda: verify.averaged_commutation(states=5, n_max=60),
    lambda: verify.averaged_mc_agreement(states=2, samples=20_000),
    lambda: verify.peter_weyl(pairs=3, samples=20_000),
])
def test_suites_pass_on_correct_code(suite):
    res = suite()
    assert res.passed, res.line()
    assert res.seconds > 0


@pytest.mark.parametrize("mutant", [flipped_step, dropped_trace_step])
def test_mutated_recursion_is_caught(mutant):
    mc = verify.averaged_mc_agreement(states=3, samples=20_000, step_fn=mutant)
    bounds = verify.averaged_bounds(states=10, n_max=50, step_fn=mutant)
    assert not (mc.passed and bounds.passed)
    assert not mc.passed


def test_mutation_keeps_commuting():
    # any polynomial in rho commutes with rho, so the commutator check alone
    # cannot see this kind of bug
    res = verify.averaged_commutation(states=5, n_max=30, step_fn=flipped_step)
    assert res.passed


def test_singlet_geometric_ratio(singlet_pt):
    errs = verify.geometric_law_errors(singlet_pt, np.eye(4), 10)
    assert np.max(errs) <= 1e-12


def test_detection_bound_residual_on_singlet(singlet_pt):
    from witness_forge.states import starting_operator

    assert verify.detection_bound_residual(singlet_pt, starting_operator(0.5)) <= 1e-12


def test_run_all_report_shape():
    quick = [(name, fn) for name, fn in verify.default_suites(quick=True)][:2]
    report = verify.run_all(seed=1, suites=quick)
    assert set(report) == {"seed", "passed", "failed", "suites"}
    assert report["passed"] and len(report["suites"]) == 2
    json.dumps(report)
