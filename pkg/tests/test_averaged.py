from fractions import Fraction

import numpy as np
import pytest

from witness_forge.averaged import (
    AveragedState,
    averaged_expectation,
    averaged_monte_carlo,
    averaged_monte_carlo_path,
    averaged_sequence,
    averaged_step,
    averaged_values,
    commutator_norm,
)
from witness_forge.errors import InvalidArgument
from witness_forge.iteration import Strategy, run
from witness_forge.maps import MappedState, apply_one_sided
from witness_forge.states import make_rng, random_npt_state, starting_operator

from conftest import TRANSPOSE, random_complex

# singlet, B1 = 1: exact rational values of the averaged expectation
SINGLET_WBAR = [Fraction(1), Fraction(3, 4), Fraction(15, 32), Fraction(9, 64), Fraction(-261, 1024)]
SINGLET_N0 = 5


def test_singlet_first_step(singlet_pt):
    a2 = averaged_step(AveragedState.initial(singlet_pt), singlet_pt)
    assert a2.n == 2
    assert np.trace(a2.A).real == pytest.approx(0.75, abs=1e-15)
    assert np.allclose(np.linalg.eigvalsh(a2.A), [-0.5625, 0.4375, 0.4375, 0.4375], atol=1e-15)
    assert abs(averaged_expectation(a2, np.eye(4)) - 0.75) <= 1e-12


def test_singlet_exact_sequence(singlet_pt):
    vals = averaged_values(singlet_pt, np.eye(4), 5)
    assert np.allclose(vals, [float(f) for f in SINGLET_WBAR], atol=1e-14)


def scalar_oracle(n_max):
    # for the singlet, A_n = x_n 1 + y_n P with P the projector onto phi+
    # (rho = 1/2 - P, rho^2 = 1/4); exact rational recursion
    x, y = Fraction(1, 2), Fraction(-1)
    out = []
    for _ in range(n_max):
        tr = 4 * x + y
        out.append(tr)  # w = tr(A) for B1 = 1
        # rho A + A rho = x 1 + (-2x - y) P
        anti_x = x
        anti_y = -2 * x - y
        x, y = x + (tr / 4 - anti_x) / 4, y - anti_y / 4
    return out


def test_scalar_oracle_matches_frozen_constants():
    assert scalar_oracle(5) == SINGLET_WBAR


def test_singlet_detection_index(singlet_pt):
    vals = averaged_values(singlet_pt, np.eye(4), 50)
    n0 = next(i + 1 for i, w in enumerate(vals) if w < 0)
    assert n0 == SINGLET_N0
    trace = run(singlet_pt, np.eye(4), Strategy.averaged(), 50)
    assert trace.detected_at == SINGLET_N0
    assert np.allclose(trace.c[:-1], -np.diff(trace.w))


def test_averaged_step_dimension_check(singlet_pt):
    bad = AveragedState(np.eye(2), 1, 2)
    with pytest.raises(InvalidArgument):
        averaged_step(bad, singlet_pt)
    with pytest.raises(InvalidArgument):
        averaged_expectation(AveragedState.initial(singlet_pt), np.eye(2))


def test_averaged_iterates_commute_with_state():
    rng = make_rng(30)
    m = apply_one_sided(TRANSPOSE, random_npt_state(rng))
    for a in averaged_sequence(m, 30):
        assert commutator_norm(a.A, m.operator) <= 1e-13 * max(1, np.linalg.norm(a.A))


# --- U(2) quadrature oracle ---------------------------------------------


def u2_quadrature(n_u=4, n_angle=7):
    """Nodes and weights integrating low-degree polynomials exactly over Haar U(2).

    U = e^{ia} [[cos t e^{ip}, sin t e^{ic}], [-sin t e^{-ic}, cos t e^{-ip}]]
    with s = sin^2 t uniform on [0, 1] and the three angles uniform.
    """
    x, wx = np.polynomial.legendre.leggauss(n_u)
    s, ws = (x + 1) / 2, wx / 2
    ang = 2 * np.pi * np.arange(n_angle) / n_angle
    S, P, C, A = np.meshgrid(s, ang, ang, ang, indexing="ij")
    W = np.broadcast_to(ws[:, None, None, None], S.shape) / n_angle**3
    ct, st_ = np.sqrt(1 - S), np.sqrt(S)
    ph = np.exp(1j * A)
    U = np.empty(S.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = ph * ct * np.exp(1j * P)
    U[..., 0, 1] = ph * st_ * np.exp(1j * C)
    U[..., 1, 0] = -ph * st_ * np.exp(-1j * C)
    U[..., 1, 1] = ph * ct * np.exp(-1j * P)
    return U.reshape(-1, 2, 2), W.ravel()


def _advance(rho, B, U):
    BU = B @ U
    t = np.einsum("ij,...ji->...", rho, BU)
    return BU - t[..., None, None] * np.eye(2)


def _w(rho, B):
    return np.einsum("ij,...jk,...ik->...", rho, B, B.conj()).real


def quadrature_wbar(rho, b1, n):
    U, wt = u2_quadrature()
    if n == 2:
        return float(wt @ _w(rho, _advance(rho, b1, U)))
    if n == 3:
        B2 = _advance(rho, b1, U)
        B3 = _advance(rho, B2[:, None], U[None])
        return float(wt @ _w(rho, B3) @ wt)
    raise ValueError(n)


def test_quadrature_integrates_haar_moments():
    U, wt = u2_quadrature()
    assert wt.sum() == pytest.approx(1.0)
    assert wt @ np.abs(U[:, 0, 0]) ** 2 == pytest.approx(0.5)
    assert wt @ np.abs(U[:, 0, 0]) ** 4 == pytest.approx(1 / 3)
    assert abs(wt @ U[:, 0, 0]) <= 1e-15


@pytest.mark.parametrize("seed", range(5))
def test_closed_form_matches_u2_quadrature(seed):
    rng = make_rng(31, seed)
    h = random_complex(rng, 2)
    h = h + h.conj().T
    vals, vecs = np.linalg.eigh(h)
    vals = np.array([-abs(vals[0]) - 0.1, abs(vals[1]) + 0.5])
    op = (vecs * vals) @ vecs.conj().T
    m = MappedState.from_operator(op)
    assert np.linalg.eigvalsh(m.operator)[0] < 0
    b1 = random_complex(rng, 2)
    closed = averaged_values(m, b1, 3)
    for n in (2, 3):
        assert closed[n - 1] == pytest.approx(quadrature_wbar(m.operator, b1, n), rel=1e-10, abs=1e-12)


# --- Monte-Carlo ----------------------------------------------------------


def test_monte_carlo_first_value_is_exact(singlet_pt):
    mean, err = averaged_monte_carlo(singlet_pt, np.eye(4), 1, 1000, 1)
    assert mean == pytest.approx(1.0) and err == 0.0


def test_monte_carlo_agrees_with_closed_form():
    rng = make_rng(32)
    for _ in range(3):
        m = apply_one_sided(TRANSPOSE, random_npt_state(rng))
        b1 = starting_operator(0.5)
        closed = averaged_values(m, b1, 4)
        mean, err = averaged_monte_carlo_path(m, b1, 4, 20_000, 33)
        assert np.all(np.abs(mean[1:] - closed[1:]) <= 4 * err[1:])


def test_monte_carlo_independent_of_workers(singlet_pt):
    a = averaged_monte_carlo_path(singlet_pt, np.eye(4), 4, 10_000, 34, workers=1)
    b = averaged_monte_carlo_path(singlet_pt, np.eye(4), 4, 10_000, 34, workers=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_monte_carlo_strategy_run(singlet_pt):
    trace = run(singlet_pt, np.eye(4), Strategy.averaged_mc(5000, 35), 3, stop_at_detection=False)
    assert trace.strategy.startswith("averaged")
    assert len(trace.steps) == 3
    assert trace.w[0] == pytest.approx(1.0)


def test_monte_carlo_argument_checks(singlet_pt):
    with pytest.raises(InvalidArgument):
        averaged_monte_carlo(singlet_pt, np.eye(4), 0, 10, 1)
