import numpy as np
import pytest

from witness_forge.errors import InvalidArgument
from witness_forge.linalg import hermitian_eig, partial_transpose
from witness_forge.states import (
    PHI_PLUS,
    PSI_MINUS,
    BipartiteState,
    bell_diagonal,
    bell_weights,
    haar_unitary,
    make_rng,
    npt_diagnostics,
    projector,
    random_density,
    random_npt_state,
    random_separable_state,
    starting_operator,
)
from witness_forge.verify import peter_weyl_moment

from conftest import random_complex


def test_bell_diagonal_corners():
    assert np.allclose(bell_diagonal(0, 0).rho, np.eye(4) / 4)
    assert np.allclose(bell_diagonal(1, 0).rho, projector(PHI_PLUS))


def test_bell_diagonal_npt_example():
    vals, _ = hermitian_eig(partial_transpose(bell_diagonal(0.6, 0.2).rho, 2, 2))
    assert np.allclose(vals, [-0.15, 0.25, 0.45, 0.45], atol=1e-14)
    assert np.allclose(bell_weights(0.6, 0.2), [0.65, 0.25, 0.05, 0.05])


@pytest.mark.parametrize("p", [(-0.1, 0.2), (0.7, 0.4), (0.5, -0.01)])
def test_bell_diagonal_outside_triangle(p):
    with pytest.raises(InvalidArgument):
        bell_diagonal(*p)


def test_bell_diagonal_ppt_boundary_matches_weight_rule():
    # brute-force eigenvalue check against "every Bell weight <= 1/2"
    grid = np.linspace(0, 1, 200)
    mismatches = 0
    for p1 in grid:
        for p2 in grid:
            if p1 + p2 > 1:
                continue
            lam = np.linalg.eigvalsh(partial_transpose(bell_diagonal(p1, p2).rho, 2, 2))[0]
            by_weights = np.all(bell_weights(p1, p2) <= 0.5 + 1e-12)
            mismatches += (lam >= -1e-12) != by_weights
    assert mismatches == 0


def test_starting_operator_examples():
    assert np.allclose(starting_operator(0), np.eye(4) / 2)
    assert np.allclose(starting_operator(1), projector(PSI_MINUS))
    b = starting_operator(0.5)
    assert np.vdot(PSI_MINUS, b @ PSI_MINUS).real == pytest.approx(np.sqrt(2.5) / 2)
    vals = np.linalg.eigvalsh(b)
    assert np.allclose(vals, [np.sqrt(0.5) / 2] * 3 + [np.sqrt(2.5) / 2])
    with pytest.raises(InvalidArgument):
        starting_operator(1.2)


@pytest.mark.parametrize("eps", np.linspace(0, 1, 21))
def test_starting_operator_positivity(eps):
    b = starting_operator(eps)
    assert np.allclose(b, b.conj().T)
    lam = np.linalg.eigvalsh(b)[0]
    if eps < 1:
        assert lam > 0
    else:
        assert lam >= -1e-15


def test_haar_unitary_is_unitary_and_seeded():
    rng = make_rng(13)
    worst = max(np.linalg.norm(u.conj().T @ u - np.eye(4)) for u in (haar_unitary(4, rng) for _ in range(1000)))
    assert worst <= 1e-10
    assert np.array_equal(haar_unitary(3, make_rng(14)), haar_unitary(3, make_rng(14)))


def test_haar_unitary_peter_weyl_moment():
    rng = make_rng(15)
    a, b = random_complex(rng, 4), random_complex(rng, 4)
    mean, err = peter_weyl_moment(a, b, 100_000, rng)
    assert abs(mean - np.trace(a @ b)) <= 3 * err


def test_random_density_valid():
    rng = make_rng(16)
    for _ in range(10_000):
        rho = random_density(4, rng)
        BipartiteState(rho, 2, 2)


def test_random_density_mean_is_maximally_mixed():
    rng = make_rng(17)
    draws = np.array([random_density(3, rng) for _ in range(10_000)])
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    se = np.abs(se.real) + np.abs(se.imag)
    assert np.all(np.abs(mean - np.eye(3) / 3) <= 5 * se + 1e-15)


def test_random_npt_and_separable_samplers():
    rng = make_rng(18)
    for _ in range(50):
        assert npt_diagnostics(random_npt_state(rng))[2]
        assert not npt_diagnostics(random_separable_state(rng))[2]


def test_npt_diagnostics_examples(singlet):
    lam, vec, det = npt_diagnostics(BipartiteState(np.eye(4) / 4, 2, 2))
    assert lam == pytest.approx(0.25) and not det
    lam, vec, det = npt_diagnostics(singlet)
    assert lam == pytest.approx(-0.5) and det
    assert abs(np.vdot(PHI_PLUS, vec)) == pytest.approx(1.0)
    assert npt_diagnostics(bell_diagonal(0.6, 0.2))[0] == pytest.approx(-0.15)


def test_state_validation():
    with pytest.raises(InvalidArgument):
        BipartiteState(np.eye(4) / 2, 2, 2)
    with pytest.raises(InvalidArgument):
        BipartiteState(np.diag([1.5, -0.5, 0, 0]), 2, 2)
    with pytest.raises(InvalidArgument):
        BipartiteState(np.eye(4) / 4, 2, 3)
