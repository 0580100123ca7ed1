"""State and starting-operator families, random ensembles, NPT diagnostics.

Basis conventions: product basis |00>, |01>, |10>, |11>;
phi± = (|00> ± |11>)/√2, psi± = (|01> ± |10>)/√2.

Randomness goes through ``numpy.random.Generator`` objects.  Per-task
generators are derived from a master seed with ``numpy.random.SeedSequence``
so that results do not depend on how tasks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .linalg import as_matrix, dag, hermitian_eig, hermitian_part
from .maps import PositiveMap, apply_one_sided

STATE_TOL = 1e-12
PSD_TOL = 1e-10
DETECTION_TOL = 1e-10

_S = 1 / np.sqrt(2)
PHI_PLUS = np.array([_S, 0, 0, _S], dtype=complex)
PHI_MINUS = np.array([_S, 0, 0, -_S], dtype=complex)
PSI_PLUS = np.array([0, _S, _S, 0], dtype=complex)
PSI_MINUS = np.array([0, _S, -_S, 0], dtype=complex)
BELL_BASIS = {"phi+": PHI_PLUS, "phi-": PHI_MINUS, "psi+": PSI_PLUS, "psi-": PSI_MINUS}


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class BipartiteState:
    rho: np.ndarray
    dA: int
    dB: int

    def __post_init__(self):
        rho = as_matrix(self.rho)
        if self.dA * self.dB != rho.shape[0]:
            raise InvalidArgument(f"dimensions {self.dA}x{self.dB} do not match matrix of size {rho.shape[0]}")
        vals, _ = hermitian_eig(rho)
        if abs(np.trace(rho).real - 1) > STATE_TOL * rho.shape[0] or abs(np.trace(rho).imag) > STATE_TOL:
            raise InvalidArgument(f"state trace {np.trace(rho)} != 1")
        if vals[0] < -PSD_TOL:
            raise InvalidArgument(f"state has negative eigenvalue {vals[0]:.3e}")
        object.__setattr__(self, "rho", hermitian_part(rho))

    @property
    def dim(self) -> int:
        return self.dA * self.dB


def two_qubit(rho) -> BipartiteState:
    return BipartiteState(rho, 2, 2)


def make_rng(seed: int, *task: int) -> np.random.Generator:
    """Generator for ``task`` under master ``seed``; independent of worker layout."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(t) for t in task))
    return np.random.Generator(np.random.PCG64(ss))


def bell_weights(p1: float, p2: float) -> np.ndarray:
    """Weights on (phi+, phi-, psi+, psi-) of the Bell-diagonal family."""
    q = 1.0 - p1 - p2
    return np.array([p1 + q / 4, p2 + q / 4, q / 4, q / 4])


def bell_diagonal(p1: float, p2: float) -> BipartiteState:
    """p1 |phi+><phi+| + p2 |phi-><phi-| + (1 - p1 - p2) 1/4."""
    tol = 1e-12
    if p1 < -tol or p2 < -tol or p1 + p2 > 1 + tol:
        raise InvalidArgument(f"({p1}, {p2}) lies outside the triangle p1, p2 >= 0, p1 + p2 <= 1")
    q = 1.0 - p1 - p2
    rho = p1 * projector(PHI_PLUS) + p2 * projector(PHI_MINUS) + q * np.eye(4) / 4
    return two_qubit(rho)


def starting_operator(eps: float) -> np.ndarray:
    """B1(eps) = [√(1+3ε) P + √(1-ε) (1 - P)] / 2 with P the singlet projector.

    Its witness (B1 B1†)^Γ is ε (|psi-><psi-|)^Γ + (1 - ε) 1/4.
    """
    if not 0.0 <= eps <= 1.0:
        raise InvalidArgument(f"eps must lie in [0, 1], got {eps}")
    p = projector(PSI_MINUS)
    return 0.5 * (np.sqrt(1 + 3 * eps) * p + np.sqrt(1 - eps) * (np.eye(4) - p))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix with R's diagonal made positive."""
    if d < 1:
        raise InvalidArgument("dimension must be positive")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape (count, d, d)."""
    z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random density matrix GG†/tr(GG†), G square Ginibre."""
    if d < 2:
        raise InvalidArgument("dimension must be at least 2")
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ dag(g)
    return hermitian_part(rho / np.trace(rho).real)


def min_pt_eigenvalue(rho: BipartiteState, pmap: PositiveMap | None = None) -> float:
    pmap = pmap or PositiveMap("transpose", rho.dB)
    return float(hermitian_eig(apply_one_sided(pmap, rho).operator).eigenvalues[0])


def random_npt_state(rng: np.random.Generator, dA: int = 2, dB: int = 2, max_tries: int = 10_000) -> BipartiteState:
    """Hilbert-Schmidt random state conditioned on a negative partial transpose."""
    for _ in range(max_tries):
        state = BipartiteState(random_density(dA * dB, rng), dA, dB)
        if min_pt_eigenvalue(state) < -DETECTION_TOL:
            return state
    raise RuntimeError("no NPT state found")  # pragma: no cover


def random_ppt_state(rng: np.random.Generator, dA: int = 2, dB: int = 2, max_tries: int = 10_000) -> BipartiteState:
    for _ in range(max_tries):
        state = BipartiteState(random_density(dA * dB, rng), dA, dB)
        if min_pt_eigenvalue(state) >= 0:
            return state
    raise RuntimeError("no PPT state found")  # pragma: no cover


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_separable_state(rng: np.random.Generator, dA: int = 2, dB: int = 2, max_terms: int = 8) -> BipartiteState:
    """Dirichlet-weighted mixture of 1..max_terms Haar-random product states."""
    k = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(k))
    rho = np.zeros((dA * dB, dA * dB), dtype=complex)
    for w in weights:
        v = np.kron(random_pure(dA, rng), random_pure(dB, rng))
        rho += w * projector(v)
    return BipartiteState(rho / np.trace(rho).real, dA, dB)


def npt_diagnostics(rho: BipartiteState, pmap: PositiveMap | None = None):
    """(most negative eigenvalue, its eigenvector, detected flag) of the mapped state."""
    pmap = pmap or PositiveMap("transpose", rho.dB)
    vals, vecs = hermitian_eig(apply_one_sided(pmap, rho).operator)
    lam = float(vals[0])
    return lam, vecs[:, 0], lam < -DETECTION_TOL
