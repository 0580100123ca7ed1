"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays of shape ``(d, d)``; every
function here treats its inputs as immutable and returns fresh arrays.
Eigen- and singular value decompositions are delegated to LAPACK through
``numpy.linalg`` and re-sorted to the conventions used by the rest of the
package (eigenvalues ascending, singular values descending).
"""

from __future__ import annotations

import json
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument, NotPSDError, NumericFailure

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-10
PSD_TOL = 1e-10


class Spectrum(NamedTuple):
    """Eigenvalues (ascending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class SvdFactors(NamedTuple):
    """``M = left @ diag(singulars) @ right.conj().T`` with singulars descending."""

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a complex square matrix, raising on bad shapes."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidArgument(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dag(m))


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest |M_ij - conj(M_ji)| relative to the Frobenius norm of M."""
    norm = np.linalg.norm(m)
    if norm == 0:
        return 0.0
    return float(np.max(np.abs(m - dag(m))) / norm)


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermiticity_defect(as_matrix(m)) <= rtol


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = as_matrix(u)
    return float(np.linalg.norm(dag(u) @ u - np.eye(u.shape[0]))) <= tol


def require_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = as_matrix(u)
    if not is_unitary(u, tol):
        raise InvalidArgument("matrix is not unitary within tolerance")
    return u


def partial_transpose(m, dA: int, dB: int) -> np.ndarray:
    """Transpose the second tensor factor of a ``(dA*dB) x (dA*dB)`` matrix.

    Entry ``[(i,j), (k,l)]`` of the result is entry ``[(i,l), (k,j)]`` of the input.
    """
    m = as_matrix(m)
    if dA < 1 or dB < 1 or dA * dB != m.shape[0]:
        raise InvalidArgument(f"dimensions {dA}x{dB} do not match matrix of size {m.shape[0]}")
    t = m.reshape(dA, dB, dA, dB).transpose(0, 3, 2, 1)
    return t.reshape(dA * dB, dA * dB).copy()


def hermitian_eig(m) -> Spectrum:
    m = as_matrix(m)
    defect = hermiticity_defect(m)
    if defect > HERMITIAN_RTOL:
        raise InvalidArgument(f"matrix is not Hermitian (relative defect {defect:.2e})")
    try:
        vals, vecs = np.linalg.eigh(hermitian_part(m))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK convergence failure
        raise NumericFailure(f"eigendecomposition did not converge: {exc}") from exc
    # eigh already returns ascending order
    return Spectrum(vals, vecs)


def svd(m) -> SvdFactors:
    m = as_matrix(m)
    try:
        v, s, wh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return SvdFactors(v, s, dag(wh))


def trace_norm(m) -> float:
    m = as_matrix(m)
    try:
        s = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    return float(np.sum(s))


def psd_sqrt(p) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in [-1e-10, 0) are clamped to zero."""
    vals, vecs = hermitian_eig(p)
    if vals[0] < -PSD_TOL:
        raise NotPSDError(vals[0])
    root = np.sqrt(np.clip(vals, 0.0, None))
    b = (vecs * root) @ dag(vecs)
    return hermitian_part(b)


def matrix_to_rows(m) -> list:
    """JSON-ready nested list: rows of ``[re, im]`` pairs."""
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_rows(rows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed matrix JSON: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InvalidArgument("matrix JSON must be an array of rows of [re, im] pairs")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_rows(m))


def loads_matrix(text: str) -> np.ndarray:
    return matrix_from_rows(json.loads(text))
