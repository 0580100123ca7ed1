"""Positive (not completely positive) maps and the witnesses built from them.

A map always acts on the second subsystem.  The mapped state handed to the
iteration engine is normalized to unit trace; ``norm_factor`` keeps the
divided-out trace so witness values can be rescaled if needed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DegenerateMapError, InvalidArgument
from .linalg import as_matrix, hermitian_part, partial_transpose, require_unitary

if TYPE_CHECKING:
    from .states import BipartiteState


class MapKind(enum.Enum):
    TRANSPOSE = "transpose"
    REDUCTION = "reduction"


@dataclass(frozen=True)
class PositiveMap:
    kind: MapKind
    dim: int

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", MapKind(self.kind))
        if self.dim < 1:
            raise InvalidArgument("map dimension must be positive")

    @classmethod
    def from_tag(cls, tag: str, dim: int) -> "PositiveMap":
        try:
            kind = MapKind(tag.strip().lower())
        except ValueError:
            raise InvalidArgument(f"unknown map tag {tag!r}; use 'transpose' or 'reduction'") from None
        return cls(kind, dim)

    def _check(self, x) -> np.ndarray:
        x = as_matrix(x)
        if x.shape[0] != self.dim:
            raise InvalidArgument(f"map acts on dimension {self.dim}, got {x.shape[0]}")
        return x

    def apply(self, x) -> np.ndarray:
        x = self._check(x)
        if self.kind is MapKind.TRANSPOSE:
            return x.T.copy()
        return np.trace(x) * np.eye(self.dim) - x

    def adjoint(self, y) -> np.ndarray:
        # both supported maps are self-adjoint w.r.t. the Hilbert-Schmidt pairing
        return self.apply(y)

    def one_sided(self, m, dA: int) -> np.ndarray:
        """(id ⊗ Λ)(M) for a matrix on C^dA ⊗ C^dim."""
        m = as_matrix(m)
        dB = self.dim
        if dA * dB != m.shape[0]:
            raise InvalidArgument(f"dimensions {dA}x{dB} do not match matrix of size {m.shape[0]}")
        if self.kind is MapKind.TRANSPOSE:
            return partial_transpose(m, dA, dB)
        blocks = m.reshape(dA, dB, dA, dB)
        reduced_a = np.einsum("ijkj->ik", blocks)
        return np.kron(reduced_a, np.eye(dB)) - m

    def one_sided_adjoint(self, m, dA: int) -> np.ndarray:
        return self.one_sided(m, dA)


@dataclass(frozen=True)
class MappedState:
    """Unit-trace ``(id ⊗ Λ)(ρ)`` together with the trace that was divided out."""

    operator: np.ndarray
    norm_factor: float
    source_dims: tuple[int, int]

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @classmethod
    def from_operator(cls, op, dims: tuple[int, int] | None = None) -> "MappedState":
        """Wrap an already-mapped Hermitian operator, normalizing its trace."""
        op = hermitian_part(as_matrix(op))
        tr = float(np.trace(op).real)
        if abs(tr) < 1e-14:
            raise DegenerateMapError("mapped operator has zero trace")
        if dims is None:
            dims = (op.shape[0], 1)
        return cls(op / tr, tr, tuple(dims))


def apply_one_sided(pmap: PositiveMap, rho: "BipartiteState") -> MappedState:
    if pmap.dim != rho.dB:
        raise InvalidArgument(f"map dimension {pmap.dim} != second subsystem dimension {rho.dB}")
    mapped = pmap.one_sided(rho.rho, rho.dA)
    tr = float(np.trace(mapped).real)
    if abs(tr) < 1e-14:
        raise DegenerateMapError("mapped operator has zero trace")
    return MappedState(hermitian_part(mapped / tr), tr, (rho.dA, rho.dB))


def adjoint_apply(pmap: PositiveMap, y) -> np.ndarray:
    return pmap.adjoint(y)


def witness_operator(pmap: PositiveMap, b, dA: int | None = None) -> np.ndarray:
    """W = (id ⊗ Λ†)(B B†); ``tr(ρ W) = tr((id⊗Λ)(ρ) B B†)``."""
    b = as_matrix(b)
    if dA is None:
        dA, rem = divmod(b.shape[0], pmap.dim)
        if rem:
            raise InvalidArgument("B dimension is not a multiple of the map dimension")
    return hermitian_part(pmap.one_sided_adjoint(b @ b.conj().T, dA))


def evm2(rhoL: MappedState, b, u) -> np.ndarray:
    """2x2 expectation value matrix for the operator pair (U†, B)."""
    b = as_matrix(b)
    u = require_unitary(u)
    rho = rhoL.operator
    t = np.trace(rho @ b @ u)
    return np.array(
        [
            [1.0, np.conj(t)],
            [t, np.trace(rho @ b @ b.conj().T).real],
        ],
        dtype=complex,
    )
