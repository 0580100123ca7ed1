"""Nonlinear entanglement witnesses by iterated quadratic improvement."""

from .errors import DegenerateMapError, InvalidArgument, NotPSDError, NumericFailure
from .linalg import hermitian_eig, partial_transpose, psd_sqrt, svd, trace_norm
from .maps import MappedState, PositiveMap, adjoint_apply, apply_one_sided, evm2, witness_operator
from .states import (
    BipartiteState,
    bell_diagonal,
    haar_unitary,
    make_rng,
    npt_diagnostics,
    random_density,
    random_npt_state,
    starting_operator,
)
from .iteration import (
    IterationTrace,
    Strategy,
    StrategyKind,
    example_unitary,
    expectation,
    improvement,
    optimized_unitary,
    run,
    step,
)
from .averaged import AveragedState, averaged_expectation, averaged_monte_carlo, averaged_step

__version__ = "0.1.0"
