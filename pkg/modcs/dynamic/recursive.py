#  Copyright (c) modcs contributors.

"""
Recursive reconstruction of a measurement sequence.

Every pipeline solves t = 0 with the (larger) initial operator A0 and the
bootstrap set T0, then walks forward with A, feeding back the previous
estimate and its support. A frame whose solve does not converge is kept in
the trace but does not update the fed-back state.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ParameterError
from ..mc_logger import logger
from ..operators import as_dense, LinearOperator
from ..solvers.metrics import nrmse
from ..solvers.programs import (
    solve_bp,
    solve_modcs,
    solve_regmodcs,
    SolverConfig,
    SolverResult,
)
from ..structured_logging import trace_structured
from ..supports import (
    as_index_set,
    energy_support,
    estimate_support,
    support_change_stats,
    support_errors,
)
from ..types import Method, SolverStatus
from .sequence import Frame

MatrixLike = Union[np.ndarray, LinearOperator]
Alpha = Union[float, str]

DEFAULT_ENERGY = 99.0


@dataclass
class FrameRecord:
    """One row of a dynamic trace."""

    t: int
    status: SolverStatus
    support_size: int
    additions: int
    removals: int
    nrmse: Optional[float] = None
    missing: Optional[int] = None
    extra: Optional[int] = None
    carried: bool = False

    def to_row(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "nrmse": self.nrmse,
            "support_size": self.support_size,
            "additions": self.additions,
            "removals": self.removals,
            "missing": self.missing,
            "extra": self.extra,
            "status": self.status.value,
            "carried": self.carried,
        }


@dataclass
class DynamicState:
    """The quantities fed back from frame t − 1 to frame t."""

    n: int
    t: int = 0
    x_hat_prev: Optional[np.ndarray] = None
    N_hat_prev: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=np.int64)
    )
    nrmse_log: List[float] = field(default_factory=list)
    support_error_log: List[Tuple[int, int]] = field(default_factory=list)

    def prior_mean(self) -> np.ndarray:
        if self.x_hat_prev is None:
            return np.zeros(self.n)
        return self.x_hat_prev


@dataclass
class DynamicTrace:
    method: Method
    results: List[SolverResult] = field(default_factory=list)
    estimates: List[np.ndarray] = field(default_factory=list)
    supports: List[np.ndarray] = field(default_factory=list)
    frames: List[FrameRecord] = field(default_factory=list)
    state: Optional[DynamicState] = None
    elapsed: float = 0.0

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def nrmse(self) -> np.ndarray:
        return np.array(
            [np.nan if f.nrmse is None else f.nrmse for f in self.frames], dtype=float
        )

    def to_rows(self) -> List[Dict[str, Any]]:
        return [f.to_row() for f in self.frames]


def auto_alpha(x: np.ndarray, b: float = DEFAULT_ENERGY) -> float:
    """
    Threshold just below the smallest squared entry of the b%-energy support.

    Thresholding ``x`` itself at this value returns its b%-energy support.
    A zero vector gives 0.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0.0
    support = energy_support(x, b)
    return float(np.min(x[support] ** 2)) * (1.0 - 1e-9)


def _threshold(
    alpha: Alpha, x_hat: np.ndarray, state: DynamicState, b: float
) -> float:
    if isinstance(alpha, str):
        if alpha != "auto":
            raise ParameterError(f"alpha must be a number or 'auto', got {alpha!r}")
        reference = x_hat if state.x_hat_prev is None else state.x_hat_prev
        return auto_alpha(reference, b)
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")
    return float(alpha)


StepFn = Callable[
    [int, MatrixLike, np.ndarray, DynamicState], Tuple[SolverResult, np.ndarray]
]


def _run(
    method: Method,
    A0: MatrixLike,
    A: MatrixLike,
    ys: Sequence[np.ndarray],
    step: StepFn,
    alpha: Alpha,
    truth: Optional[Sequence[Frame]],
    b: float,
) -> DynamicTrace:
    if len(ys) == 0:
        raise ParameterError("empty measurement sequence")
    if truth is not None and len(truth) != len(ys):
        raise ParameterError(f"{len(truth)} true frames for {len(ys)} measurements")
    A0, A = as_dense(A0), as_dense(A)
    if A0.shape[1] != A.shape[1]:
        raise ParameterError("A0 and A must have the same number of columns")
    n = A.shape[1]
    state = DynamicState(n=n)
    trace = DynamicTrace(method=method, state=state)
    start = time.perf_counter()

    for t, y in enumerate(ys):
        state.t = t
        op = A0 if t == 0 else A
        result, x_hat = step(t, op, np.asarray(y, dtype=float), state)
        failed = result.status != SolverStatus.CONVERGED
        N_hat = estimate_support(x_hat, _threshold(alpha, x_hat, state, b))
        additions, removals = support_change_stats(N_hat, state.N_hat_prev)

        record = FrameRecord(
            t=t,
            status=result.status,
            support_size=int(N_hat.size),
            additions=additions,
            removals=removals,
            carried=failed,
        )
        if truth is not None:
            x_true, N_true = truth[t]
            record.nrmse = nrmse(x_true, x_hat)
            record.missing, record.extra = support_errors(N_true, N_hat)
            state.nrmse_log.append(record.nrmse)
            state.support_error_log.append((record.missing, record.extra))
        if failed:
            logger.warning(
                f"{method}: frame {t} ended with status {result.status}; "
                "keeping the previous support"
            )
        else:
            state.x_hat_prev, state.N_hat_prev = x_hat, N_hat

        trace.results.append(result)
        trace.estimates.append(x_hat)
        trace.supports.append(N_hat)
        trace.frames.append(record)
        trace_structured("frame", lambda: {"method": method, **record.to_row()})

    trace.elapsed = time.perf_counter() - start
    logger.debug(f"{method}: {len(trace)} frames in {trace.elapsed:.2f}s")
    return trace


def dynamic_modcs(
    A0: MatrixLike,
    A: MatrixLike,
    ys: Sequence[np.ndarray],
    alpha: Alpha = "auto",
    T0=(),
    cfg: Optional[SolverConfig] = None,
    truth: Optional[Sequence[Frame]] = None,
    b: float = DEFAULT_ENERGY,
) -> DynamicTrace:
    """
    Dynamic modified-CS: solve with T = N̂_{t-1}, then N̂_t = {i : x̂_i² > α}.

    Args:
        A0: Operator of the first frame (usually with more rows).
        A: Operator of every later frame.
        ys: Measurements y_0, y_1, ...
        alpha: Support threshold, or "auto" for the b%-energy rule.
        T0: Known set used at t = 0.
        truth: Ground-truth frames; enables N-RMSE and support diagnostics.
        b: Energy percentage of the "auto" threshold.
    """
    T0 = as_index_set(T0)

    def step(t, op, y, state):
        T = T0 if t == 0 else state.N_hat_prev
        result = solve_modcs(op, y, T, cfg)
        return result, result.x_hat

    return _run(Method.MODCS, A0, A, ys, step, alpha, truth, b)


def dynamic_regmodcs(
    A0: MatrixLike,
    A: MatrixLike,
    ys: Sequence[np.ndarray],
    alpha: Alpha = "auto",
    gamma: float = 1.0,
    T0=(),
    cfg: Optional[SolverConfig] = None,
    truth: Optional[Sequence[Frame]] = None,
    b: float = DEFAULT_ENERGY,
) -> DynamicTrace:
    """
    Dynamic RegModCS: T = N̂_{t-1} and μ_T = (x̂_{t-1})_T at every t > 0.

    Frame 0 has no prior estimate and is solved by modified-CS with T0.
    """
    if gamma < 0:
        raise ParameterError(f"gamma must be nonnegative, got {gamma}")
    T0 = as_index_set(T0)

    def step(t, op, y, state):
        if t == 0:
            result = solve_modcs(op, y, T0, cfg)
        else:
            T = state.N_hat_prev
            result = solve_regmodcs(op, y, T, state.prior_mean()[T], gamma, cfg)
        return result, result.x_hat

    return _run(Method.REGMODCS, A0, A, ys, step, alpha, truth, b)


def cs_diff(
    A0: MatrixLike,
    A: MatrixLike,
    ys: Sequence[np.ndarray],
    alpha: Alpha = "auto",
    cfg: Optional[SolverConfig] = None,
    truth: Optional[Sequence[Frame]] = None,
    b: float = DEFAULT_ENERGY,
) -> DynamicTrace:
    """Basis pursuit on y_t − A x̂_{t-1}; the recovered difference is added back."""
    A_dense = as_dense(A)

    def step(t, op, y, state):
        if t == 0:
            result = solve_bp(op, y, cfg)
            return result, result.x_hat
        prev = state.prior_mean()
        result = solve_bp(op, y - A_dense @ prev, cfg)
        return result, prev + result.x_hat

    return _run(Method.CS_DIFF, A0, A, ys, step, alpha, truth, b)


def simple_cs(
    A0: MatrixLike,
    A: MatrixLike,
    ys: Sequence[np.ndarray],
    alpha: Alpha = "auto",
    cfg: Optional[SolverConfig] = None,
    truth: Optional[Sequence[Frame]] = None,
    b: float = DEFAULT_ENERGY,
) -> DynamicTrace:
    def step(t, op, y, state):
        result = solve_bp(op, y, cfg)
        return result, result.x_hat

    return _run(Method.CS, A0, A, ys, step, alpha, truth, b)
