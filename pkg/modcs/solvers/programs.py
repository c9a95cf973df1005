#  Copyright (c) modcs contributors.

"""
Basis pursuit, modified-CS and RegModCS.

All three programs share one reduction before the interior-point phase: the
data constraint Aβ = y is replaced by the equivalent E₀β = b₀ with
orthonormal rows (E₀ = Σ⁻¹Uᵀ A from a thin SVD), which also exposes
inconsistent systems. Modified-CS then projects out range(E₀_T), so the
coordinates in T drop out and what is left is basis pursuit on T^c.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Union

import numpy as np
import scipy.linalg

from ..errors import ConfigError, ParameterError
from ..mc_logger import logger
from ..operators import as_dense, LinearOperator
from ..structured_logging import trace_structured
from ..supports import as_index_set, complement, estimate_support
from ..types import SolverStatus
from .ipm import DiagonalQP, interior_point

MatrixLike = Union[np.ndarray, LinearOperator]


@dataclass
class SolverConfig:
    """
    Interior-point settings.

    Attributes:
        feas_tol: Relative primal/dual feasibility tolerance.
        gap_tol: Relative complementarity tolerance.
        max_iter: Maximum interior-point iterations.
        step_fraction: Fraction of the step to the boundary that is taken.
        min_step: Steps shorter than this stop the iteration.
        polish: Re-fit linear programs by least squares on their support.
        polish_tol: Entries of T^c below polish_tol·‖x̂‖∞ count as zero.
    """

    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iter: int = 100
    step_fraction: float = 0.99995
    min_step: float = 1e-12
    polish: bool = True
    polish_tol: float = 1e-7

    def __post_init__(self):
        for name in ("feas_tol", "gap_tol", "min_step", "polish_tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not 0 < self.step_fraction < 1:
            raise ParameterError("step_fraction must lie in (0, 1)")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SolverConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown solver settings: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class SolverResult:
    """
    Outcome of one convex solve.

    ``dual`` is the multiplier w of the data constraint (length m), so that
    Aⱼᵀw = sgn(x̂ⱼ) on the T^c support and |Aⱼᵀw| <= 1 elsewhere on T^c.
    ``unique`` is False when the minimizer is known not to be unique and None
    when uniqueness was not decided.
    """

    x_hat: np.ndarray
    objective: float
    primal_residual: float
    duality_gap: float
    iterations: int
    status: SolverStatus
    program: str = "modcs"
    dual: Optional[np.ndarray] = None
    unique: Optional[bool] = None
    polished: bool = False
    history: List[float] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == SolverStatus.CONVERGED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "program": self.program,
            "status": self.status.value,
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "unique": self.unique,
            "polished": self.polished,
            "x_hat": self.x_hat.tolist(),
            "dual": None if self.dual is None else self.dual.tolist(),
        }


@dataclass
class _Reduction:
    """E₀ = Σ_r⁻¹U_rᵀA with orthonormal rows, b₀ = Σ_r⁻¹U_rᵀy."""

    E0: np.ndarray
    b0: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    consistent: bool

    def dual_to_data(self, lam0: np.ndarray) -> np.ndarray:
        return self.U @ (lam0 / self.sigma)


def _reduce_rows(A: np.ndarray, y: np.ndarray, feas_tol: float) -> _Reduction:
    m, n = A.shape
    U, sigma, Vt = scipy.linalg.svd(A, full_matrices=False)
    cut = sigma[0] * max(m, n) * np.finfo(float).eps if sigma.size else 0.0
    r = int(np.sum(sigma > cut))
    U, sigma, Vt = U[:, :r], sigma[:r], Vt[:r]
    coords = U.T @ y
    outside = np.linalg.norm(y - U @ coords)
    consistent = outside <= max(feas_tol, 1e-12) * max(np.linalg.norm(y), 1e-300)
    return _Reduction(
        E0=Vt, b0=coords / sigma, U=U, sigma=sigma, consistent=bool(consistent)
    )


def _relative_residual(A: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    norm_y = np.linalg.norm(y)
    res = np.linalg.norm(A @ x - y)
    return float(res / norm_y) if norm_y > 0 else float(res)


def _l1_off(x: np.ndarray, Tc: np.ndarray) -> float:
    return float(np.abs(x[Tc]).sum())


def _check_inputs(A: MatrixLike, y, T) -> tuple:
    A = as_dense(A)
    y = np.asarray(y, dtype=float).ravel()
    if A.ndim != 2:
        raise ParameterError("A must be a matrix")
    m, n = A.shape
    if y.size != m:
        raise ParameterError(f"y has length {y.size}, expected {m}")
    T = as_index_set(T)
    if T.size and (T[0] < 0 or T[-1] >= n):
        raise ParameterError(f"T has indices outside [0, {n})")
    return A, y, T


def _trace_solve(result: SolverResult, m: int, n: int, k: int) -> SolverResult:
    logger.debug(
        f"{result.program}: status={result.status} iterations={result.iterations} "
        f"objective={result.objective:.6g} residual={result.primal_residual:.3g}"
    )
    trace_structured(
        "solve",
        lambda: {
            "program": result.program,
            "m": m,
            "n": n,
            "k": k,
            "status": result.status,
            "iterations": result.iterations,
            "objective": result.objective,
            "primal_residual": result.primal_residual,
            "duality_gap": result.duality_gap,
            "polished": result.polished,
        },
    )
    return result


def _infeasible(A, y, T, Tc, program) -> SolverResult:
    x_ls = scipy.linalg.lstsq(A, y)[0]
    return SolverResult(
        x_hat=x_ls,
        objective=_l1_off(x_ls, Tc),
        primal_residual=_relative_residual(A, x_ls, y),
        duality_gap=float("nan"),
        iterations=0,
        status=SolverStatus.INFEASIBLE,
        program=program,
    )


def _polish(
    A: np.ndarray, y: np.ndarray, x: np.ndarray, T, Tc, cfg: SolverConfig
) -> Optional[np.ndarray]:
    """LS re-fit on T ∪ supp(x̂_{T^c}); None unless it is feasible and no worse."""
    scale = np.max(np.abs(x)) if x.size else 0.0
    if scale == 0:
        return None
    keep = Tc[np.abs(x[Tc]) > cfg.polish_tol * scale]
    support = np.union1d(T, keep)
    if support.size > A.shape[0]:
        return None
    sol, _, rank, _ = scipy.linalg.lstsq(A[:, support], y)
    if rank < support.size:
        return None
    candidate = np.zeros_like(x)
    candidate[support] = sol
    if _relative_residual(A, candidate, y) > 10 * cfg.feas_tol:
        return None
    before = _l1_off(x, Tc)
    if _l1_off(candidate, Tc) > before + 1e-6 * (1.0 + before):
        return None
    return candidate


def solve_modcs(
    A: MatrixLike,
    y: np.ndarray,
    T: Iterable[int] = (),
    cfg: Optional[SolverConfig] = None,
    program: str = "modcs",
) -> SolverResult:
    """
    Modified-CS: min ‖β_{T^c}‖₁ subject to Aβ = y.

    Args:
        A: m×n matrix or operator.
        y: Measurements of length m.
        T: Known part of the support; coordinates in T are not penalized.
        cfg: Solver settings.

    Returns:
        SolverResult with status ``infeasible`` when y is outside range(A) and
        ``max-iter`` when the interior-point phase did not converge.
    """
    cfg = cfg or SolverConfig()
    A, y, T = _check_inputs(A, y, T)
    m, n = A.shape
    Tc = complement(T, n)

    red = _reduce_rows(A, y, cfg.feas_tol)
    if not red.consistent:
        logger.warning(f"{program}: y is not in the range of A")
        return _trace_solve(_infeasible(A, y, T, Tc, program), m, n, T.size)

    E_T, E_Tc = red.E0[:, T], red.E0[:, Tc]
    # Q spans the part of the reduced row space that A_T cannot reach
    if T.size:
        U_T, sig_T, _ = scipy.linalg.svd(E_T, full_matrices=True)
        cut = (sig_T[0] if sig_T.size else 0.0) * max(E_T.shape) * np.finfo(float).eps
        rank_T = int(np.sum(sig_T > cut))
        Q = U_T[:, rank_T:]
    else:
        rank_T = 0
        Q = np.eye(red.E0.shape[0])
    A_red = Q.T @ E_Tc
    b_red = Q.T @ red.b0

    unique: Optional[bool] = False if rank_T < T.size else None
    iterations, gap, history = 0, 0.0, []
    converged = True
    lam_red = np.zeros(Q.shape[1])
    v = np.zeros(Tc.size)
    scale = float(np.linalg.norm(b_red))
    if Q.shape[1] == 0 or Tc.size == 0:
        # A_T reaches every consistent y: β_{T^c} = 0 is optimal
        if rank_T == T.size:
            unique = True
    elif scale > 0:
        qp = DiagonalQP(
            E=np.hstack([A_red, -A_red]),
            b=b_red / scale,
            c=np.ones(2 * Tc.size),
            h=np.zeros(2 * Tc.size),
            bounded=np.ones(2 * Tc.size, dtype=bool),
        )
        res = interior_point(
            qp,
            feas_tol=cfg.feas_tol,
            gap_tol=cfg.gap_tol,
            max_iter=cfg.max_iter,
            step_fraction=cfg.step_fraction,
            min_step=cfg.min_step,
        )
        v = scale * (res.z[: Tc.size] - res.z[Tc.size :])
        lam_red = res.lam
        iterations, gap, history = res.iterations, res.gap, res.history
        converged = res.converged

    x = np.zeros(n)
    x[Tc] = v
    if T.size:
        x[T] = scipy.linalg.lstsq(E_T, red.b0 - E_Tc @ v)[0]
    polished = False
    if cfg.polish and converged and Tc.size:
        candidate = _polish(A, y, x, T, Tc, cfg)
        if candidate is not None:
            x, polished = candidate, True

    result = SolverResult(
        x_hat=x,
        objective=_l1_off(x, Tc),
        primal_residual=_relative_residual(A, x, y),
        duality_gap=gap,
        iterations=iterations,
        status=SolverStatus.CONVERGED if converged else SolverStatus.MAX_ITER,
        program=program,
        dual=red.dual_to_data(Q @ lam_red),
        unique=unique,
        polished=polished,
        history=history,
    )
    if not converged:
        logger.warning(
            f"{program}: no convergence after {iterations} iterations "
            f"(gap {gap:.3g}); returning the last iterate"
        )
    return _trace_solve(result, m, n, T.size)


def solve_bp(
    A: MatrixLike, y: np.ndarray, cfg: Optional[SolverConfig] = None
) -> SolverResult:
    """Basis pursuit, min ‖β‖₁ s.t. Aβ = y (modified-CS with T = ∅)."""
    return solve_modcs(A, y, (), cfg, program="bp")


def solve_regmodcs(
    A: MatrixLike,
    y: np.ndarray,
    T: Iterable[int],
    mu_T: np.ndarray,
    gamma: float,
    cfg: Optional[SolverConfig] = None,
) -> SolverResult:
    """
    RegModCS: min ‖β_{T^c}‖₁ + γ‖β_T − μ_T‖₂² subject to Aβ = y.

    ``mu_T`` is aligned with the sorted T. With γ = 0 (or T empty) this is
    exactly :func:`solve_modcs`.
    """
    cfg = cfg or SolverConfig()
    A, y, T = _check_inputs(A, y, T)
    mu_T = np.asarray(mu_T, dtype=float).ravel()
    if mu_T.size != T.size:
        raise ParameterError(f"mu_T has length {mu_T.size}, expected |T| = {T.size}")
    if gamma < 0:
        raise ParameterError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0 or T.size == 0:
        return solve_modcs(A, y, T, cfg, program="regmodcs")
    m, n = A.shape
    Tc = complement(T, n)

    red = _reduce_rows(A, y, cfg.feas_tol)
    if not red.consistent:
        logger.warning("regmodcs: y is not in the range of A")
        return _trace_solve(_infeasible(A, y, T, Tc, "regmodcs"), m, n, T.size)

    # β = scale·β'; dividing the objective by scale gives γ·scale and μ/scale
    scale = float(np.linalg.norm(red.b0)) or 1.0
    g_s = gamma * scale
    k, nc = T.size, Tc.size
    E_T, E_Tc = red.E0[:, T], red.E0[:, Tc]
    qp = DiagonalQP(
        E=np.hstack([E_T, E_Tc, -E_Tc]),
        b=red.b0 / scale,
        c=np.concatenate([-2.0 * g_s * mu_T / scale, np.ones(2 * nc)]),
        h=np.concatenate([np.full(k, 2.0 * g_s), np.zeros(2 * nc)]),
        bounded=np.concatenate([np.zeros(k, dtype=bool), np.ones(2 * nc, dtype=bool)]),
    )
    res = interior_point(
        qp,
        feas_tol=cfg.feas_tol,
        gap_tol=cfg.gap_tol,
        max_iter=cfg.max_iter,
        step_fraction=cfg.step_fraction,
        min_step=cfg.min_step,
    )
    x = np.zeros(n)
    x[T] = scale * res.z[:k]
    x[Tc] = scale * (res.z[k : k + nc] - res.z[k + nc :])
    objective = _l1_off(x, Tc) + gamma * float(np.sum((x[T] - mu_T) ** 2))
    if not res.converged:
        logger.warning(
            f"regmodcs: no convergence after {res.iterations} iterations "
            f"(gap {res.gap:.3g}); returning the last iterate"
        )
    result = SolverResult(
        x_hat=x,
        objective=objective,
        primal_residual=_relative_residual(A, x, y),
        duality_gap=res.gap,
        iterations=res.iterations,
        status=SolverStatus.CONVERGED if res.converged else SolverStatus.MAX_ITER,
        program="regmodcs",
        dual=red.dual_to_data(res.lam),
        history=res.history,
    )
    return _trace_solve(result, m, n, T.size)


def regmodcs_objective(x, T, mu_T, gamma) -> float:
    x = np.asarray(x, dtype=float)
    T = as_index_set(T)
    Tc = complement(T, x.size)
    return _l1_off(x, Tc) + gamma * float(np.sum((x[T] - np.asarray(mu_T)) ** 2))


def kkt_residuals(
    A: MatrixLike, result: SolverResult, T: Iterable[int] = (), tol: float = 1e-7
) -> Dict[str, float]:
    """
    Check the optimality certificate of a modified-CS/BP solution.

    Returns:
        ``on_T``: max |A_jᵀw| over j in T (should be 0);
        ``off_support``: max |A_jᵀw| over the zero entries of x̂ on T^c
        (should be <= 1); ``sign_mismatch``: max |A_jᵀw − sgn(x̂_j)| over the
        nonzero entries of x̂ on T^c (should be 0).
    """
    if result.dual is None:
        raise ParameterError("result carries no dual multiplier")
    A = as_dense(A)
    T = as_index_set(T)
    Tc = complement(T, A.shape[1])
    corr = A.T @ result.dual
    x = result.x_hat
    scale = np.max(np.abs(x)) if x.size else 0.0
    on = Tc[np.abs(x[Tc]) > tol * scale] if scale > 0 else Tc[:0]
    off = np.setdiff1d(Tc, on)

    def _max(values):
        return float(np.max(np.abs(values))) if values.size else 0.0

    return {
        "on_T": _max(corr[T]),
        "off_support": _max(corr[off]),
        "sign_mismatch": _max(corr[on] - np.sign(x[on])),
    }


def ls_on_support(
    A: MatrixLike, y: np.ndarray, support: Iterable[int]
) -> np.ndarray:
    """Least-squares estimate A_S⁺y placed on ``support``, zero elsewhere."""
    A = as_dense(A)
    support = as_index_set(support)
    x = np.zeros(A.shape[1])
    if support.size:
        x[support] = scipy.linalg.lstsq(A[:, support], np.asarray(y, dtype=float))[0]
    return x


def debias(
    A: MatrixLike, y: np.ndarray, x_hat: np.ndarray, alpha: float
) -> np.ndarray:
    """Threshold x̂ at ``alpha`` and re-fit by least squares on what is left."""
    return ls_on_support(A, y, estimate_support(x_hat, alpha))


class DualCertificate(NamedTuple):
    certified: bool
    max_offsupport: float
    full_rank: bool


def dual_certificate(
    A: MatrixLike, x: np.ndarray, T: Iterable[int] = (), tol: float = 1e-9
) -> DualCertificate:
    """
    Decide whether ``x`` is provably the unique modified-CS solution for T.

    w is the minimum-norm solution of A_Tᵀw = 0, A_Δᵀw = sgn(x_Δ) with
    Δ = supp(x) ∖ T. The certificate holds when A_{T∪Δ} has full column rank
    and |A_jᵀw| < 1 for every j outside T ∪ Δ.
    """
    A = as_dense(A)
    x = np.asarray(x, dtype=float)
    n = A.shape[1]
    if x.shape != (n,):
        raise ParameterError(f"x must have length {n}, got shape {x.shape}")
    T = as_index_set(T)
    Tc = complement(T, n)
    scale = np.max(np.abs(x)) if x.size else 0.0
    delta = Tc[np.abs(x[Tc]) > tol * scale] if scale > 0 else Tc[:0]
    cols = np.concatenate([T, delta])
    rest = np.setdiff1d(np.arange(n), cols)
    if cols.size == 0:
        return DualCertificate(True, 0.0, True)
    B = A[:, cols]
    full_rank = bool(np.linalg.matrix_rank(B) == cols.size)
    rhs = np.concatenate([np.zeros(T.size), np.sign(x[delta])])
    w = scipy.linalg.lstsq(B.T, rhs)[0]
    max_off = float(np.max(np.abs(A[:, rest].T @ w))) if rest.size else 0.0
    certified = full_rank and max_off < 1.0
    logger.debug(
        f"dual certificate: |T|={T.size} |Delta|={delta.size} "
        f"max off-support correlation {max_off:.6g}"
    )
    return DualCertificate(certified, max_off, full_rank)
