#  Copyright (c) modcs contributors.

"""Independent solvers used to cross-check the interior-point programs."""

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from ..errors import EnumerationBudgetError
from ..mc_logger import logger
from ..shared_vars import MODCS_ENUM_BUDGET
from ..supports import complement
from ..types import SolverStatus
from .programs import (
    _check_inputs,
    _l1_off,
    _relative_residual,
    MatrixLike,
    SolverResult,
)


@dataclass
class L0Result:
    """
    Sparsest-outside-T solution found by enumeration.

    Attributes:
        x_hat: The solution on T ∪ S for the lexicographically first S.
        cardinality: |S|, the ℓ0 norm of x̂ on T^c.
        support: S.
        unique: True when exactly one distinct solution exists at this
            cardinality and A_{T∪S} has full column rank.
        n_solutions: Number of feasible subsets of that cardinality.
    """

    x_hat: np.ndarray
    cardinality: int
    support: np.ndarray
    unique: bool
    n_solutions: int


def solve_l0_bruteforce(
    A: MatrixLike,
    y: np.ndarray,
    T: Iterable[int] = (),
    max_card: Optional[int] = None,
    tol: float = 1e-9,
    budget: Optional[int] = None,
) -> Optional[L0Result]:
    """
    min ‖β_{T^c}‖₀ subject to Aβ = y, by enumeration.

    For j = 0, 1, ..., ``max_card`` every j-subset S of T^c is tried with a
    least-squares fit on T ∪ S; a fit counts as a solution when its residual is
    at most tol·‖y‖₂. The first cardinality with a solution is enumerated to
    the end to decide uniqueness.

    Raises:
        EnumerationBudgetError: If Σ_j C(n−|T|, j) exceeds ``budget``.

    Returns:
        L0Result, or None when nothing up to ``max_card`` fits.
    """
    A, y, T = _check_inputs(A, y, T)
    n = A.shape[1]
    Tc = complement(T, n)
    if max_card is None:
        max_card = min(Tc.size, A.shape[0])
    max_card = min(max_card, Tc.size)
    budget = MODCS_ENUM_BUDGET if budget is None else budget
    total = sum(math.comb(Tc.size, j) for j in range(max_card + 1))
    if total > budget:
        raise EnumerationBudgetError(
            f"l0 enumeration needs {total} subsets, budget is {budget}"
        )
    threshold = tol * np.linalg.norm(y)

    for j in range(max_card + 1):
        first = None
        solutions = []
        full_rank = True
        for S in itertools.combinations(Tc.tolist(), j):
            cols = np.union1d(T, np.asarray(S, dtype=np.int64))
            if cols.size:
                sol, _, rank, _ = scipy.linalg.lstsq(A[:, cols], y)
            else:
                sol, rank = np.zeros(0), 0
            x = np.zeros(n)
            x[cols] = sol
            if np.linalg.norm(A @ x - y) > threshold:
                continue
            if first is None:
                first = (x, np.asarray(S, dtype=np.int64))
                full_rank = rank == cols.size
            if not any(np.allclose(x, other, atol=1e-9) for other in solutions):
                solutions.append(x)
        if first is not None:
            logger.debug(f"l0: cardinality {j}, {len(solutions)} distinct solutions")
            return L0Result(
                x_hat=first[0],
                cardinality=j,
                support=first[1],
                unique=len(solutions) == 1 and full_rank,
                n_solutions=len(solutions),
            )
    return None


def solve_lp_reference(
    A: MatrixLike, y: np.ndarray, T: Iterable[int] = ()
) -> SolverResult:
    """
    Modified-CS as an explicit LP solved by HiGHS.

    Variables are (β, t) with t_i >= |β_i| on T^c written as two inequality
    rows each; the objective is Σ t_i.
    """
    A, y, T = _check_inputs(A, y, T)
    m, n = A.shape
    Tc = complement(T, n)
    nc = Tc.size
    c = np.concatenate([np.zeros(n), np.ones(nc)])
    A_eq = np.hstack([A, np.zeros((m, nc))])
    A_ub = np.zeros((2 * nc, n + nc))
    rows = np.arange(nc)
    A_ub[rows, Tc] = 1.0
    A_ub[nc + rows, Tc] = -1.0
    A_ub[rows, n + rows] = -1.0
    A_ub[nc + rows, n + rows] = -1.0
    bounds = [(None, None)] * n + [(0, None)] * nc
    res = linprog(
        c,
        A_ub=A_ub if nc else None,
        b_ub=np.zeros(2 * nc) if nc else None,
        A_eq=A_eq,
        b_eq=y,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        status = SolverStatus.INFEASIBLE
    elif res.status == 0:
        status = SolverStatus.CONVERGED
    else:
        status = SolverStatus.MAX_ITER
    x = res.x[:n] if res.x is not None else np.zeros(n)
    dual = None
    eqlin = getattr(res, "eqlin", None)
    if eqlin is not None and getattr(eqlin, "marginals", None) is not None:
        dual = np.asarray(eqlin.marginals, dtype=float)
    return SolverResult(
        x_hat=x,
        objective=_l1_off(x, Tc),
        primal_residual=_relative_residual(A, x, y),
        duality_gap=0.0,
        iterations=int(getattr(res, "nit", 0) or 0),
        status=status,
        program="lp-reference",
        dual=dual,
    )
