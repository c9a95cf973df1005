#  Copyright (c) modcs contributors.

"""
Primal-dual Mehrotra predictor-corrector method for equality-constrained
quadratic programs with a diagonal Hessian::

    min  cᵀz + ½ Σ h_i z_i²
    s.t. E z = b,   z_i >= 0 for i in B,   z_i free otherwise.

Every free variable needs h_i > 0; bounded variables may have h_i = 0, so
linear programs are the special case h = 0 on an all-bounded z. ``E`` is
expected to have full row rank.
"""

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
import scipy.linalg

from ..errors import ParameterError


@dataclass
class DiagonalQP:
    E: np.ndarray
    b: np.ndarray
    c: np.ndarray
    h: np.ndarray
    bounded: np.ndarray

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        self.bounded = np.asarray(self.bounded, dtype=bool)
        nz = self.E.shape[1]
        if not (self.c.size == self.h.size == self.bounded.size == nz):
            raise ParameterError("c, h and bounded must match the columns of E")
        if self.b.size != self.E.shape[0]:
            raise ParameterError("b must match the rows of E")
        if np.any(self.h < 0):
            raise ParameterError("h must be nonnegative")
        if np.any(self.h[~self.bounded] <= 0):
            raise ParameterError("free variables need a positive curvature h")

    def objective(self, z: np.ndarray) -> float:
        return float(self.c @ z + 0.5 * self.h @ (z * z))


@dataclass
class IPMResult:
    z: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    iterations: int
    converged: bool
    primal_residual: float
    dual_residual: float
    gap: float
    objective: float
    history: List[float] = field(default_factory=list)


def _get_step(x, d_x, s, d_s, alpha0: float) -> float:
    # same step is taken in primal and dual spaces
    i_x = d_x < 0
    i_s = d_s < 0
    alpha_x = alpha0 * np.min(x[i_x] / -d_x[i_x]) if np.any(i_x) else 1.0
    alpha_s = alpha0 * np.min(s[i_s] / -d_s[i_s]) if np.any(i_s) else 1.0
    return float(min(1.0, alpha_x, alpha_s))


def _factor(M: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Cholesky-factor the normal matrix, falling back to least squares."""
    try:
        factor = scipy.linalg.cho_factor(M, check_finite=False)
        return lambda rhs: scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except scipy.linalg.LinAlgError:
        return lambda rhs: scipy.linalg.lstsq(M, rhs, check_finite=False)[0]


def interior_point(
    problem: DiagonalQP,
    feas_tol: float = 1e-9,
    gap_tol: float = 1e-9,
    max_iter: int = 100,
    step_fraction: float = 0.99995,
    min_step: float = 1e-12,
) -> IPMResult:
    """
    Solve ``problem`` from the blind start z_B = s = 1, z_F = 0, λ = 0.

    Convergence means the relative primal residual ‖b − Ez‖/(1 + ‖b‖), the
    relative dual residual ‖c + hz − Eᵀλ − s‖/(1 + ‖c‖) and the relative
    complementarity z_Bᵀs/(1 + |objective|) are all under their tolerances.
    The last iterate is returned either way.
    """
    E, b, c, h = problem.E, problem.b, problem.c, problem.h
    B = problem.bounded
    F = ~B
    nb = int(B.sum())

    z = np.zeros(E.shape[1])
    z[B] = 1.0
    lam = np.zeros(E.shape[0])
    s = np.ones(nb)
    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(c)
    history: List[float] = []

    it = 0
    converged = False
    while True:
        r_p = b - E @ z
        r_d = c + h * z - E.T @ lam
        r_d[B] -= s
        mu = float(z[B] @ s) / nb if nb else 0.0
        objective = problem.objective(z)
        rel_p = float(np.linalg.norm(r_p)) / norm_b
        rel_d = float(np.linalg.norm(r_d)) / norm_c
        gap = nb * mu / (1.0 + abs(objective))
        history.append(rel_p + rel_d + gap)
        if rel_p <= feas_tol and rel_d <= feas_tol and gap <= gap_tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        z_b = z[B]
        inv_w = np.empty_like(z)
        inv_w[B] = z_b / (h[B] * z_b + s)
        inv_w[F] = 1.0 / h[F]
        solve = _factor((E * inv_w) @ E.T)

        def direction(r_c):
            g = -r_d
            g[B] += r_c / z_b
            d_lam = solve(r_p - E @ (inv_w * g))
            d_z = inv_w * (g + E.T @ d_lam)
            d_s = (r_c - s * d_z[B]) / z_b
            return d_z, d_lam, d_s

        # predictor
        dz_aff, _, ds_aff = direction(-z_b * s)
        alpha_aff = _get_step(z_b, dz_aff[B], s, ds_aff, 1.0)
        sigma = 0.0
        if nb and mu > 0:
            mu_aff = (z_b + alpha_aff * dz_aff[B]) @ (s + alpha_aff * ds_aff) / nb
            sigma = (mu_aff / mu) ** 3
        # corrector
        r_c = -z_b * s - dz_aff[B] * ds_aff + sigma * mu
        d_z, d_lam, d_s = direction(r_c)
        alpha = _get_step(z_b, d_z[B], s, d_s, step_fraction)
        z = z + alpha * d_z
        lam = lam + alpha * d_lam
        s = s + alpha * d_s
        if alpha < min_step:
            # stalled; the next pass reports the residuals of this iterate
            max_iter = it

    return IPMResult(
        z=z,
        lam=lam,
        s=s,
        iterations=it,
        converged=converged,
        primal_residual=rel_p,
        dual_residual=rel_d,
        gap=gap,
        objective=objective,
        history=history,
    )
