#  Copyright (c) modcs contributors.

"""
Monte Carlo drivers.

Every trial draws from its own generator ``default_rng([seed, stream, trial])``
where ``stream`` numbers the cell (or group of cells sharing data), so results
do not depend on how trials are scheduled over threads. One measurement
matrix is drawn per m value and reused by every trial of every cell with that
m, i.e. probabilities average over x and the support error for a given A.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple, TypeVar

import numpy as np

from ..errors import ConfigError
from ..mc_logger import logger
from ..operators import (
    approximation_indices,
    as_dense,
    compose_measurement,
    dwt2_db4,
    gaussian_operator,
    partial_fourier_operator,
    synthetic_image,
    WaveletSynthesis,
)
from ..solvers.metrics import is_exact, nrmse
from ..solvers.programs import debias, solve_bp, solve_modcs, solve_regmodcs
from ..structured_logging import trace_structured
from ..supports import (
    build_support_model,
    energy_support,
    support_errors,
    SupportModel,
)
from ..types import SolverStatus
from .config import ExperimentConfig, PRIOR_MEAN_SHIFT
from .report import binomial_se, ExperimentReport, mean_se, pooled_nrmse

R = TypeVar("R")

# matrix seeds come from streams far above the cell streams
MATRIX_STREAM = 1 << 20


def run_trials(
    fn: Callable[[int, np.random.Generator], R],
    n_trials: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> List[R]:
    """
    Call ``fn(trial, rng)`` for every trial and return the results in trial order.

    Args:
        fn: Trial function; must only draw randomness from ``rng``.
        n_trials: Number of trials.
        seed: Experiment seed.
        stream: Cell identifier, part of every trial's seed.
        workers: Threads; 1 runs serially.
    """

    def one(trial: int) -> R:
        return fn(trial, np.random.default_rng([seed, stream, trial]))

    if workers <= 1 or n_trials <= 1:
        return [one(trial) for trial in range(n_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_trials)))


def _matrix(cfg: ExperimentConfig, m: int, index: int) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, MATRIX_STREAM + index])
    return as_dense(gaussian_operator(m, cfg.n, int(rng.integers(0, 2**31))))


@dataclass
class Instance:
    x: np.ndarray
    support: SupportModel
    mu: np.ndarray


def draw_instance(
    cfg: ExperimentConfig, u: int, e: int, rng: np.random.Generator
) -> Instance:
    """
    Draw N, the partially known support and x.

    With the mean-shift prior μ is ±1 on N ∖ Δ and ±0.25 on Δ and Δ_e;
    otherwise μ = 0. x_N ~ Normal(μ_N, signal_var·I) and x is zero off N.
    """
    n = cfg.n
    N = np.sort(rng.choice(n, size=cfg.s, replace=False))
    model = build_support_model(n, N, u, e, rng)
    mu = np.zeros(n)
    if cfg.prior == PRIOR_MEAN_SHIFT:
        known = np.setdiff1d(N, model.delta)
        mu[known] = rng.choice([-1.0, 1.0], size=known.size)
        shifted = np.union1d(model.delta, model.delta_e)
        mu[shifted] = rng.choice([-0.25, 0.25], size=shifted.size)
    x = np.zeros(n)
    x[N] = mu[N] + math.sqrt(cfg.signal_var) * rng.standard_normal(N.size)
    return Instance(x=x, support=model, mu=mu)


def _check_sizes(cfg: ExperimentConfig) -> None:
    for u in cfg.u_values():
        if u > cfg.s:
            raise ConfigError(f"u={u} exceeds s={cfg.s}")
    for e in cfg.e_values():
        if e > cfg.n - cfg.s:
            raise ConfigError(f"e={e} exceeds n - s = {cfg.n - cfg.s}")
    for m in cfg.m_values():
        if not 0 < m <= cfg.n:
            raise ConfigError(f"m={m} must lie in (0, {cfg.n}]")


def _trace_trial(experiment: str, stream: int, trial: int, **fields) -> None:
    trace_structured(
        "trial",
        lambda: {"experiment": experiment, "stream": stream, "trial": trial, **fields},
    )


def _finish(
    experiment: str,
    cfg: ExperimentConfig,
    columns: List[str],
    rows: List[Dict[str, Any]],
    start: float,
    **metadata,
) -> ExperimentReport:
    report = ExperimentReport(
        experiment=experiment,
        columns=columns,
        rows=rows,
        config=cfg.to_dict(),
        wall_clock=time.perf_counter() - start,
        metadata=dict(metadata),
    )
    logger.info(f"{experiment}: {len(rows)} cells in {report.wall_clock:.1f}s")
    trace_structured("report", report.to_dict)
    return report


def _cells(cfg: ExperimentConfig) -> List[Tuple[int, int, int, int, int]]:
    """(stream, m index, m, u, e) for every cell, m slowest."""
    cells = []
    grid = itertools.product(
        enumerate(cfg.m_values()), cfg.u_values(), cfg.e_values()
    )
    for stream, ((i_m, m), u, e) in enumerate(grid):
        cells.append((stream, i_m, m, u, e))
    return cells


def exact_recon_probability(cfg: ExperimentConfig) -> ExperimentReport:
    """
    Probability that modified-CS and CS recover x exactly, per (m, u, e).

    A solve that does not converge counts as a failure.
    """
    _check_sizes(cfg)
    start = time.perf_counter()
    matrices: Dict[int, np.ndarray] = {}
    rows = []
    for stream, i_m, m, u, e in _cells(cfg):
        if i_m not in matrices:
            matrices[i_m] = _matrix(cfg, m, i_m)
        A = matrices[i_m]

        def trial(t: int, rng: np.random.Generator) -> Tuple[bool, bool, int]:
            inst = draw_instance(cfg, u, e, rng)
            y = A @ inst.x
            mod = solve_modcs(A, y, inst.support.T, cfg.solver)
            cs = solve_bp(A, y, cfg.solver)
            failures = int(not mod.converged) + int(not cs.converged)
            ok_mod = mod.converged and is_exact(inst.x, mod.x_hat)
            ok_cs = cs.converged and is_exact(inst.x, cs.x_hat)
            _trace_trial("mc-prob", stream, t, modcs=ok_mod, cs=ok_cs)
            return ok_mod, ok_cs, failures

        results = run_trials(trial, cfg.trials, cfg.seed, stream, cfg.worker_count)
        p_mod = float(np.mean([r[0] for r in results]))
        p_cs = float(np.mean([r[1] for r in results]))
        failures = sum(r[2] for r in results)
        if failures:
            logger.warning(f"mc-prob m={m} u={u} e={e}: {failures} failed solves")
        rows.append(
            {
                "m": m,
                "u": u,
                "e": e,
                "k": cfg.s + e - u,
                "trials": cfg.trials,
                "modcs_prob": p_mod,
                "modcs_se": binomial_se(p_mod, cfg.trials),
                "cs_prob": p_cs,
                "cs_se": binomial_se(p_cs, cfg.trials),
                "solver_failures": failures,
            }
        )
        logger.info(f"mc-prob m={m} u={u} e={e}: modcs {p_mod:.4f}, cs {p_cs:.4f}")
    columns = list(rows[0].keys())
    return _finish("mc-prob", cfg, columns, rows, start)


def noisy_nrmse(cfg: ExperimentConfig) -> ExperimentReport:
    """
    N-RMSE √(E‖x−x̂‖²/E‖x‖²) of modified-CS and CS from y = Ax + w.

    Trials whose solve comes back infeasible are excluded from that method's
    estimate and counted.
    """
    _check_sizes(cfg)
    start = time.perf_counter()
    matrices: Dict[int, np.ndarray] = {}
    rows = []
    grid = itertools.product(_cells(cfg), cfg.noise_vars)
    for stream, ((_, i_m, m, u, e), noise_var) in enumerate(grid):
        if i_m not in matrices:
            matrices[i_m] = _matrix(cfg, m, i_m)
        A = matrices[i_m]
        sigma_w = math.sqrt(noise_var)

        def trial(t: int, rng: np.random.Generator) -> Dict[str, Any]:
            inst = draw_instance(cfg, u, e, rng)
            y = A @ inst.x + sigma_w * rng.standard_normal(A.shape[0])
            out = {"norm_sq": float(inst.x @ inst.x)}
            for name, res in (
                ("modcs", solve_modcs(A, y, inst.support.T, cfg.solver)),
                ("cs", solve_bp(A, y, cfg.solver)),
            ):
                if res.status == SolverStatus.INFEASIBLE:
                    out[name] = None
                else:
                    out[name] = float(np.sum((inst.x - res.x_hat) ** 2))
            _trace_trial("noisy", stream, t, **out)
            return out

        results = run_trials(trial, cfg.trials, cfg.seed, stream, cfg.worker_count)
        row: Dict[str, Any] = {"m": m, "u": u, "e": e, "noise_var": noise_var}
        for name in ("modcs", "cs"):
            kept = [r for r in results if r[name] is not None]
            errors = [r[name] for r in kept]
            norms = [r["norm_sq"] for r in kept]
            ratios = [math.sqrt(err / nrm) for err, nrm in zip(errors, norms) if nrm]
            row[f"{name}_nrmse"] = pooled_nrmse(errors, norms)
            row[f"{name}_se"] = mean_se(ratios)
            row[f"{name}_excluded"] = len(results) - len(kept)
        row["trials"] = cfg.trials
        rows.append(row)
        logger.info(
            f"noisy m={m} var={noise_var}: modcs {row['modcs_nrmse']:.4f}, "
            f"cs {row['cs_nrmse']:.4f}"
        )
    return _finish("noisy", cfg, list(rows[0].keys()), rows, start)


def regmodcs_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """
    RegModCS over the γ grid with μ_T taken from the prior mean.

    All γ of a (m, u, e) group see the same trials; γ = 0 is modified-CS.
    With ``debias_alpha`` set, each estimate is also thresholded and re-fit by
    least squares and reported in the ``debiased_*`` columns.
    """
    _check_sizes(cfg)
    start = time.perf_counter()
    matrices: Dict[int, np.ndarray] = {}
    rows = []
    gammas = list(cfg.gammas)
    for stream, i_m, m, u, e in _cells(cfg):
        if i_m not in matrices:
            matrices[i_m] = _matrix(cfg, m, i_m)
        A = matrices[i_m]

        def trial(t: int, rng: np.random.Generator) -> List[Dict[str, Any]]:
            inst = draw_instance(cfg, u, e, rng)
            y = A @ inst.x
            T = inst.support.T
            out = []
            for gamma in gammas:
                res = solve_regmodcs(A, y, T, inst.mu[T], gamma, cfg.solver)
                entry = {
                    "exact": res.converged and is_exact(inst.x, res.x_hat),
                    "err_sq": float(np.sum((inst.x - res.x_hat) ** 2)),
                    "nrmse": nrmse(inst.x, res.x_hat),
                    "norm_sq": float(inst.x @ inst.x),
                }
                if cfg.debias_alpha is not None:
                    x_db = debias(A, y, res.x_hat, cfg.debias_alpha)
                    entry["debiased_exact"] = is_exact(inst.x, x_db)
                    entry["debiased_err_sq"] = float(np.sum((inst.x - x_db) ** 2))
                out.append(entry)
            _trace_trial("regsweep", stream, t, nrmse=[o["nrmse"] for o in out])
            return out

        results = run_trials(trial, cfg.trials, cfg.seed, stream, cfg.worker_count)
        for j, gamma in enumerate(gammas):
            per = [r[j] for r in results]
            norms = [p["norm_sq"] for p in per]
            prob = float(np.mean([p["exact"] for p in per]))
            row = {
                "m": m,
                "u": u,
                "e": e,
                "gamma": gamma,
                "trials": cfg.trials,
                "prob": prob,
                "prob_se": binomial_se(prob, cfg.trials),
                "nrmse": pooled_nrmse([p["err_sq"] for p in per], norms),
                "nrmse_se": mean_se([p["nrmse"] for p in per]),
            }
            if cfg.debias_alpha is not None:
                debiased = [p["debiased_exact"] for p in per]
                row["debiased_prob"] = float(np.mean(debiased))
                row["debiased_nrmse"] = pooled_nrmse(
                    [p["debiased_err_sq"] for p in per], norms
                )
            rows.append(row)
            logger.info(
                f"regsweep m={m} gamma={gamma}: prob {prob:.3f}, "
                f"nrmse {row['nrmse']:.4f}"
            )
    return _finish("regsweep", cfg, list(rows[0].keys()), rows, start)


def _static_operator(cfg: ExperimentConfig, m: int, n_side: int, index: int):
    rng = np.random.default_rng([cfg.seed, MATRIX_STREAM + index])
    seed = int(rng.integers(0, 2**31))
    n = n_side * n_side
    if cfg.operator == "gaussian":
        H = gaussian_operator(m, n, seed)
    else:
        H = partial_fourier_operator(n_side, max(1, (m + 1) // 2), seed)
    return as_dense(compose_measurement(H, WaveletSynthesis(n_side)))


def static_image_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """
    CS versus modified-CS on sparsified synthetic images.

    x is the ``energy``%-energy part of the image's wavelet coefficients, A =
    HWᵀ and T is the set of approximation coefficients. The wavelet transform
    is orthonormal, so N-RMSE on x equals N-RMSE on the image.
    """
    start = time.perf_counter()
    n_side = cfg.n_side
    n = n_side * n_side
    T = approximation_indices(n_side)
    rows = []
    for stream, m in enumerate(cfg.m_values(n)):
        if not 0 < m <= n:
            raise ConfigError(f"m={m} must lie in (0, {n}]")
        A = _static_operator(cfg, m, n_side, stream)

        def trial(t: int, rng: np.random.Generator) -> Dict[str, float]:
            coeffs = dwt2_db4(synthetic_image(n_side, rng)).ravel()
            keep = energy_support(coeffs, cfg.energy)
            x = np.zeros(n)
            x[keep] = coeffs[keep]
            y = A @ x
            missing, extra = support_errors(keep, T)
            out = {
                "s": float(keep.size),
                "u": float(missing),
                "e": float(extra),
                "cs": nrmse(x, solve_bp(A, y, cfg.solver).x_hat),
                "modcs": nrmse(x, solve_modcs(A, y, T, cfg.solver).x_hat),
            }
            _trace_trial("static", stream, t, **out)
            return out

        results = run_trials(trial, cfg.trials, cfg.seed, stream, cfg.worker_count)
        row: Dict[str, Any] = {"m": m, "n": n, "k": int(T.size)}
        for key in ("s", "u", "e"):
            row[f"mean_{key}"] = float(np.mean([r[key] for r in results]))
        for name in ("cs", "modcs"):
            values = [r[name] for r in results]
            row[f"{name}_nrmse"] = float(np.mean(values))
            row[f"{name}_se"] = mean_se(values)
        row["trials"] = cfg.trials
        rows.append(row)
        logger.info(
            f"static m={m}: cs {row['cs_nrmse']:.4f}, modcs {row['modcs_nrmse']:.4f}"
        )
    return _finish(
        "static", cfg, list(rows[0].keys()), rows, start, operator=cfg.operator
    )


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "mc-prob": exact_recon_probability,
    "noisy": noisy_nrmse,
    "regsweep": regmodcs_sweep,
    "static": static_image_experiment,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentReport:
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}") from None
    return fn(cfg)
