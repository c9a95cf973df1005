#  Copyright (c) modcs contributors.

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..common import round_half_up
from ..errors import ConfigError, ParameterError
from ..mc_logger import logger
from ..operators import (
    approximation_indices,
    compose_measurement,
    gaussian_operator,
    LinearOperator,
    partial_fourier_operator,
    WaveletSynthesis,
)
from ..solvers.programs import SolverConfig
from ..supports import as_index_set, energy_support
from ..types import Method
from .recursive import (
    cs_diff,
    DEFAULT_ENERGY,
    dynamic_modcs,
    dynamic_regmodcs,
    DynamicTrace,
    simple_cs,
)
from .sequence import Frame, generate_sequence, map_gamma, mle_params, SequenceModel

OPERATOR_KINDS = ("gaussian", "partial-fourier")


@dataclass
class DynamicRunConfig:
    """
    A complete dynamic reconstruction run, as read from JSON.

    ``m0`` and ``m`` are fractions of n. For ``partial-fourier`` the signal is
    the wavelet coefficient vector of a √n×√n image, A = MFWᵀ, and m·n/2
    frequencies are sampled so A has about m·n real rows.
    """

    model: SequenceModel
    m0: float = 0.5
    m: float = 0.16
    operator: str = "gaussian"
    method: Method = Method.MODCS
    alpha: Union[float, str] = "auto"
    b: float = DEFAULT_ENERGY
    gamma: Union[float, str] = 1.0
    t0: Union[str, List[int]] = "empty"
    noise_var: float = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        self.method = Method(self.method)
        if self.operator not in OPERATOR_KINDS:
            raise ConfigError(
                f"operator must be one of {', '.join(OPERATOR_KINDS)}, "
                f"got {self.operator!r}"
            )
        for name in ("m0", "m"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigError(f"{name} must be a fraction of n in (0, 1]")
        if isinstance(self.alpha, str) and self.alpha != "auto":
            raise ConfigError(f"alpha must be a number or 'auto', got {self.alpha!r}")
        if isinstance(self.gamma, str) and self.gamma != "map":
            raise ConfigError(f"gamma must be a number or 'map', got {self.gamma!r}")
        if isinstance(self.t0, str) and self.t0 not in ("empty", "approximation"):
            raise ConfigError("t0 must be 'empty', 'approximation' or a list")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["model"] = self.model.to_dict()
        out["solver"] = self.solver.to_dict()
        out["method"] = self.method.value
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DynamicRunConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown dynamic run keys: {', '.join(unknown)}")
        if "model" not in data:
            raise ConfigError("dynamic run config needs a 'model' section")
        try:
            data["model"] = SequenceModel.from_dict(data["model"])
            data["solver"] = SolverConfig.from_dict(data.get("solver"))
            return cls(**data)
        except (ParameterError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid dynamic run config: {e}") from e


def build_operators(
    cfg: DynamicRunConfig, rng: np.random.Generator
) -> Tuple[LinearOperator, LinearOperator]:
    """Draw (A0, A) for the run."""
    n = cfg.model.n
    m0, m = round_half_up(cfg.m0 * n), round_half_up(cfg.m * n)
    seeds = rng.integers(0, 2**31, size=2)
    if cfg.operator == "gaussian":
        return (
            gaussian_operator(m0, n, int(seeds[0])),
            gaussian_operator(m, n, int(seeds[1])),
        )
    n_side = _side(n)
    basis = WaveletSynthesis(n_side)
    H0 = partial_fourier_operator(n_side, max(1, round_half_up(m0 / 2)), int(seeds[0]))
    H = partial_fourier_operator(n_side, max(1, round_half_up(m / 2)), int(seeds[1]))
    return compose_measurement(H0, basis), compose_measurement(H, basis)


def _side(n: int) -> int:
    n_side = math.isqrt(n)
    if n_side * n_side != n:
        raise ConfigError(f"partial-fourier runs need a square n, got {n}")
    return n_side


def _bootstrap_set(cfg: DynamicRunConfig) -> np.ndarray:
    if isinstance(cfg.t0, str):
        if cfg.t0 == "empty":
            return as_index_set([])
        if cfg.operator != "partial-fourier":
            raise ConfigError("t0='approximation' needs the partial-fourier operator")
        return approximation_indices(_side(cfg.model.n))
    return as_index_set(cfg.t0)


def _training_supports(cfg: DynamicRunConfig, frames: List[Frame]) -> List[np.ndarray]:
    if cfg.model.compressible:
        return [energy_support(f.x, cfg.b) for f in frames]
    return [f.support for f in frames]


def resolve_gamma(cfg: DynamicRunConfig) -> float:
    """The numeric γ; "map" estimates b̂_p/(2σ̂_p²) on an independent sequence."""
    if not isinstance(cfg.gamma, str):
        if cfg.gamma < 0:
            raise ConfigError(f"gamma must be nonnegative, got {cfg.gamma}")
        return float(cfg.gamma)
    training_model = dataclasses.replace(
        cfg.model, seed=cfg.model.seed + 1, t_max=max(cfg.model.t_max, 1)
    )
    frames = generate_sequence(training_model)
    b_p, sigma_p2 = mle_params(
        [f.x for f in frames], _training_supports(cfg, frames)
    )
    gamma = map_gamma(b_p, sigma_p2)
    logger.info(
        f"MAP weight from training data: b_p={b_p:.4g}, sigma_p2={sigma_p2:.4g}, "
        f"gamma={gamma:.4g}"
    )
    return gamma


def measure(
    A0: LinearOperator,
    A: LinearOperator,
    frames: List[Frame],
    noise_var: float,
    rng: np.random.Generator,
) -> List[np.ndarray]:
    ys = []
    for t, frame in enumerate(frames):
        op = A0 if t == 0 else A
        y = op.apply(frame.x)
        if noise_var > 0:
            y = y + math.sqrt(noise_var) * rng.standard_normal(y.size)
        ys.append(y)
    return ys


def run_dynamic(
    cfg: DynamicRunConfig, frames: Optional[List[Frame]] = None
) -> DynamicTrace:
    """
    Generate a sequence (unless ``frames`` is given), measure it and run the
    configured pipeline with the ground truth attached.
    """
    if frames is None:
        frames = generate_sequence(cfg.model)
    rng = np.random.default_rng([cfg.model.seed, 1])
    A0, A = build_operators(cfg, rng)
    ys = measure(A0, A, frames, cfg.noise_var, rng)
    common = {"cfg": cfg.solver, "truth": frames, "b": cfg.b, "alpha": cfg.alpha}
    logger.info(
        f"dynamic {cfg.method}: n={cfg.model.n}, m0={A0.m}, m={A.m}, "
        f"{len(frames)} frames"
    )
    if cfg.method == Method.MODCS:
        return dynamic_modcs(A0, A, ys, T0=_bootstrap_set(cfg), **common)
    if cfg.method == Method.REGMODCS:
        return dynamic_regmodcs(
            A0, A, ys, gamma=resolve_gamma(cfg), T0=_bootstrap_set(cfg), **common
        )
    if cfg.method == Method.CS_DIFF:
        return cs_diff(A0, A, ys, **common)
    return simple_cs(A0, A, ys, **common)
