#  Copyright (c) modcs contributors.

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..common import load_json, round_half_up
from ..errors import ConfigError, ParameterError
from ..shared_vars import MODCS_WORKERS
from ..solvers.programs import SolverConfig

# x_N ~ Normal(0, signal_var·I)
PRIOR_GAUSSIAN = "gaussian"
# μ on N ∖ Δ is ±1, on Δ and Δ_e ±0.25; x_N ~ Normal(μ_N, signal_var·I)
PRIOR_MEAN_SHIFT = "mean-shift"
PRIORS = (PRIOR_GAUSSIAN, PRIOR_MEAN_SHIFT)
STATIC_OPERATORS = ("gaussian", "partial-fourier")


@dataclass
class ExperimentConfig:
    """
    Configuration shared by every Monte Carlo experiment.

    Fractions are rounded half up: m = round(m_frac·n), u = round(u_frac·s),
    e = round(e_frac·s). A cell is one (m, u, e) combination (or (m, σ_w²),
    (m, γ) for the noisy and RegModCS sweeps).

    Attributes:
        n: Signal length.
        s: Support size.
        m_fracs: Measurement counts as fractions of n.
        u_fracs: |Δ| as fractions of s.
        e_fracs: |Δ_e| as fractions of s.
        trials: Trials per cell.
        seed: Root of every random stream.
        prior: "gaussian" or "mean-shift".
        signal_var: Variance of x_N around its mean.
        noise_vars: σ_w² values of the noisy experiment.
        gammas: γ values of the RegModCS sweep.
        workers: Threads running trials; None reads MODCS_WORKERS.
        n_side: Image side of the static image experiment.
        energy: Energy percentage that sparsifies the static image.
        operator: H of the static image experiment.
        debias_alpha: Threshold for the LS re-fit columns of the RegModCS
            sweep; None skips them.
        solver: Interior-point settings.
    """

    n: int = 256
    s: int = 26
    m_fracs: List[float] = field(default_factory=lambda: [0.19])
    u_fracs: List[float] = field(default_factory=lambda: [0.08])
    e_fracs: List[float] = field(default_factory=lambda: [0.08])
    trials: int = 500
    seed: int = 0
    prior: str = PRIOR_GAUSSIAN
    signal_var: float = 100.0
    noise_vars: List[float] = field(default_factory=lambda: [0.0])
    gammas: List[float] = field(default_factory=lambda: [0.0, 1.0])
    workers: Optional[int] = None
    n_side: int = 32
    energy: float = 99.0
    operator: str = "gaussian"
    debias_alpha: Optional[float] = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.s <= self.n:
            raise ConfigError(f"need 1 <= s <= n, got s={self.s}, n={self.n}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        for name in ("m_fracs", "u_fracs", "e_fracs"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{name} must not be empty")
            if any(not 0 <= v <= 1 for v in values):
                raise ConfigError(f"{name} must lie in [0, 1], got {values}")
        if any(v <= 0 for v in self.m_fracs):
            raise ConfigError("m_fracs must be positive")
        if any(v < 0 for v in self.noise_vars):
            raise ConfigError("noise_vars must be nonnegative")
        if any(v < 0 for v in self.gammas):
            raise ConfigError("gammas must be nonnegative")
        if self.prior not in PRIORS:
            raise ConfigError(f"prior must be one of {', '.join(PRIORS)}")
        if self.operator not in STATIC_OPERATORS:
            raise ConfigError(f"operator must be one of {', '.join(STATIC_OPERATORS)}")
        if self.signal_var < 0:
            raise ConfigError("signal_var must be nonnegative")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def worker_count(self) -> int:
        return self.workers if self.workers is not None else MODCS_WORKERS

    def m_values(self, n: Optional[int] = None) -> List[int]:
        n = self.n if n is None else n
        return [round_half_up(f * n) for f in self.m_fracs]

    def u_values(self) -> List[int]:
        return [round_half_up(f * self.s) for f in self.u_fracs]

    def e_values(self) -> List[int]:
        return [round_half_up(f * self.s) for f in self.e_fracs]

    def to_dict(self) -> Dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["solver"] = self.solver.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown experiment keys: {', '.join(unknown)}")
        try:
            data["solver"] = SolverConfig.from_dict(data.get("solver"))
            return cls(**data)
        except (ParameterError, TypeError) as e:
            raise ConfigError(f"invalid experiment config: {e}") from e

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        return cls.from_dict(load_json(path))
