#  Copyright (c) modcs contributors.

"""
Synthetic signal sequences with a slowly changing support.

On the previous support the values follow a Gaussian random walk with
variance ``sigma_p2``; off it they are exactly zero (sparsified variant) or
Laplace(``b_p``) (compressible variant). Each step removes ``e`` members and
adds ``u`` new ones.
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ModelError, ParameterError
from ..mc_logger import logger
from ..supports import as_index_set, complement

# b̂_p is floored here; exactly sparse training data would otherwise give 0
B_P_FLOOR = 1e-12


class Frame(NamedTuple):
    x: np.ndarray
    support: np.ndarray


@dataclass(frozen=True)
class SequenceModel:
    """
    Parameters of the generative model.

    Attributes:
        n: Signal length.
        s: Support size at t = 0.
        u: Support additions per step.
        e: Support removals per step.
        sigma_p2: Variance of the on-support random walk.
        b_p: Laplace scale off the support.
        t_max: Last time index; sequences have t_max + 1 frames.
        seed: Seed of the generator.
        compressible: Laplace values off the support instead of zeros.
        mu0: Mean of the t = 0 support values.
        sigma0: Standard deviation of the t = 0 support values.
        new_scale: Laplace scale of the magnitude given to new members;
            defaults to ``b_p``.
    """

    n: int
    s: int
    u: int = 0
    e: int = 0
    sigma_p2: float = 0.0
    b_p: float = 1.0
    t_max: int = 0
    seed: int = 0
    compressible: bool = False
    mu0: float = 0.0
    sigma0: float = 10.0
    new_scale: Optional[float] = None

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.s <= self.n:
            raise ParameterError(f"need 1 <= s <= n, got s={self.s}, n={self.n}")
        if self.u < 0 or self.e < 0:
            raise ParameterError("u and e must be nonnegative")
        if self.sigma_p2 < 0:
            raise ParameterError("sigma_p2 must be nonnegative")
        if not self.b_p > 0:
            raise ParameterError("b_p must be positive")
        if self.t_max < 0:
            raise ParameterError("t_max must be nonnegative")
        if self.new_scale is not None and not self.new_scale > 0:
            raise ParameterError("new_scale must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceModel":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown sequence model keys: {', '.join(unknown)}")
        if "n" not in data or "s" not in data:
            raise ConfigError("sequence model needs n and s")
        return cls(**data)

    def support_sizes(self) -> List[int]:
        return [self.s + t * (self.u - self.e) for t in range(self.t_max + 1)]


def _check_horizon(model: SequenceModel) -> None:
    for t, size in enumerate(model.support_sizes()[:-1]):
        if model.e > size or model.u > model.n - size:
            raise ModelError(
                f"step {t + 1}: cannot remove {model.e} and add {model.u} "
                f"with |N|={size}, n={model.n}"
            )
        nxt = size + model.u - model.e
        if not 1 <= nxt <= model.n:
            raise ModelError(f"support size {nxt} at t={t + 1} leaves [1, {model.n}]")


def generate_sequence(model: SequenceModel) -> List[Frame]:
    """
    Draw (x_t, N_t) for t = 0..t_max.

    Raises:
        ModelError: If the support would leave [1, n] over the horizon.
    """
    _check_horizon(model)
    rng = np.random.default_rng(model.seed)
    n = model.n
    new_scale = model.new_scale if model.new_scale is not None else model.b_p
    sigma_p = np.sqrt(model.sigma_p2)

    N = np.sort(rng.choice(n, size=model.s, replace=False)).astype(np.int64)
    x = np.zeros(n)
    x[N] = rng.normal(model.mu0, model.sigma0, size=N.size)
    if model.compressible:
        off = complement(N, n)
        x[off] = rng.laplace(0.0, model.b_p, size=off.size)
    frames = [Frame(x, N)]

    for _ in range(model.t_max):
        removed = rng.choice(N, size=model.e, replace=False) if model.e else []
        outside = complement(N, n)
        added = rng.choice(outside, size=model.u, replace=False) if model.u else []
        removed, added = as_index_set(removed), as_index_set(added)
        kept = np.setdiff1d(N, removed)
        N_next = np.union1d(kept, added)

        x_next = np.zeros(n)
        x_next[kept] = x[kept] + sigma_p * rng.standard_normal(kept.size)
        magnitude = rng.laplace(0.0, new_scale, size=added.size)
        sign = rng.choice([-1.0, 1.0], size=added.size)
        x_next[added] = sign * np.abs(magnitude)
        if model.compressible:
            off = complement(N_next, n)
            x_next[off] = rng.laplace(0.0, model.b_p, size=off.size)
        x, N = x_next, N_next
        frames.append(Frame(x, N))

    logger.debug(
        f"generated {len(frames)} frames, n={n}, |N| from {frames[0].support.size} "
        f"to {frames[-1].support.size}"
    )
    return frames


def mle_params(
    signals: Sequence[np.ndarray], supports: Sequence[Iterable[int]]
) -> Tuple[float, float]:
    """
    Maximum-likelihood (b_p, sigma_p2) from a training sequence.

    b̂_p = Σ_t ‖(x_t)_{N_{t-1}^c}‖₁ / Σ_t |N_{t-1}^c| and
    σ̂_p² = Σ_t ‖(x_t − x_{t-1})_{N_{t-1}}‖₂² / Σ_t |N_{t-1}|, t = 1..t_max.

    Raises:
        ParameterError: With fewer than two frames, mismatched lengths or an
            empty denominator.
    """
    if len(signals) != len(supports):
        raise ParameterError("signals and supports must have the same length")
    if len(signals) < 2:
        raise ParameterError("the MLE needs at least two frames")
    l1_off = sq_on = 0.0
    count_off = count_on = 0
    for t in range(1, len(signals)):
        x, x_prev = np.asarray(signals[t]), np.asarray(signals[t - 1])
        N_prev = as_index_set(supports[t - 1])
        off = complement(N_prev, x.size)
        l1_off += float(np.abs(x[off]).sum())
        count_off += off.size
        sq_on += float(np.sum((x[N_prev] - x_prev[N_prev]) ** 2))
        count_on += N_prev.size
    if count_off == 0 or count_on == 0:
        raise ParameterError("empty support or complement in every frame")
    b_p = max(l1_off / count_off, B_P_FLOOR)
    return b_p, sq_on / count_on


def map_gamma(b_p: float, sigma_p2: float) -> float:
    """γ = b_p / (2σ_p²), the weight that makes RegModCS the causal MAP estimate."""
    if not sigma_p2 > 0:
        raise ParameterError("sigma_p2 must be positive to form the MAP weight")
    return b_p / (2.0 * sigma_p2)
