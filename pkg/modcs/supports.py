#  Copyright (c) modcs contributors.

"""
Index-set model of a partially known support.

All index sets are 0-based, sorted, duplicate-free ``numpy`` integer arrays.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import ParameterError, ZeroSignalError


def as_index_set(indices: Iterable[int]) -> np.ndarray:
    """Return ``indices`` as a sorted, unique int64 array."""
    if not isinstance(indices, np.ndarray):
        indices = list(indices)
    arr = np.asarray(indices)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.unique(arr.astype(np.int64, copy=False))


def complement(indices: Iterable[int], n: int) -> np.ndarray:
    """Return [0, n) minus ``indices``."""
    mask = np.ones(n, dtype=bool)
    mask[as_index_set(indices)] = False
    return np.flatnonzero(mask)


def _check_range(indices: np.ndarray, n: int, name: str) -> None:
    if indices.size and (indices[0] < 0 or indices[-1] >= n):
        raise ParameterError(f"{name} has indices outside [0, {n})")


@dataclass(frozen=True, eq=False)
class SupportModel:
    """
    The sets N, T, Δ and Δ_e of a partially known support.

    ``T`` is the known part, ``delta`` the unknown part of N missing from T and
    ``delta_e`` the erroneous entries of T outside N. The true support is
    derived as N = (T ∪ Δ) ∖ Δ_e.
    """

    n: int
    T: np.ndarray
    delta: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    delta_e: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if self.n <= 0:
            raise ParameterError(f"signal length must be positive, got {self.n}")
        object.__setattr__(self, "T", as_index_set(self.T))
        object.__setattr__(self, "delta", as_index_set(self.delta))
        object.__setattr__(self, "delta_e", as_index_set(self.delta_e))
        for name in ("T", "delta", "delta_e"):
            _check_range(getattr(self, name), self.n, name)
        for arr in (self.T, self.delta, self.delta_e):
            arr.setflags(write=False)
        if np.intersect1d(self.delta, self.T).size:
            raise ParameterError("delta must be disjoint from T")
        if np.setdiff1d(self.delta_e, self.T).size:
            raise ParameterError("delta_e must be a subset of T")

    @property
    def N(self) -> np.ndarray:
        return np.setdiff1d(np.union1d(self.T, self.delta), self.delta_e)

    @property
    def s(self) -> int:
        return self.k + self.u - self.e

    @property
    def k(self) -> int:
        return int(self.T.size)

    @property
    def u(self) -> int:
        return int(self.delta.size)

    @property
    def e(self) -> int:
        return int(self.delta_e.size)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "T": self.T.tolist(),
            "delta": self.delta.tolist(),
            "delta_e": self.delta_e.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SupportModel":
        return cls(
            n=int(data["n"]),
            T=data.get("T", []),
            delta=data.get("delta", []),
            delta_e=data.get("delta_e", []),
        )


def estimate_support(x: np.ndarray, alpha: float) -> np.ndarray:
    """
    Threshold a reconstruction into a support estimate.

    Args:
        x: Real vector.
        alpha: Zeroing threshold on the squared magnitude, alpha >= 0.

    Returns:
        Sorted indices i with x_i**2 > alpha.
    """
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")
    x = np.asarray(x, dtype=float)
    return np.flatnonzero(x * x > alpha).astype(np.int64)


def energy_support(x: np.ndarray, b: float) -> np.ndarray:
    """
    Compute the b%-energy support of ``x``.

    Entries are taken in descending order of x_i**2 (ties: lower index first)
    until their energy reaches b% of ||x||_2**2.

    Args:
        x: Real vector with at least one nonzero entry.
        b: Percentage in (0, 100].

    Returns:
        The smallest such index set, sorted ascending.

    Raises:
        ZeroSignalError: If x is identically zero.
    """
    if not 0 < b <= 100:
        raise ParameterError(f"energy percentage must lie in (0, 100], got {b}")
    energy = np.square(np.asarray(x, dtype=float))
    total = energy.sum()
    if total == 0:
        raise ZeroSignalError("zero signal has no energy support")
    # stable sort on -energy keeps lower indices first among ties
    order = np.argsort(-energy, kind="stable")
    cumulative = np.cumsum(energy[order])
    target = (b / 100.0) * total
    count = int(np.searchsorted(cumulative, target, side="left")) + 1
    # the b = 100 target can exceed the float cumsum by a rounding step
    count = min(count, int(np.count_nonzero(energy)) if b == 100 else energy.size)
    count = min(max(count, 1), energy.size)
    return np.sort(order[:count]).astype(np.int64)


def support_change_stats(
    n_curr: Iterable[int], n_prev: Iterable[int]
) -> Tuple[int, int]:
    """Return (additions, removals) going from ``n_prev`` to ``n_curr``."""
    curr, prev = as_index_set(n_curr), as_index_set(n_prev)
    return int(np.setdiff1d(curr, prev).size), int(np.setdiff1d(prev, curr).size)


def support_change_series(
    supports: Sequence[Iterable[int]],
) -> List[Tuple[int, int]]:
    return [
        support_change_stats(supports[t], supports[t - 1])
        for t in range(1, len(supports))
    ]


def support_errors(true_support: Iterable[int], T: Iterable[int]) -> Tuple[int, int]:
    """
    Compare a support estimate with the truth.

    Returns:
        (|N ∖ T|, |T ∖ N|), i.e. the sizes of Δ and Δ_e for this T.
    """
    N, T = as_index_set(true_support), as_index_set(T)
    return int(np.setdiff1d(N, T).size), int(np.setdiff1d(T, N).size)


def build_support_model(
    n: int,
    true_support: Iterable[int],
    u: int,
    e: int,
    rng: np.random.Generator,
) -> SupportModel:
    """
    Draw a partially known support around a true support.

    Δ is drawn uniformly without replacement from N, Δ_e uniformly from
    [0, n) ∖ N, and T = (N ∪ Δ_e) ∖ Δ.

    Raises:
        ParameterError: If u > |N| or e > n - |N|.
    """
    N = as_index_set(true_support)
    _check_range(N, n, "true_support")
    if u < 0 or e < 0:
        raise ParameterError("u and e must be nonnegative")
    if u > N.size:
        raise ParameterError(f"u={u} exceeds the support size {N.size}")
    outside = complement(N, n)
    if e > outside.size:
        raise ParameterError(f"e={e} exceeds n - |N| = {outside.size}")
    delta = rng.choice(N, size=u, replace=False) if u else []
    delta_e = rng.choice(outside, size=e, replace=False) if e else []
    T = np.setdiff1d(np.union1d(N, as_index_set(delta_e)), as_index_set(delta))
    return SupportModel(n=n, T=T, delta=delta, delta_e=delta_e)
