#  Copyright (c) modcs contributors.

"""
Restricted isometry constants δ_S and restricted orthogonality constants
θ_{S1,S2}, computed exhaustively over column subsets or estimated from
random subsets (which only gives lower bounds).
"""

import hashlib
import itertools
import math
import threading
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np

from ..errors import EnumerationBudgetError, MissingConstantError, ParameterError
from ..mc_logger import logger
from ..operators import as_dense, LinearOperator
from ..shared_vars import MODCS_ENUM_BUDGET
from ..types import RipMode

MatrixLike = Union[np.ndarray, LinearOperator]

# subsets whose Gram blocks are eigen-decomposed in one batch
CHUNK = 4096


def _combination_chunks(n: int, size: int, chunk: int = CHUNK) -> Iterator[np.ndarray]:
    combos = itertools.combinations(range(n), size)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def _check_budget(count: int, budget: Optional[int], what: str, alternative: str):
    budget = MODCS_ENUM_BUDGET if budget is None else budget
    if count > budget:
        raise EnumerationBudgetError(
            f"{what} needs {count} subsets, budget is {budget}; "
            f"use {alternative} for a lower bound"
        )


def _gram(A: MatrixLike) -> np.ndarray:
    A = as_dense(A)
    return A.T @ A


def _delta_of_blocks(blocks: np.ndarray) -> float:
    eig = np.linalg.eigvalsh(blocks)
    return float(max(np.max(eig[:, -1]) - 1.0, 1.0 - np.min(eig[:, 0])))


def _theta_of_blocks(blocks: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(blocks, ord=2, axis=(1, 2))))


def delta_exact(A: MatrixLike, S: int, budget: Optional[int] = None) -> float:
    """
    δ_S: max over all S-column subsets of max(λ_max − 1, 1 − λ_min) of the Gram.

    Raises:
        EnumerationBudgetError: If C(n, S) exceeds ``budget``.
    """
    G = _gram(A)
    n = G.shape[0]
    if not 0 <= S <= n:
        raise ParameterError(f"S must lie in [0, {n}], got {S}")
    if S == 0:
        return 0.0
    _check_budget(math.comb(n, S), budget, f"delta_{S}", "delta_sampled")
    value = 0.0
    for idx in _combination_chunks(n, S):
        blocks = G[idx[:, :, None], idx[:, None, :]]
        value = max(value, _delta_of_blocks(blocks))
    return value


def _partitions(total: int, S1: int):
    for first in itertools.combinations(range(total), S1):
        second = tuple(i for i in range(total) if i not in first)
        yield np.asarray(first, dtype=np.int64), np.asarray(second, dtype=np.int64)


def theta_exact(A: MatrixLike, S1: int, S2: int, budget: Optional[int] = None) -> float:
    """
    θ_{S1,S2}: max over disjoint (T1, T2) of the spectral norm of A_{T1}ᵀA_{T2}.

    Every (S1+S2)-subset is enumerated together with its splits into an S1
    and an S2 part.
    """
    G = _gram(A)
    n = G.shape[0]
    if S1 < 0 or S2 < 0 or S1 + S2 > n:
        raise ParameterError(f"need S1, S2 >= 0 and S1 + S2 <= {n}")
    if S1 == 0 or S2 == 0:
        return 0.0
    count = math.comb(n, S1) * math.comb(n - S1, S2)
    _check_budget(count, budget, f"theta_{S1},{S2}", "theta_sampled")
    splits = list(_partitions(S1 + S2, S1))
    value = 0.0
    for idx in _combination_chunks(n, S1 + S2, max(1, CHUNK // len(splits))):
        for pos1, pos2 in splits:
            rows, cols = idx[:, pos1], idx[:, pos2]
            value = max(value, _theta_of_blocks(G[rows[:, :, None], cols[:, None, :]]))
    return value


def _sampled_chunks(trials: int, draw) -> Iterator[np.ndarray]:
    done = 0
    while done < trials:
        size = min(CHUNK, trials - done)
        yield np.stack([draw() for _ in range(size)])
        done += size


def delta_sampled(
    A: MatrixLike, S: int, trials: int, rng: np.random.Generator
) -> float:
    """Running max of the δ_S objective over ``trials`` random S-subsets."""
    G = _gram(A)
    n = G.shape[0]
    if not 0 <= S <= n:
        raise ParameterError(f"S must lie in [0, {n}], got {S}")
    if S == 0 or trials <= 0:
        return 0.0
    value = 0.0
    for idx in _sampled_chunks(trials, lambda: rng.choice(n, size=S, replace=False)):
        value = max(value, _delta_of_blocks(G[idx[:, :, None], idx[:, None, :]]))
    return value


def theta_sampled(
    A: MatrixLike, S1: int, S2: int, trials: int, rng: np.random.Generator
) -> float:
    """Running max of the θ_{S1,S2} objective over random disjoint pairs."""
    G = _gram(A)
    n = G.shape[0]
    if S1 < 0 or S2 < 0 or S1 + S2 > n:
        raise ParameterError(f"need S1, S2 >= 0 and S1 + S2 <= {n}")
    if S1 == 0 or S2 == 0 or trials <= 0:
        return 0.0
    value = 0.0

    def draw():
        return rng.choice(n, size=S1 + S2, replace=False)

    for idx in _sampled_chunks(trials, draw):
        rows, cols = idx[:, :S1], idx[:, S1:]
        value = max(value, _theta_of_blocks(G[rows[:, :, None], cols[:, None, :]]))
    return value


def matrix_hash(A: MatrixLike) -> str:
    A = np.ascontiguousarray(as_dense(A), dtype=float)
    digest = hashlib.sha256(str(A.shape).encode())
    digest.update(A.tobytes())
    return digest.hexdigest()[:16]


ThetaKey = Tuple[int, int]


def _theta_key(S1: int, S2: int) -> ThetaKey:
    return (min(S1, S2), max(S1, S2))


class RipTable:
    """
    δ_S and θ_{S1,S2} values for one matrix, each tagged exact or lower bound.

    Tables built with :meth:`from_matrix` compute missing entries on first use
    and keep them; an entry, once stored, never changes. Tables built by hand
    raise MissingConstantError for entries they do not hold, unless a
    ``default`` is given.
    """

    def __init__(
        self,
        matrix: Optional[np.ndarray] = None,
        budget: Optional[int] = None,
        sample_trials: int = 0,
        seed: int = 0,
        default: Optional[float] = None,
    ):
        self.matrix = None if matrix is None else as_dense(matrix)
        self.matrix_hash = None if matrix is None else matrix_hash(self.matrix)
        self.budget = budget
        self.sample_trials = sample_trials
        self.seed = seed
        self.default = default
        self._delta: Dict[int, Tuple[float, RipMode]] = {}
        self._theta: Dict[ThetaKey, Tuple[float, RipMode]] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_matrix(
        cls,
        A: MatrixLike,
        budget: Optional[int] = None,
        sample_trials: int = 10_000,
        seed: int = 0,
    ) -> "RipTable":
        """
        Lazily filled table for ``A``.

        Entries beyond the enumeration budget fall back to ``sample_trials``
        random subsets (flagged as lower bounds); with ``sample_trials=0`` the
        EnumerationBudgetError propagates instead.
        """
        return cls(matrix=A, budget=budget, sample_trials=sample_trials, seed=seed)

    @classmethod
    def from_constants(
        cls,
        delta: Optional[Dict[int, float]] = None,
        theta: Optional[Dict[ThetaKey, float]] = None,
        mode: RipMode = RipMode.EXACT,
        default: Optional[float] = None,
    ) -> "RipTable":
        table = cls(default=default)
        for S, value in (delta or {}).items():
            table._store_delta(int(S), float(value), RipMode(mode))
        for (S1, S2), value in (theta or {}).items():
            table._store_theta(int(S1), int(S2), float(value), RipMode(mode))
        return table

    @classmethod
    def zeros(cls) -> "RipTable":
        return cls.from_constants(default=0.0)

    def _store_delta(self, S: int, value: float, mode: RipMode):
        self._delta.setdefault(S, (value, mode))

    def _store_theta(self, S1: int, S2: int, value: float, mode: RipMode):
        self._theta.setdefault(_theta_key(S1, S2), (value, mode))

    def _rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, *key])

    def _lookup_delta(self, S: int) -> Tuple[float, RipMode]:
        if S <= 0:
            return 0.0, RipMode.EXACT
        with self._lock:
            if S in self._delta:
                return self._delta[S]
            if self.matrix is None:
                if self.default is not None:
                    return self.default, RipMode.EXACT
                raise MissingConstantError(f"RipTable has no delta_{S}")
            try:
                value = delta_exact(self.matrix, S, self.budget)
                mode = RipMode.EXACT
            except EnumerationBudgetError:
                if self.sample_trials <= 0:
                    raise
                logger.info(f"delta_{S}: enumeration too large, sampling")
                value = delta_sampled(
                    self.matrix, S, self.sample_trials, self._rng(0, S)
                )
                mode = RipMode.SAMPLED
            self._store_delta(S, value, mode)
            return self._delta[S]

    def _lookup_theta(self, S1: int, S2: int) -> Tuple[float, RipMode]:
        if S1 <= 0 or S2 <= 0:
            return 0.0, RipMode.EXACT
        key = _theta_key(S1, S2)
        with self._lock:
            if key in self._theta:
                return self._theta[key]
            if self.matrix is None:
                if self.default is not None:
                    return self.default, RipMode.EXACT
                raise MissingConstantError(f"RipTable has no theta_{S1},{S2}")
            if S1 + S2 > self.matrix.shape[1]:
                raise ParameterError(
                    f"theta_{S1},{S2} needs {S1 + S2} columns, matrix has "
                    f"{self.matrix.shape[1]}"
                )
            try:
                value = theta_exact(self.matrix, *key, self.budget)
                mode = RipMode.EXACT
            except EnumerationBudgetError:
                if self.sample_trials <= 0:
                    raise
                logger.info(f"theta_{S1},{S2}: enumeration too large, sampling")
                value = theta_sampled(
                    self.matrix, *key, self.sample_trials, self._rng(1, *key)
                )
                mode = RipMode.SAMPLED
            self._store_theta(*key, value, mode)
            return self._theta[key]

    def delta(self, S: int) -> float:
        return self._lookup_delta(int(S))[0]

    def theta(self, S1: int, S2: int) -> float:
        return self._lookup_theta(int(S1), int(S2))[0]

    def delta_mode(self, S: int) -> RipMode:
        return self._lookup_delta(int(S))[1]

    def theta_mode(self, S1: int, S2: int) -> RipMode:
        return self._lookup_theta(int(S1), int(S2))[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrix_hash": self.matrix_hash,
            "default": self.default,
            "delta": {
                str(S): {"value": v, "mode": mode.value}
                for S, (v, mode) in sorted(self._delta.items())
            },
            "theta": {
                f"{S1},{S2}": {"value": v, "mode": mode.value}
                for (S1, S2), (v, mode) in sorted(self._theta.items())
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RipTable":
        """Load a table written by :meth:`to_dict` (plain numbers are exact)."""
        table = cls(default=data.get("default"))
        table.matrix_hash = data.get("matrix_hash")
        for key, entry in data.get("delta", {}).items():
            value, mode = _entry(entry)
            table._store_delta(int(key), value, mode)
        for key, entry in data.get("theta", {}).items():
            S1, S2 = (int(part) for part in str(key).split(","))
            value, mode = _entry(entry)
            table._store_theta(S1, S2, value, mode)
        return table


def _entry(entry) -> Tuple[float, RipMode]:
    if isinstance(entry, dict):
        return float(entry["value"]), RipMode(entry.get("mode", RipMode.EXACT.value))
    return float(entry), RipMode.EXACT
