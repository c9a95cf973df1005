#  Copyright (c) modcs contributors.

import numpy as np

from ..errors import ZeroSignalError

# relative error below which a reconstruction counts as exact
EXACT_THRESHOLD = 1e-5


def nrmse(x_true: np.ndarray, x_hat: np.ndarray) -> float:
    """‖x − x̂‖₂ / ‖x‖₂."""
    x_true = np.asarray(x_true, dtype=float)
    norm = np.linalg.norm(x_true)
    if norm == 0:
        raise ZeroSignalError("nrmse is undefined for a zero reference signal")
    return float(np.linalg.norm(x_true - np.asarray(x_hat, dtype=float)) / norm)


def is_exact(x_true: np.ndarray, x_hat: np.ndarray) -> bool:
    return nrmse(x_true, x_hat) < EXACT_THRESHOLD
