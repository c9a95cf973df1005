#  Copyright (c) modcs contributors.

from enum import Enum


class _StrEnum(str, Enum):
    @classmethod
    def _missing_(cls, value: object):
        """
        Handle unknown values by raising a ValueError that lists valid choices.

        Args:
            value: The unknown value that was attempted to be used

        Returns:
            Never returns, always raises ValueError
        """
        valid = [e.value for e in cls]
        raise ValueError(
            f"Invalid {cls.__name__} '{value}'. Valid values are: {', '.join(valid)}"
        )

    def __str__(self) -> str:
        return self.value


class OperatorKind(_StrEnum):
    """Kinds of measurement/sparsity operators."""

    DENSE = "dense"
    PARTIAL_FOURIER = "partial-fourier"
    WAVELET = "wavelet"
    IDENTITY = "identity"
    COMPOSITION = "dwt-composition"


class SolverStatus(_StrEnum):
    """Termination status of a convex solve."""

    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    INFEASIBLE = "infeasible"


class Verdict(_StrEnum):
    """
    Outcome of a sufficient-condition check.

    Attributes:
        PASS: Inequality holds with exact constants.
        FAIL: Inequality is violated (lower bounds are enough to prove this).
        INCONCLUSIVE: Inequality holds but only for lower-bound constants.
    """

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class RipMode(_StrEnum):
    EXACT = "exact"
    SAMPLED = "sampled-lower-bound"


class Method(_StrEnum):
    """Reconstruction pipelines for signal sequences."""

    CS = "cs"
    CS_DIFF = "cs-diff"
    MODCS = "modcs"
    REGMODCS = "regmodcs"


class BoundRule(_StrEnum):
    """High-probability sufficient conditions compared in the sparsity curves."""

    MODCS = "modcs"
    CS = "cs"
    CS2 = "cs2"


class OutputFormat(_StrEnum):
    CSV = "csv"
    JSON = "json"
