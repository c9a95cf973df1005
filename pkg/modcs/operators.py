#  Copyright (c) modcs contributors.

"""
Measurement and sparsity operators.

Every operator is a ``scipy.sparse.linalg.LinearOperator`` over float64 with
``apply``/``adjoint`` aliases, on-demand column extraction and a JSON-able
``spec()``. Images are flattened row-major, so a b×b image is a vector of
length n = b².
"""

import functools
import warnings
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np
import pywt
from scipy.sparse.linalg import LinearOperator as _ScipyLinearOperator

from .errors import ParameterError
from .supports import as_index_set, energy_support
from .types import OperatorKind

DWT_WAVELET = "db4"
DWT_MODE = "periodization"
DEFAULT_LEVELS = 2


class LinearOperator(_ScipyLinearOperator):
    """An m×n real linear map with apply, adjoint-apply and column extraction."""

    kind: OperatorKind

    def __init__(self, shape, kind: OperatorKind):
        super().__init__(dtype=np.float64, shape=shape)
        self.kind = OperatorKind(kind)

    @property
    def m(self) -> int:
        return self.shape[0]

    @property
    def n(self) -> int:
        return self.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matvec(np.asarray(x, dtype=float))

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return self.rmatvec(np.asarray(y, dtype=float))

    def column(self, j: int) -> np.ndarray:
        e = np.zeros(self.n)
        e[j] = 1.0
        return self.apply(e)

    def to_dense(self) -> np.ndarray:
        """Materialize the operator column by column."""
        return np.column_stack([self.column(j) for j in range(self.n)])

    def spec(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "rows": self.m, "cols": self.n}


class DenseOperator(LinearOperator):
    """Explicit matrix. ``seed``/``normalized`` are kept when it was generated."""

    def __init__(
        self,
        matrix: np.ndarray,
        seed: Optional[int] = None,
        normalized: Optional[bool] = None,
    ):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ParameterError(f"expected a 2-D matrix, got shape {matrix.shape}")
        matrix.setflags(write=False)
        super().__init__(matrix.shape, OperatorKind.DENSE)
        self.matrix = matrix
        self.seed = seed
        self.normalized = normalized

    def _matvec(self, x):
        return self.matrix @ np.ravel(x)

    def _rmatvec(self, y):
        return self.matrix.T @ np.ravel(y)

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j].copy()

    def to_dense(self) -> np.ndarray:
        return self.matrix.copy()

    def spec(self) -> Dict[str, Any]:
        out = super().spec()
        if self.seed is not None:
            out.update({"generator": "gaussian", "seed": self.seed})
            out["normalize"] = bool(self.normalized)
        return out


class IdentityOperator(LinearOperator):
    def __init__(self, n: int):
        super().__init__((n, n), OperatorKind.IDENTITY)

    def _matvec(self, x):
        return np.array(np.ravel(x), dtype=float)

    def _rmatvec(self, y):
        return np.array(np.ravel(y), dtype=float)


def gaussian_operator(
    m: int, n: int, seed: Optional[int] = None, normalize: bool = True
) -> DenseOperator:
    """
    Draw an m×n matrix with i.i.d. zero-mean Gaussian entries.

    Args:
        m: Number of measurements, 0 < m <= n.
        n: Signal length.
        seed: Seed for ``numpy.random.default_rng``; fixed seeds give identical
            matrices.
        normalize: Scale every column to unit l2 norm.
    """
    if not 0 < m <= n:
        raise ParameterError(f"need 0 < m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, n))
    if normalize:
        matrix /= np.linalg.norm(matrix, axis=0, keepdims=True)
    return DenseOperator(matrix, seed=seed, normalized=normalize)


def random_mask(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` distinct frequency indices out of ``n``."""
    if not 0 < m <= n:
        raise ParameterError(f"need 0 < m <= n, got m={m}, n={n}")
    return np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64)


class PartialFourierOperator(LinearOperator):
    """
    Rows of the unitary 2-D DFT of a b×b image selected by ``mask``.

    The complex samples are returned realified as [Re; Im], so the output
    length is 2·|mask|.
    """

    def __init__(self, n_side: int, mask: Iterable[int], seed: Optional[int] = None):
        mask_arr = np.asarray(list(mask), dtype=np.int64)
        n = n_side * n_side
        if mask_arr.size == 0:
            raise ParameterError("mask must select at least one frequency")
        if np.unique(mask_arr).size != mask_arr.size:
            raise ParameterError("mask has duplicate entries")
        if mask_arr.min() < 0 or mask_arr.max() >= n:
            raise ParameterError(f"mask entries must lie in [0, {n})")
        mask_arr.setflags(write=False)
        super().__init__((2 * mask_arr.size, n), OperatorKind.PARTIAL_FOURIER)
        self.n_side = n_side
        self.mask = mask_arr
        self.seed = seed

    def _matvec(self, x):
        image = np.reshape(x, (self.n_side, self.n_side))
        spectrum = np.fft.fft2(image, norm="ortho").ravel()[self.mask]
        return np.concatenate([spectrum.real, spectrum.imag])

    def _rmatvec(self, y):
        y = np.ravel(y)
        half = self.mask.size
        spectrum = np.zeros(self.n, dtype=complex)
        spectrum[self.mask] = y[:half] + 1j * y[half:]
        image = np.fft.ifft2(
            spectrum.reshape(self.n_side, self.n_side), norm="ortho"
        )
        return image.real.ravel()

    def spec(self) -> Dict[str, Any]:
        out = super().spec()
        out.update({"n_side": self.n_side, "mask": self.mask.tolist()})
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def partial_fourier_operator(
    n_side: int,
    mask_rows: Union[int, Iterable[int]],
    seed: Optional[int] = None,
) -> PartialFourierOperator:
    """
    Build H = MF for a b×b image.

    Args:
        n_side: Image side b (n = b²).
        mask_rows: Flattened 2-D frequency indices (k1 * b + k2), or a count of
            frequencies to draw at random with ``seed``.
        seed: Seed used to draw the mask when ``mask_rows`` is a count.
    """
    if isinstance(mask_rows, (int, np.integer)):
        rng = np.random.default_rng(seed)
        mask_rows = random_mask(n_side * n_side, int(mask_rows), rng)
    return PartialFourierOperator(n_side, mask_rows, seed=seed)


def _wavedec2(image: np.ndarray, levels: int):
    # pywt warns once the blocks get shorter than the filter; periodization
    # stays exact there
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return pywt.wavedec2(image, DWT_WAVELET, mode=DWT_MODE, level=levels)


@functools.lru_cache(maxsize=None)
def _coeff_slices(side: int, levels: int):
    return pywt.coeffs_to_array(_wavedec2(np.zeros((side, side)), levels))[1]


def _check_dwt_shape(shape, levels: int) -> int:
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ParameterError(f"expected a square image, got shape {shape}")
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    side = shape[0]
    if side % (2**levels) != 0:
        raise ParameterError(
            f"image side {side} is not divisible by 2**levels = {2**levels}"
        )
    return side


def dwt2_db4(image: np.ndarray, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """
    Orthonormal periodic 2-D Daubechies-4 DWT.

    Coefficients use the nested-quadrant layout of ``pywt.coeffs_to_array``:
    the approximation block sits top-left and each level's details surround it.
    """
    image = np.asarray(image, dtype=float)
    _check_dwt_shape(image.shape, levels)
    return pywt.coeffs_to_array(_wavedec2(image, levels))[0]


def idwt2_db4(coeffs: np.ndarray, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Inverse of :func:`dwt2_db4`."""
    coeffs = np.asarray(coeffs, dtype=float)
    side = _check_dwt_shape(coeffs.shape, levels)
    parts = pywt.array_to_coeffs(
        coeffs, _coeff_slices(side, levels), output_format="wavedec2"
    )
    return pywt.waverec2(parts, DWT_WAVELET, mode=DWT_MODE)


class WaveletSynthesis(LinearOperator):
    """Φ = Wᵀ: maps flattened wavelet coefficients to a flattened image."""

    def __init__(self, n_side: int, levels: int = DEFAULT_LEVELS):
        _check_dwt_shape((n_side, n_side), levels)
        super().__init__((n_side * n_side, n_side * n_side), OperatorKind.WAVELET)
        self.n_side = n_side
        self.levels = levels

    def _matvec(self, x):
        coeffs = np.reshape(x, (self.n_side, self.n_side))
        return idwt2_db4(coeffs, self.levels).ravel()

    def _rmatvec(self, y):
        image = np.reshape(y, (self.n_side, self.n_side))
        return dwt2_db4(image, self.levels).ravel()

    def spec(self) -> Dict[str, Any]:
        out = super().spec()
        out.update({"n_side": self.n_side, "levels": self.levels})
        return out


class ComposedOperator(LinearOperator):
    """A = H Φ."""

    def __init__(self, measure: LinearOperator, basis: LinearOperator):
        if measure.shape[1] != basis.shape[0]:
            raise ParameterError(
                f"cannot compose H {measure.shape} with basis {basis.shape}"
            )
        shape = (measure.shape[0], basis.shape[1])
        super().__init__(shape, OperatorKind.COMPOSITION)
        # not `H`: scipy reserves it for the adjoint
        self.measure = measure
        self.basis = basis

    def _matvec(self, x):
        return self.measure.apply(self.basis.apply(np.ravel(x)))

    def _rmatvec(self, y):
        return self.basis.adjoint(self.measure.adjoint(np.ravel(y)))

    def column(self, j: int) -> np.ndarray:
        return self.measure.apply(self.basis.column(j))

    def spec(self) -> Dict[str, Any]:
        out = super().spec()
        out.update({"H": self.measure.spec(), "basis": self.basis.spec()})
        return out


def compose_measurement(H: LinearOperator, basis: LinearOperator) -> LinearOperator:
    """
    Compose a measurement operator with a sparsity basis.

    An identity basis returns ``H`` itself.
    """
    if H.shape[1] != basis.shape[0]:
        raise ParameterError(f"cannot compose H {H.shape} with basis {basis.shape}")
    if basis.kind == OperatorKind.IDENTITY:
        return H
    return ComposedOperator(H, basis)


def operator_from_spec(spec: Dict[str, Any]) -> LinearOperator:
    """Rebuild an operator from :meth:`LinearOperator.spec` output."""
    kind = OperatorKind(spec["kind"])
    if kind == OperatorKind.DENSE:
        if spec.get("generator") != "gaussian":
            raise ParameterError("dense operators without a generator need a matrix")
        return gaussian_operator(
            spec["rows"], spec["cols"], spec["seed"], spec.get("normalize", True)
        )
    if kind == OperatorKind.PARTIAL_FOURIER:
        return PartialFourierOperator(spec["n_side"], spec["mask"], spec.get("seed"))
    if kind == OperatorKind.WAVELET:
        return WaveletSynthesis(spec["n_side"], spec.get("levels", DEFAULT_LEVELS))
    if kind == OperatorKind.IDENTITY:
        return IdentityOperator(spec["cols"])
    return ComposedOperator(
        operator_from_spec(spec["H"]), operator_from_spec(spec["basis"])
    )


def as_operator(A: Union[np.ndarray, LinearOperator]) -> LinearOperator:
    if isinstance(A, LinearOperator):
        return A
    return DenseOperator(A)


def as_dense(A: Union[np.ndarray, LinearOperator]) -> np.ndarray:
    if isinstance(A, LinearOperator):
        return A.to_dense()
    return np.asarray(A, dtype=float)


def approximation_indices(n_side: int, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Flattened indices of the approximation block of the coefficient layout."""
    _check_dwt_shape((n_side, n_side), levels)
    block = n_side >> levels
    rows, cols = np.meshgrid(np.arange(block), np.arange(block), indexing="ij")
    return as_index_set((rows * n_side + cols).ravel())


def sparsify(image: np.ndarray, b: float, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Keep only the b%-energy support of the image's wavelet coefficients."""
    coeffs = dwt2_db4(image, levels)
    keep = energy_support(coeffs.ravel(), b)
    kept = np.zeros(coeffs.size)
    kept[keep] = coeffs.ravel()[keep]
    return idwt2_db4(kept.reshape(coeffs.shape), levels)


def synthetic_image(
    n_side: int, rng: np.random.Generator, blobs: int = 4
) -> np.ndarray:
    """A smooth synthetic scene: a random gradient plus Gaussian blobs."""
    grid = np.linspace(0.0, 1.0, n_side)
    yy, xx = np.meshgrid(grid, grid, indexing="ij")
    gx, gy = rng.uniform(-1.0, 1.0, size=2)
    image = 100.0 + 20.0 * (gx * xx + gy * yy)
    for _ in range(blobs):
        cy, cx = rng.uniform(0.2, 0.8, size=2)
        width = rng.uniform(0.05, 0.2)
        height = rng.uniform(30.0, 120.0)
        image += height * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
    return image
