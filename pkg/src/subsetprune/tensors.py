"""Dense activation/kernel tensors and the exact convolution everything else builds on.

Conventions
-----------
* :class:`FeatureMap` holds activations indexed ``(row, col, channel)``.
* :class:`Tensor4` holds kernel stacks indexed ``(row, col, channel, kernel)``.
* :func:`conv` zero-pads so the output spatial size equals the input's. Output
  position ``(r, s)`` reads the input window *ending* there: the term for
  kernel offset ``(i, j)`` and channel ``t`` is ``K[i, j, t, l] * X[r-i, s-j, t]``,
  with out-of-range input indices contributing zero.
* Accumulation order is pinned: ascending kernel row, then kernel column, then
  input channel, one sequential addition per term. Re-running on the same
  platform is therefore bit-stable, and tests may use exact equality against a
  direct index-summation oracle.

No strides, dilation, bias, FFT or im2col paths: this is the reference
semantics, kept small enough to audit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

__all__ = [
    "FeatureMap",
    "Tensor4",
    "conv",
    "relu",
    "pos_part",
    "neg_part",
    "hadamard",
    "norm_l1",
    "norm_l2",
    "norm_max",
]


def _validated(data, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-D array, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ShapeError(f"all dimensions must be positive, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("tensor entries must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """3-D activation tensor, row-major ``(row, col, channel)``."""

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _validated(self.data, 3))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class Tensor4:
    """4-D kernel stack, row-major ``(row, col, channel, kernel)``."""

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _validated(self.data, 4))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def channels_in(self) -> int:
        return self.data.shape[2]

    @property
    def kernels(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape


def conv(kernel: Tensor4, fmap: FeatureMap) -> FeatureMap:
    """Zero-padded convolution with a trailing receptive window.

    ``out[r, s, l] = sum_{i, j, t} kernel[i, j, t, l] * fmap[r - i, s - j, t]``
    where references outside the input contribute 0. Output shape is
    ``height x width x kernels``.
    """
    if kernel.channels_in != fmap.channels:
        raise ShapeError(
            f"kernel expects {kernel.channels_in} input channels, map has {fmap.channels}"
        )
    height, width = fmap.height, fmap.width
    k, x = kernel.data, fmap.data
    out = np.zeros((height, width, kernel.kernels), dtype=np.float64)
    # Fixed ascending (i, j, t) accumulation; each += adds exactly one term per cell.
    for i in range(min(kernel.rows, height)):
        window_rows = x[: height - i]
        target = out[i:]
        for j in range(min(kernel.cols, width)):
            window = window_rows[:, : width - j]
            block = target[:, j:]
            for t in range(kernel.channels_in):
                block += k[i, j, t, :] * window[:, :, t, None]
    return FeatureMap(out)


def relu(fmap: FeatureMap) -> FeatureMap:
    """Elementwise ``max(0, .)``; 1-Lipschitz in every entry."""
    return FeatureMap(np.maximum(fmap.data, 0.0))


def _rewrap(tensor, data: np.ndarray):
    return type(tensor)(data)


def pos_part(tensor):
    """Entrywise positive part: ``x * 1[x > 0]``. Works on FeatureMap and Tensor4."""
    d = tensor.data
    return _rewrap(tensor, np.where(d > 0.0, d, 0.0))


def neg_part(tensor):
    """Entrywise negative part: ``-x * 1[x < 0]``; nonnegative, support disjoint
    from :func:`pos_part`, and ``x == pos_part(x) - neg_part(x)`` exactly."""
    d = tensor.data
    return _rewrap(tensor, np.where(d < 0.0, -d, 0.0))


def hadamard(a, b):
    """Elementwise product of two tensors of identical type and shape."""
    if type(a) is not type(b):
        raise ShapeError(f"cannot multiply {type(a).__name__} with {type(b).__name__}")
    if a.data.shape != b.data.shape:
        raise ShapeError(f"shape mismatch {a.data.shape} vs {b.data.shape}")
    return _rewrap(a, a.data * b.data)


def _as_array(tensor) -> np.ndarray:
    if isinstance(tensor, np.ndarray):
        return tensor
    return tensor.data


def norm_l1(tensor) -> float:
    return float(np.abs(_as_array(tensor)).sum())


def norm_l2(tensor) -> float:
    return float(np.sqrt((_as_array(tensor) ** 2).sum()))


def norm_max(tensor) -> float:
    arr = _as_array(tensor)
    return float(np.abs(arr).max()) if arr.size else 0.0
