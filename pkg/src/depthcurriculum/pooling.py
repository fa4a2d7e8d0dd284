"""Valid-aware pooling, nearest-neighbor resizing, and sparse-map dilation.

Pooling uses stride = kernel with no padding; trailing rows/columns not
covered by a full window are dropped (floor semantics). Because invalid
pixels are stored as 0, a max-pooled window is valid iff it contains at
least one valid pixel. Dilation is the densifying transform: iterated
max pooling followed by a nearest-neighbor resize back to the target
size.
"""

from __future__ import annotations

import math

import numpy as np

from .depthmap import as_depth_map


class DegeneratePoolError(ValueError):
    """Kernel exceeds the input extent in at least one dimension."""


def _kernel_pair(kernel) -> tuple[int, int]:
    if np.isscalar(kernel):
        kh = kw = int(kernel)
    else:
        kh, kw = (int(k) for k in kernel)
    if kh < 1 or kw < 1:
        raise ValueError(f"kernel must be >= 1 in both dimensions, got ({kh}, {kw})")
    return kh, kw


def pooled_shape(shape: tuple[int, int], kernel) -> tuple[int, int]:
    """Output dims of one non-overlapping pool: floor(in / kernel) per axis."""
    kh, kw = _kernel_pair(kernel)
    return shape[0] // kh, shape[1] // kw


def _pool_windows(depth: np.ndarray, kernel) -> np.ndarray:
    kh, kw = _kernel_pair(kernel)
    h, w = depth.shape
    oh, ow = h // kh, w // kw
    if oh < 1 or ow < 1:
        raise DegeneratePoolError(
            f"kernel ({kh}, {kw}) exceeds input {h}x{w}: pooled output would be {oh}x{ow}"
        )
    return depth[: oh * kh, : ow * kw].reshape(oh, kh, ow, kw)


def max_pool2d(depth: np.ndarray, kernel) -> np.ndarray:
    """Non-overlapping window maximum; invalid zeros never win a window."""
    depth = as_depth_map(depth)
    return _pool_windows(depth, kernel).max(axis=(1, 3))


def mean_pool2d(depth: np.ndarray, kernel) -> np.ndarray:
    """Non-overlapping window mean.

    Zeros (invalid pixels) are included in the average, which drags
    pooled values toward zero on sparse input. That is the known defect
    of mean pooling as an imputation baseline; it is kept here verbatim
    for ablation comparisons.

    Accumulates in window-scan order so results are bit-identical to a
    per-pixel reference loop.
    """
    depth = as_depth_map(depth)
    windows = _pool_windows(depth, kernel)
    kh, kw = windows.shape[1], windows.shape[3]
    total = np.zeros((windows.shape[0], windows.shape[2]))
    for u in range(kh):
        for v in range(kw):
            total += windows[:, u, :, v]
    return total / (kh * kw)


def gaussian_blur(depth: np.ndarray, sigma: float, radius: int | None = None) -> np.ndarray:
    """Separable truncated-Gaussian blur at full resolution (ablation baseline).

    Edge handling replicates border pixels so constant maps stay
    constant. Like mean pooling, it blends invalid zeros into valid
    depths.
    """
    depth = as_depth_map(depth)
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if radius is None:
        radius = max(1, int(math.ceil(3.0 * sigma)))
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(depth, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(depth)
    for i, k in enumerate(kernel):
        out += k * padded[i : i + depth.shape[0], :]
    padded = np.pad(out, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(depth)
    for j, k in enumerate(kernel):
        out += k * padded[:, j : j + depth.shape[1]]
    return out


def resize_nearest(depth: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize to (height, width).

    Samples pixel centers: out[i, j] = in[floor((i+0.5)*in_h/out_h),
    floor((j+0.5)*in_w/out_w)], evaluated in exact integer arithmetic.
    No blending ever occurs, so output values are a subset of input
    values and validity is preserved rather than diluted.
    """
    depth = as_depth_map(depth)
    oh, ow = int(size[0]), int(size[1])
    if oh < 1 or ow < 1:
        raise ValueError(f"target size must be >= 1x1, got ({oh}, {ow})")
    h, w = depth.shape
    if (oh, ow) == (h, w):
        return depth.copy()
    rows = ((2 * np.arange(oh) + 1) * h) // (2 * oh)
    cols = ((2 * np.arange(ow) + 1) * w) // (2 * ow)
    return depth[np.ix_(rows, cols)]


def dilate(depth: np.ndarray, syllabus, size: tuple[int, int]) -> np.ndarray:
    """Densify a sparse map: pool ``syllabus.iterations`` times with the
    syllabus kernel, then resize back to ``size``.

    ``syllabus`` needs only ``iterations`` and ``kernel`` attributes; the
    identity syllabus (0 iterations) reduces to a plain resize.
    """
    out = as_depth_map(depth)
    for _ in range(int(syllabus.iterations)):
        out = max_pool2d(out, syllabus.kernel)
    return resize_nearest(out, size)
