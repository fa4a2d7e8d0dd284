"""Depth raster conventions.

A depth map is a 2D float array of metric depths. Values below
``MIN_DEPTH`` encode missing measurements (stored as exactly 0.0);
valid depths lie in ``[MIN_DEPTH, MAX_DEPTH]``. Storing invalid
pixels as zero lets max pooling operate without a separate mask:
any window containing one valid pixel pools to a valid value.
"""

from __future__ import annotations

import numpy as np

MIN_DEPTH = 1e-3
MAX_DEPTH = 80.0


def as_depth_map(values, copy: bool = False) -> np.ndarray:
    """Validate and return a depth map as a 2D float64 array.

    Raises ValueError for wrong rank, empty axes, or non-finite /
    negative values.
    """
    arr = np.array(values, dtype=np.float64, copy=copy) if copy else np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"depth map must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"depth map axes must be >= 1, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("depth map contains non-finite values")
    if (arr < 0).any():
        raise ValueError("depth map contains negative values")
    return arr


def valid_mask(depth: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels carrying a real measurement."""
    return np.asarray(depth) >= MIN_DEPTH


def density(depth: np.ndarray) -> float:
    """Fraction of valid pixels, in [0, 1]."""
    depth = np.asarray(depth)
    return float(np.count_nonzero(depth >= MIN_DEPTH)) / depth.size


def clamp_depth(depth: np.ndarray) -> np.ndarray:
    """Clamp valid pixels into [MIN_DEPTH, MAX_DEPTH]; zero out the rest.

    Applied once on ingest so every downstream consumer sees a single
    value domain.
    """
    depth = np.asarray(depth, dtype=np.float64)
    valid = depth >= MIN_DEPTH
    return np.where(valid, np.clip(depth, MIN_DEPTH, MAX_DEPTH), 0.0)
