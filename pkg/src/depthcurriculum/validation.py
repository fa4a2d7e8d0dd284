"""Input validation helpers for the array-facing API."""

from __future__ import annotations

import numpy as np


def check_depth_batch(y, name: str = "y") -> np.ndarray:
    """Coerce to a (N, H, W) float64 batch of depth maps."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"{name} must be (N, H, W) or (H, W), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if (arr < 0).any():
        raise ValueError(f"{name} contains negative depths")
    return arr


def check_image_batch(X, name: str = "X") -> np.ndarray:
    """Coerce to a (N, H, W, C) float32 batch; uint8 input is rescaled to [0, 1]."""
    arr = np.asarray(X)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"{name} must be (N, H, W, C) or (H, W, C), got shape {arr.shape}")
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / 255.0
    else:
        arr = arr.astype(np.float32)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_spatial(X: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X and y disagree on sample count: {X.shape[0]} vs {y.shape[0]}")
    if X.shape[1:3] != y.shape[1:3]:
        raise ValueError(f"X and y disagree on spatial size: {X.shape[1:3]} vs {y.shape[1:3]}")
    return y.shape[1], y.shape[2]
