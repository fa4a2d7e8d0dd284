"""Depth PNG I/O and the on-disk dataset layout.

Depth maps are stored as 16-bit single-channel PNGs with
depth = raw / 256 meters and raw 0 marking invalid pixels. A dataset
directory holds ``depth/<id>.png``, optionally ``images/<id>.png``
(8-bit RGB) and ``dense/<id>.png`` (dense reference depth), plus a
manifest ``index.csv`` with columns id,height,width.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .depthmap import MIN_DEPTH, clamp_depth

DEPTH_PNG_SCALE = 256.0

_16BIT_MODES = {"I;16", "I;16B", "I;16L", "I"}


class DepthFormatError(ValueError):
    """A depth PNG violates the storage convention."""


@dataclass
class SampleRecord:
    """One training sample: sparse ground truth plus optional extras."""

    id: str
    ground_truth: np.ndarray
    image: np.ndarray | None = None
    dense_truth: np.ndarray | None = None


def load_depth_png(path) -> np.ndarray:
    """Read a 16-bit depth PNG into a float64 map in meters.

    Raw 0 stays invalid (0.0); everything else is divided by 256 and
    clamped into [MIN_DEPTH, MAX_DEPTH].
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"depth PNG not found: {path}")
    with Image.open(path) as img:
        if img.mode not in _16BIT_MODES:
            if img.getbands() != ("I",) and len(img.getbands()) != 1:
                raise DepthFormatError(
                    f"{path}: expected a single-channel PNG, got {len(img.getbands())} channels (mode {img.mode})"
                )
            raise DepthFormatError(f"{path}: expected 16-bit depth PNG, got bit depth of mode {img.mode}")
        raw = np.asarray(img, dtype=np.uint16)
    return clamp_depth(raw.astype(np.float64) / DEPTH_PNG_SCALE)


def save_depth_png(depth: np.ndarray, path) -> None:
    """Write a depth map as a 16-bit PNG (inverse of load_depth_png up to
    the 1/256 m quantization). Invalid pixels are written as raw 0."""
    depth = clamp_depth(depth)
    raw = np.where(depth >= MIN_DEPTH, np.rint(depth * DEPTH_PNG_SCALE), 0.0)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raw.astype(np.uint16)).save(path)


def load_image_png(path) -> np.ndarray:
    """Read an 8-bit RGB image as float32 in [0, 1], shape (H, W, 3)."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    return rgb / 255.0


def save_image_png(image: np.ndarray, path) -> None:
    """Write an (H, W, 3) image; float inputs are taken as [0, 1]."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image, mode="RGB").save(path)


def write_dataset(records: list[SampleRecord], root) -> None:
    """Materialize records under ``root`` with the standard layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for rec in records:
        save_depth_png(rec.ground_truth, root / "depth" / f"{rec.id}.png")
        if rec.image is not None:
            save_image_png(rec.image, root / "images" / f"{rec.id}.png")
        if rec.dense_truth is not None:
            save_depth_png(rec.dense_truth, root / "dense" / f"{rec.id}.png")
        h, w = rec.ground_truth.shape
        rows.append((rec.id, h, w))
    with open(root / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "height", "width"])
        writer.writerows(rows)


def read_dataset(root, load_images: bool = True) -> list[SampleRecord]:
    """Load a dataset directory back into records, validating the manifest."""
    root = Path(root)
    manifest = root / "index.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"dataset manifest not found: {manifest}")
    records = []
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "height", "width"} <= set(reader.fieldnames):
            raise DepthFormatError(f"{manifest}: manifest must have columns id,height,width")
        for row in reader:
            gt = load_depth_png(root / "depth" / f"{row['id']}.png")
            if gt.shape != (int(row["height"]), int(row["width"])):
                raise DepthFormatError(
                    f"{row['id']}: depth shape {gt.shape} disagrees with manifest "
                    f"({row['height']}, {row['width']})"
                )
            image = None
            image_path = root / "images" / f"{row['id']}.png"
            if load_images and image_path.exists():
                image = load_image_png(image_path)
            dense = None
            dense_path = root / "dense" / f"{row['id']}.png"
            if dense_path.exists():
                dense = load_depth_png(dense_path)
            records.append(SampleRecord(row["id"], gt, image, dense))
    if not records:
        raise DepthFormatError(f"{manifest}: dataset is empty")
    return records
