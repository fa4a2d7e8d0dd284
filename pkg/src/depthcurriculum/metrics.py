"""The six standard depth-estimation metrics, over valid pixels only.

With d the ground truth and p the prediction (clamped into the depth
range before anything else), evaluated at the n pixels where d is
valid:

    delta_j  = fraction with max(d/p, p/d) < 1.25**j, j in {1, 2, 3}
    abs_rel  = mean |d - p| / d
    sq_rel   = mean (d - p)**2 / d
    rms      = sqrt(mean (d - p)**2)
    rms_log  = sqrt(mean (ln d - ln p)**2)

sq_rel follows the definition established by the standard KITTI
evaluation code; rms_log uses the natural logarithm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .depthmap import MAX_DEPTH, MIN_DEPTH, valid_mask

CSV_COLUMNS = ("delta1", "delta2", "delta3", "abs_rel", "sq_rel", "rms", "rms_log")

# Published full-scale KITTI Eigen-split results for this training scheme.
# Reference constants only: desk-scale runs do not reproduce them.
FULL_SCALE_REFERENCE = {
    "delta1": 0.940,
    "delta2": 0.990,
    "delta3": 0.997,
    "abs_rel": 0.070,
    "sq_rel": 0.294,
    "rms": 2.923,
    "rms_log": 0.111,
}


class EmptyMaskError(ValueError):
    """No valid ground-truth pixel is available to evaluate on."""


@dataclass(frozen=True)
class MetricReport:
    delta1: float
    delta2: float
    delta3: float
    abs_rel: float
    sq_rel: float
    rms: float
    rms_log: float
    n_valid: int

    def to_row(self) -> list[float]:
        """Values in the conventional column order delta1..3, AbsRel, SqRel, RMS, RMSlog."""
        return [getattr(self, c) for c in CSV_COLUMNS]

    def to_dict(self) -> dict:
        d = {c: getattr(self, c) for c in CSV_COLUMNS}
        d["n_valid"] = self.n_valid
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(gt: np.ndarray, pred: np.ndarray, crop: tuple[int, int, int, int] | None = None) -> MetricReport:
    """Score a prediction against sparse ground truth.

    ``crop`` optionally restricts evaluation to (top, bottom, left,
    right) bounds, half-open. Raises EmptyMaskError when no valid pixel
    remains and ValueError on non-finite predictions.
    """
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gt.shape != pred.shape:
        raise ValueError(f"shape mismatch: gt {gt.shape} vs pred {pred.shape}")
    if not np.isfinite(pred).all():
        raise ValueError("prediction contains non-finite values")
    mask = valid_mask(gt)
    if crop is not None:
        top, bottom, left, right = crop
        region = np.zeros_like(mask)
        region[top:bottom, left:right] = True
        mask &= region
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise EmptyMaskError("no valid ground-truth pixels to evaluate on")
    d = gt[mask]
    p = np.clip(pred[mask], MIN_DEPTH, MAX_DEPTH)
    ratio = np.maximum(d / p, p / d)
    diff = d - p
    sq = diff * diff
    log_diff = np.log(d) - np.log(p)
    return MetricReport(
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25**2)),
        delta3=float(np.mean(ratio < 1.25**3)),
        abs_rel=float(np.mean(np.abs(diff) / d)),
        sq_rel=float(np.mean(sq / d)),
        rms=float(math.sqrt(np.mean(sq))),
        rms_log=float(math.sqrt(np.mean(log_diff * log_diff))),
        n_valid=n,
    )


def merge_reports(reports: list[MetricReport]) -> MetricReport:
    """Pool per-sample reports by exact count-weighted averaging.

    Equivalent to evaluating all pixels as one population: means merge
    weighted by n_valid, with rms and rms_log merged on their squares.
    """
    if not reports:
        raise EmptyMaskError("no reports to merge")
    total = sum(r.n_valid for r in reports)

    def wmean(get):
        return sum(get(r) * r.n_valid for r in reports) / total

    return MetricReport(
        delta1=wmean(lambda r: r.delta1),
        delta2=wmean(lambda r: r.delta2),
        delta3=wmean(lambda r: r.delta3),
        abs_rel=wmean(lambda r: r.abs_rel),
        sq_rel=wmean(lambda r: r.sq_rel),
        rms=math.sqrt(wmean(lambda r: r.rms**2)),
        rms_log=math.sqrt(wmean(lambda r: r.rms_log**2)),
        n_valid=total,
    )
