"""Masked-loss training under a curriculum plan.

Each step dilates the batch's sparse ground truth with the scheduler's
current syllabus, takes one optimizer step on the masked loss, and
feeds the loss back to the scheduler. The loss is reduced over valid
target pixels only, so invalid pixels contribute exactly zero to both
the loss value and every gradient component.
"""

from __future__ import annotations

import csv
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import SampleRecord
from .depthmap import MIN_DEPTH
from .model import DepthNet
from .pooling import dilate
from .scheduler import CurriculumPlan, CurriculumScheduler

EVENT_COLUMNS = ("step", "loss", "syllabus_index", "patience_counter", "advanced")


class TrainingDiverged(RuntimeError):
    """A non-finite loss appeared; training aborted with diagnostics."""


def masked_loss_and_grad(pred: np.ndarray, target: np.ndarray, kind: str = "l1"):
    """Loss over valid target pixels and its derivative w.r.t. pred.

    Returns (loss, d_loss/d_pred, n_valid). An all-invalid target batch
    yields loss 0 with an exactly zero gradient.
    """
    target = np.asarray(target, dtype=pred.dtype)
    mask = target >= MIN_DEPTH
    n = int(np.count_nonzero(mask))
    if n == 0:
        return 0.0, np.zeros_like(pred), 0
    diff = np.where(mask, pred - target, 0.0)
    if kind == "l1":
        loss = float(np.abs(diff, dtype=np.float64).sum() / n)
        dpred = np.sign(diff) / n
    elif kind == "l2":
        loss = float(np.square(diff, dtype=np.float64).sum() / n)
        dpred = 2.0 * diff / n
    else:
        raise ValueError(f"loss kind must be 'l1' or 'l2', got {kind!r}")
    return loss, dpred.astype(pred.dtype), n


def loss_and_grad(model: DepthNet, images: np.ndarray, targets: np.ndarray, kind: str = "l1"):
    """Forward + masked loss + hand-derived backward through the model."""
    pred = model.forward(images)
    loss, dpred, n = masked_loss_and_grad(pred, targets, kind)
    if n == 0:
        warnings.warn("batch has no valid target pixels; zero loss and gradients")
        return 0.0, model.zero_gradients()
    return loss, model.backward(dpred)


def lr_at(step: int, base_lr: float, decay: float, decay_interval: int | None) -> float:
    """lr(step) = base_lr * decay**floor(step / decay_interval), exactly."""
    if decay_interval is None:
        return base_lr
    return base_lr * decay ** (step // decay_interval)


def default_decay_interval(total_steps: int) -> int:
    """Scale the reference schedule (decay every 23k steps of a 106k-step
    run) down to the configured budget."""
    return max(1, round(total_steps * 23 / 106))


class Adam:
    """Adam with per-parameter moment accumulators and a stepped
    multiplicative learning-rate decay."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        lr_decay: float = 0.9,
        decay_interval: int | None = None,
    ):
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.lr_decay = lr_decay
        self.decay_interval = decay_interval
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    @property
    def current_lr(self) -> float:
        return lr_at(self.t, self.lr, self.lr_decay, self.decay_interval)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        lr = self.current_lr
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            p -= (lr / bc1) * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.eps)


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugmentConfig:
    flip: bool = True
    rotate_deg: float = 0.0
    crop_scale: float | None = None  # e.g. 0.9 crops to 90% then resizes back


def hflip(raster: np.ndarray) -> np.ndarray:
    return np.flip(raster, axis=1).copy()


def _resize_nearest_any(raster: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    h, w = raster.shape[:2]
    oh, ow = size
    rows = ((2 * np.arange(oh) + 1) * h) // (2 * oh)
    cols = ((2 * np.arange(ow) + 1) * w) // (2 * ow)
    return raster[rows][:, cols]


def rotate_nearest(raster: np.ndarray, degrees: float, fill=0.0) -> np.ndarray:
    """Rotate about the center with nearest-neighbor sampling; pixels that
    fall outside come back as ``fill`` (0 = invalid for depth).
    Rotation by 0 is an exact identity."""
    h, w = raster.shape[:2]
    theta = np.deg2rad(degrees)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rr, cc = np.meshgrid(np.arange(h) - cy, np.arange(w) - cx, indexing="ij")
    src_r = np.rint(np.cos(theta) * rr + np.sin(theta) * cc + cy).astype(np.int64)
    src_c = np.rint(-np.sin(theta) * rr + np.cos(theta) * cc + cx).astype(np.int64)
    inside = (src_r >= 0) & (src_r < h) & (src_c >= 0) & (src_c < w)
    out = np.full_like(raster, fill)
    out[inside] = raster[src_r[inside], src_c[inside]]
    return out


def augment(image: np.ndarray, gt: np.ndarray, config: AugmentConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """One identical geometric transform for an image/ground-truth pair.

    Ground truth only ever moves by permutation or nearest-neighbor
    sampling, so the validity convention survives untouched.
    """
    if config.crop_scale is not None:
        if not 0.0 < config.crop_scale <= 1.0:
            raise ValueError(f"crop_scale must be in (0, 1], got {config.crop_scale}")
        h, w = gt.shape
        ch = max(1, int(round(h * config.crop_scale)))
        cw = max(1, int(round(w * config.crop_scale)))
        top = int(rng.integers(0, h - ch + 1))
        left = int(rng.integers(0, w - cw + 1))
        image = _resize_nearest_any(image[top : top + ch, left : left + cw], (h, w))
        gt = _resize_nearest_any(gt[top : top + ch, left : left + cw], (h, w))
    if config.rotate_deg > 0:
        angle = float(rng.uniform(-config.rotate_deg, config.rotate_deg))
        image = rotate_nearest(image, angle)
        gt = rotate_nearest(gt, angle)
    if config.flip and rng.random() < 0.5:
        image = hflip(image)
        gt = hflip(gt)
    return image, gt


def _sample_rng(seed: int, sample_id: str, epoch: int):
    return np.random.default_rng([seed, zlib.crc32(sample_id.encode()), epoch])


# ---------------------------------------------------------------------------
# the training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    steps: int
    batch_size: int = 16
    learning_rate: float = 1e-4
    lr_decay: float = 0.9
    decay_interval: int | None = None  # None -> default_decay_interval(steps)
    loss: str = "l1"
    seed: int = 0
    augment: AugmentConfig | None = None
    cache_dilations: bool = False


@dataclass(frozen=True)
class StepEvent:
    step: int
    loss: float
    syllabus_index: int
    patience_counter: int
    advanced: bool


@dataclass
class TrainResult:
    model: DepthNet
    optimizer: Adam
    scheduler: CurriculumScheduler
    events: list[StepEvent] = field(default_factory=list)

    @property
    def steps_run(self) -> int:
        return len(self.events)


def train(
    plan: CurriculumPlan,
    records: list[SampleRecord],
    model: DepthNet,
    config: TrainConfig,
    optimizer: Adam | None = None,
) -> TrainResult:
    """Run the curriculum loop until the plan finishes or the step budget
    is exhausted."""
    if not records:
        raise ValueError("training requires at least one sample")
    shapes = {rec.ground_truth.shape for rec in records}
    if len(shapes) != 1:
        raise ValueError(f"inconsistent ground-truth shapes in dataset: {sorted(shapes)}")
    target_size = shapes.pop()
    for rec in records:
        if rec.image is None:
            raise ValueError(f"sample {rec.id} has no image")
    images = np.stack([rec.image for rec in records]).astype(model.dtype)
    gts = [rec.ground_truth for rec in records]
    ids = [rec.id for rec in records]

    if optimizer is None:
        interval = config.decay_interval
        if interval is None:
            interval = default_decay_interval(config.steps)
        optimizer = Adam(
            model.parameters(),
            lr=config.learning_rate,
            lr_decay=config.lr_decay,
            decay_interval=interval,
        )
    scheduler = CurriculumScheduler(plan)
    result = TrainResult(model, optimizer, scheduler)
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    dilation_cache: dict[tuple[int, int], np.ndarray] = {}
    step = 0
    epoch = 0
    n = len(records)
    while step < config.steps and not scheduler.finished:
        order = rng.permutation(n)
        completed_pass = True
        for start in range(0, n, config.batch_size):
            if step >= config.steps or scheduler.finished:
                completed_pass = False
                break
            idx = order[start : start + config.batch_size]
            syllabus_index = scheduler.syllabus_index
            syllabus = scheduler.current_syllabus()
            batch_images = images[idx]
            dilated = np.empty((len(idx),) + target_size, dtype=model.dtype)
            for j, i in enumerate(idx):
                if config.augment is not None:
                    img, gt = augment(images[i], gts[i], config.augment, _sample_rng(config.seed, ids[i], epoch))
                    batch_images[j] = img
                elif config.cache_dilations:
                    key = (int(i), syllabus_index)
                    if key not in dilation_cache:
                        dilation_cache[key] = dilate(gts[i], syllabus, target_size).astype(model.dtype)
                    dilated[j] = dilation_cache[key]
                    continue
                else:
                    gt = gts[i]
                dilated[j] = dilate(gt, syllabus, target_size)
            loss, grads = loss_and_grad(model, batch_images, dilated, config.loss)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss {loss} at step {step} (syllabus {syllabus.label})")
            optimizer.step(params, grads)
            advanced = scheduler.record_loss(loss)
            result.events.append(StepEvent(step, loss, syllabus_index, scheduler.patience_counter, advanced))
            step += 1
        if completed_pass and not scheduler.finished:
            scheduler.epoch_boundary()
        epoch += 1
    return result


def write_event_log(events: list[StepEvent], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_COLUMNS)
        for e in events:
            writer.writerow([e.step, repr(e.loss), e.syllabus_index, e.patience_counter, int(e.advanced)])
