"""scikit-learn style front ends.

``DilationImputer`` exposes the densifying transform as a stateless
transformer; ``CurriculumDepthRegressor`` wraps the whole training loop
behind fit/predict so the method drops into pipelines, grid search, and
anything else speaking the estimator protocol.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import metrics
from .catalog import enumerate_syllabuses
from .dataset import SampleRecord
from .model import DepthNet
from .pooling import dilate, max_pool2d, mean_pool2d, resize_nearest
from .scheduler import plan_from_catalog
from .training import AugmentConfig, TrainConfig, train
from .validation import check_depth_batch, check_image_batch, check_same_spatial


class DilationImputer(TransformerMixin, BaseEstimator):
    """Impute missing depth by iterated valid-aware max pooling plus
    nearest-neighbor resize.

    Parameters
    ----------
    iterations : pool applications per map (0 = identity).
    kernel_size : square pooling kernel side.
    target_size : output (height, width); None keeps the input size.
    method : "max" (valid-aware) or "mean" (ablation baseline that
        blends invalid zeros).
    """

    def __init__(self, iterations: int = 1, kernel_size: int = 2, target_size=None, method: str = "max"):
        self.iterations = iterations
        self.kernel_size = kernel_size
        self.target_size = target_size
        self.method = method

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        if self.method not in ("max", "mean"):
            raise ValueError(f"method must be 'max' or 'mean', got {self.method!r}")
        pool = max_pool2d if self.method == "max" else mean_pool2d
        batch = check_depth_batch(X, "X")
        out = []
        for m in batch:
            size = tuple(self.target_size) if self.target_size is not None else m.shape
            for _ in range(int(self.iterations)):
                m = pool(m, self.kernel_size)
            out.append(resize_nearest(m, size))
        result = np.stack(out)
        return result if np.asarray(X).ndim != 2 else result[0]


class CurriculumDepthRegressor(RegressorMixin, BaseEstimator):
    """Depth regressor trained through a sparsity curriculum.

    fit(X, y) takes an image batch (N, H, W, 3) and sparse depth maps
    (N, H, W); predict(X) returns dense depth maps. ``curriculum=None``
    trains on the raw sparse maps only (the identity-plan baseline).
    """

    def __init__(
        self,
        curriculum="A",
        min_decrease: float = 0.999,
        patience=50,
        patience_mode: str = "consecutive",
        steps: int = 2000,
        batch_size: int = 16,
        learning_rate: float = 1e-4,
        lr_decay: float = 0.9,
        decay_interval=None,
        loss: str = "l1",
        widths=(8, 16),
        seed: int = 0,
        flip: bool = False,
        advance_on_epoch_end: bool = False,
    ):
        self.curriculum = curriculum
        self.min_decrease = min_decrease
        self.patience = patience
        self.patience_mode = patience_mode
        self.steps = steps
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.decay_interval = decay_interval
        self.loss = loss
        self.widths = widths
        self.seed = seed
        self.flip = flip
        self.advance_on_epoch_end = advance_on_epoch_end

    def fit(self, X, y):
        X = check_image_batch(X)
        y = check_depth_batch(y)
        h, w = check_same_spatial(X, y)
        catalog = enumerate_syllabuses((h, w))
        selection = self.curriculum if self.curriculum is not None else [catalog.identity_index]
        plan = plan_from_catalog(
            catalog,
            selection,
            self.patience,
            self.min_decrease,
            self.patience_mode,
            self.advance_on_epoch_end,
        )
        records = [SampleRecord(f"{i:05d}", y[i], X[i]) for i in range(X.shape[0])]
        model = DepthNet(in_channels=X.shape[3], widths=tuple(self.widths), seed=self.seed)
        config = TrainConfig(
            steps=self.steps,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            lr_decay=self.lr_decay,
            decay_interval=self.decay_interval,
            loss=self.loss,
            seed=self.seed,
            augment=AugmentConfig(flip=True) if self.flip else None,
        )
        result = train(plan, records, model, config)
        self.model_ = result.model
        self.catalog_ = catalog
        self.plan_ = plan
        self.events_ = result.events
        self.train_history_ = list(result.scheduler.train_history)
        self.n_features_in_ = X.shape[1] * X.shape[2] * X.shape[3]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("fit must be called before predict")
        X = check_image_batch(X)
        return self.model_.predict(X, batch_size=self.batch_size).astype(np.float64)

    def score(self, X, y) -> float:
        """Negative RMS over valid pixels (higher is better)."""
        y = check_depth_batch(y)
        pred = self.predict(X)
        reports = [metrics.evaluate(y[i], pred[i]) for i in range(y.shape[0])]
        return -metrics.merge_reports(reports).rms
