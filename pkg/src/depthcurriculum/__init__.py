"""Curriculum training for depth regression on sparse ground truth.

The pipeline: enumerate multi-resolution "syllabus" versions of sparse
depth maps (valid-aware max pooling + nearest resize), order them by
complexity, and train through them under a patience/minimum-decrease
policy, finishing on the untouched ground truth.
"""

from .catalog import (
    Catalog,
    SyllabusSpec,
    canonical_catalog_256x512,
    density_profile,
    enumerate_syllabuses,
    select_curriculum,
)
from .dataset import SampleRecord, load_depth_png, read_dataset, save_depth_png, write_dataset
from .depthmap import MAX_DEPTH, MIN_DEPTH, clamp_depth, density, valid_mask
from .estimator import CurriculumDepthRegressor, DilationImputer
from .metrics import MetricReport, evaluate, merge_reports
from .model import DepthNet
from .pooling import dilate, gaussian_blur, max_pool2d, mean_pool2d, resize_nearest
from .scheduler import CurriculumPlan, CurriculumScheduler, plan_from_catalog
from .synthetic import SyntheticSpec, generate_dataset, generate_synthetic
from .training import Adam, AugmentConfig, TrainConfig, TrainResult, augment, train

__version__ = "0.1.0"

__all__ = [
    "MAX_DEPTH",
    "MIN_DEPTH",
    "Adam",
    "AugmentConfig",
    "Catalog",
    "CurriculumDepthRegressor",
    "CurriculumPlan",
    "CurriculumScheduler",
    "DepthNet",
    "DilationImputer",
    "MetricReport",
    "SampleRecord",
    "SyllabusSpec",
    "SyntheticSpec",
    "TrainConfig",
    "TrainResult",
    "augment",
    "canonical_catalog_256x512",
    "clamp_depth",
    "density",
    "density_profile",
    "dilate",
    "enumerate_syllabuses",
    "evaluate",
    "gaussian_blur",
    "generate_dataset",
    "generate_synthetic",
    "load_depth_png",
    "max_pool2d",
    "mean_pool2d",
    "merge_reports",
    "plan_from_catalog",
    "read_dataset",
    "resize_nearest",
    "save_depth_png",
    "select_curriculum",
    "train",
    "valid_mask",
    "write_dataset",
]
