"""Explain black-box multivariate time-series classifiers with importance-constrained shapelets."""

from mimicshape.classifiers import (
    IntervalForestOracle,
    OneNnDtwOracle,
    ProbabilityOracle,
    SubprocessOracle,
    fit_1nn_dtw,
    fit_interval_forest,
)
from mimicshape.masking import MaskDistribution, MaskSet, apply_mask, enumerate_all_masks, generate_masks
from mimicshape.pipeline import MimicParams, fit_mimic
from mimicshape.saliency import ImportanceMap, estimate_importance, exact_importance, importance_for_all_labels
from mimicshape.shapelets import (
    BinaryMap,
    MimicShape,
    MimicShapeSet,
    Segment,
    binarize,
    classify,
    constrain_and_segment,
    dtw_distance,
    extract_mimicshapes,
)
from mimicshape.tsdata import LabeledDataset, load_dataset, normalize, save_dataset

__all__ = [
    "IntervalForestOracle",
    "OneNnDtwOracle",
    "ProbabilityOracle",
    "SubprocessOracle",
    "fit_1nn_dtw",
    "fit_interval_forest",
    "MaskDistribution",
    "MaskSet",
    "apply_mask",
    "enumerate_all_masks",
    "generate_masks",
    "MimicParams",
    "fit_mimic",
    "ImportanceMap",
    "estimate_importance",
    "exact_importance",
    "importance_for_all_labels",
    "BinaryMap",
    "MimicShape",
    "MimicShapeSet",
    "Segment",
    "binarize",
    "classify",
    "constrain_and_segment",
    "dtw_distance",
    "extract_mimicshapes",
    "LabeledDataset",
    "load_dataset",
    "normalize",
    "save_dataset",
]

__version__ = "0.1.0"
