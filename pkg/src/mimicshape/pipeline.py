"""End-to-end Mimic fit: masks -> class importance maps -> binary maps -> MimicShapes."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from mimicshape.classifiers import ProbabilityOracle
from mimicshape.masking import MaskDistribution, generate_masks
from mimicshape.saliency import ImportanceMap, class_importance_maps
from mimicshape.shapelets import ExtractionParams, MimicShapeSet, binarize, extract_mimicshapes


@dataclass(frozen=True)
class MimicParams:
    p: float = 0.5
    cell_width: int | None = None
    n_masks: int = 2000
    seed: int = 0
    quantile: float = 0.5
    k: int = 3
    l_min: int | None = None
    l_max: int | None = None
    band: int | None = None
    per_class: int | None = 10

    def distribution(self, T: int) -> MaskDistribution:
        w = self.cell_width if self.cell_width is not None else max(1, T // 8)
        return MaskDistribution(self.p, w, self.seed)

    def extraction(self) -> ExtractionParams:
        return ExtractionParams(self.quantile, self.k, self.l_min, self.l_max, self.band)

    def validate(self, shape) -> "MimicParams":
        V, T = shape
        self.distribution(T).check_shape(shape)
        self.extraction().resolve(T)
        if self.n_masks < 1:
            raise ValueError(f"mask count must be >= 1, got {self.n_masks}")
        if self.per_class is not None and self.per_class < 1:
            raise ValueError(f"per-class explanation count must be >= 1, got {self.per_class}")
        return self

    def with_(self, **kw) -> "MimicParams":
        return replace(self, **kw)


@dataclass
class MimicFit:
    shapes: MimicShapeSet
    maps: dict[str, ImportanceMap]


def fit_mimic(X: np.ndarray, y, oracle: ProbabilityOracle, params: MimicParams, threads: int = 1) -> MimicFit:
    """Run the whole extraction on normalized training series ``X`` (n, V, T)."""
    X = np.asarray(X, dtype=np.float64)
    params.validate(X.shape[1:])
    masks = generate_masks(params.distribution(X.shape[2]), X.shape[1:], params.n_masks)
    maps = class_importance_maps(X, y, oracle, masks, params.per_class, params.seed, threads)
    bmaps = {lab: binarize(m, params.quantile) for lab, m in maps.items()}
    shapes = extract_mimicshapes(X, y, bmaps, params.extraction(), labels=oracle.labels)
    return MimicFit(shapes, maps)
