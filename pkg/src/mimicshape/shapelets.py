"""MimicShape extraction and shapelet classification.

Importance maps are thresholded into binary maps, the series is cut at every
zero of the map, and the surviving pieces of each label are clustered under DTW.
Cluster medoids become the label's shapelets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mimicshape import _dtw
from mimicshape.saliency import ImportanceMap

log = logging.getLogger(__name__)

SHAPES_MAGIC = "# mimic-shapes 1"


class ShapeFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        prefix = f"{path}:" if path is not None else ""
        if line is not None:
            prefix += f"{line}: "
        elif prefix:
            prefix += " "
        super().__init__(prefix + message)


def _band(band) -> int:
    return -1 if band is None else int(band)


def _as_channels(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2:
        raise ValueError(f"expected a 1-D or (V, n) sequence, got shape {x.shape}")
    return np.ascontiguousarray(x)


def dtw_distance(a, b, band: int | None = None) -> float:
    """DTW cost between two sequences, univariate ``(n,)`` or multivariate ``(V, n)``.

    Squared-difference local cost (summed over dimensions), unit steps in both
    directions plus the diagonal, and a Sakoe-Chiba band ``|i - j| <= band``
    (``None`` = unconstrained). The accumulated cost is returned without a
    square root.
    """
    a, b = _as_channels(a), _as_channels(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise ValueError("DTW needs non-empty sequences")
    if band is not None:
        if band < 0:
            raise ValueError(f"band radius must be >= 0, got {band}")
        if band < abs(a.shape[1] - b.shape[1]):
            raise ValueError(
                f"band {band} cannot align lengths {a.shape[1]} and {b.shape[1]}"
            )
    return float(_dtw.dtw(a, b, _band(band), np.inf))


@dataclass(frozen=True, eq=False)
class BinaryMap:
    bits: np.ndarray
    thresholds: np.ndarray
    label: str


@dataclass(frozen=True)
class Segment:
    dim: int
    start: int
    values: np.ndarray = field(repr=False)
    instance: int = -1

    @property
    def length(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class MimicShape:
    label: str
    dim: int
    values: np.ndarray
    support: int
    instance: int
    start: int

    @property
    def length(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ExtractionParams:
    quantile: float = 0.5
    k: int = 3
    l_min: int | None = None
    l_max: int | None = None
    band: int | None = None

    def resolve(self, T: int) -> "ExtractionParams":
        """Fill length defaults for series of length ``T`` and validate."""
        l_min = self.l_min if self.l_min is not None else max(3, T // 20)
        l_max = self.l_max if self.l_max is not None else max(l_min, T // 2)
        if not 0.0 <= self.quantile < 1.0:
            raise ValueError(f"quantile must lie in [0, 1), got {self.quantile}")
        if self.k < 1:
            raise ValueError(f"shapelets per label must be >= 1, got {self.k}")
        if l_min < 1 or l_max < l_min:
            raise ValueError(f"need 1 <= lmin <= lmax, got lmin={l_min} lmax={l_max}")
        if self.band is not None and self.band < 0:
            raise ValueError(f"band must be >= 0, got {self.band}")
        return ExtractionParams(self.quantile, self.k, l_min, l_max, self.band)


@dataclass(eq=False)
class MimicShapeSet:
    labels: tuple[str, ...]
    shapes: dict[str, list[MimicShape]]
    params: ExtractionParams

    def __post_init__(self):
        self.labels = tuple(self.labels)
        for lab in self.labels:
            self.shapes.setdefault(lab, [])

    def __iter__(self):
        for lab in self.labels:
            yield from self.shapes[lab]

    def __len__(self) -> int:
        return sum(len(v) for v in self.shapes.values())

    @property
    def populated_labels(self) -> list[str]:
        return [lab for lab in self.labels if self.shapes[lab]]


def binarize(imap: ImportanceMap | np.ndarray, quantile: float = 0.0, label: str | None = None) -> BinaryMap:
    """Keep entries above a per-dimension threshold.

    The threshold of a dimension is the ``quantile`` of its positive entries
    (linear interpolation); ``quantile = 0`` keeps every positive entry.
    """
    if not 0.0 <= quantile < 1.0:
        raise ValueError(f"quantile must lie in [0, 1), got {quantile}")
    values = imap.values if isinstance(imap, ImportanceMap) else np.asarray(imap, dtype=np.float64)
    if label is None:
        label = imap.label if isinstance(imap, ImportanceMap) else ""
    tau = np.zeros(values.shape[0])
    if quantile > 0:
        for v, row in enumerate(values):
            pos = row[row > 0]
            if len(pos):
                tau[v] = np.quantile(pos, quantile)
    bits = (values > tau[:, None]).astype(np.uint8)
    return BinaryMap(bits, tau, label)


def runs(bits_row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of ones as ``(start, length)``."""
    padded = np.concatenate(([0], np.asarray(bits_row, dtype=np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]


def constrain_and_segment(series, bmap: BinaryMap | np.ndarray, l_min: int = 1, instance: int = -1) -> list[Segment]:
    series = np.asarray(series, dtype=np.float64)
    bits = bmap.bits if isinstance(bmap, BinaryMap) else np.asarray(bmap)
    if bits.shape != series.shape:
        raise ValueError(f"map shape {bits.shape} does not match series shape {series.shape}")
    constrained = series * bits
    out = []
    for v in range(series.shape[0]):
        for start, length in runs(bits[v]):
            if length >= l_min:
                out.append(Segment(v, start, constrained[v, start:start + length].copy(), instance))
    return out


def _truncate(seg: Segment, l_max: int) -> Segment:
    if seg.length <= l_max:
        return seg
    off = (seg.length - l_max) // 2
    return Segment(seg.dim, seg.start + off, seg.values[off:off + l_max], seg.instance)


def segment_distances(segments: list[Segment], band: int | None) -> np.ndarray:
    flat = np.concatenate([s.values for s in segments]).astype(np.float64)
    offsets = np.concatenate(([0], np.cumsum([s.length for s in segments]))).astype(np.int64)
    return _dtw.pairwise_dtw_ragged(flat, offsets, _band(band))


def k_medoids(D: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Greedy farthest-point seeding plus one assign/update pass.

    The first medoid is the most central point; each next one is the point
    farthest from the chosen medoids. Ties go to the lowest index. Returns
    ``(medoid index, cluster size)`` pairs.
    """
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=1)))]
    while len(medoids) < min(k, n):
        nearest = D[:, medoids].min(axis=1)
        cand = int(np.argmax(nearest))
        if nearest[cand] <= 0.0:
            break
        medoids.append(cand)
    assign = np.argmin(D[:, medoids], axis=1)
    out = []
    for c in range(len(medoids)):
        members = np.flatnonzero(assign == c)
        cost = D[np.ix_(members, members)].sum(axis=1)
        out.append((int(members[np.argmin(cost)]), len(members)))
    return out


def extract_mimicshapes(X: np.ndarray, y, maps: dict[str, BinaryMap], params: ExtractionParams, labels=None) -> MimicShapeSet:
    """Pool each label's constrained segments and keep DTW medoids per dimension."""
    X = np.asarray(X, dtype=np.float64)
    y = [str(v) for v in y]
    params = params.resolve(X.shape[2])
    labels = tuple(sorted(set(y))) if labels is None else tuple(labels)
    missing = [lab for lab in labels if lab not in maps]
    if missing:
        raise ValueError(f"no binary map for labels {missing}")
    shapes: dict[str, list[MimicShape]] = {}
    for lab in labels:
        segs = []
        for i, (x, yl) in enumerate(zip(X, y)):
            if yl == lab:
                segs.extend(_truncate(s, params.l_max) for s in constrain_and_segment(x, maps[lab], params.l_min, i))
        found = []
        for v in sorted({s.dim for s in segs}):
            pool = [s for s in segs if s.dim == v]
            D = segment_distances(pool, params.band)
            for idx, support in k_medoids(D, params.k):
                s = pool[idx]
                found.append(MimicShape(lab, v, s.values, support, s.instance, s.start))
        if not found:
            log.warning("label %s: no segments survived; it gets no shapelets", lab)
        found.sort(key=lambda s: (-s.support, s.dim, s.instance, s.start))
        shapes[lab] = found
    return MimicShapeSet(labels, shapes, params)


def shapelet_distance(shape: MimicShape, series: np.ndarray, band: int | None) -> float:
    """Best length-normalised DTW match of ``shape`` in its dimension of ``series``."""
    row = np.ascontiguousarray(series[shape.dim], dtype=np.float64)
    lo, hi = _dtw.window_range(shape.length, len(row))
    return float(_dtw.sliding_min_dtw(np.ascontiguousarray(shape.values), row, lo, hi, _band(band)))


def label_scores(series, shapes: MimicShapeSet) -> dict[str, float]:
    series = np.asarray(series, dtype=np.float64)
    scores = {}
    for lab in shapes.labels:
        group = shapes.shapes[lab]
        if not group:
            scores[lab] = math.inf
            continue
        for s in group:
            if s.dim >= series.shape[0]:
                raise ValueError(f"shapelet of label {lab} uses dim {s.dim}; series has {series.shape[0]}")
        scores[lab] = float(np.mean([shapelet_distance(s, series, shapes.params.band) for s in group]))
    return scores


def pick_label(scores: dict[str, float]) -> str:
    best = min(scores.values())
    return min(lab for lab, v in scores.items() if v == best)


def classify(series, shapes: MimicShapeSet) -> tuple[str, dict[str, float]]:
    """Label with the smallest mean shapelet distance; ties go to the first label in sorted order."""
    if len(shapes.populated_labels) < 2:
        raise ValueError(
            f"classification needs shapelets for at least two labels, have {shapes.populated_labels}"
        )
    scores = label_scores(series, shapes)
    return pick_label(scores), scores


def save_shapes(shapes: MimicShapeSet, path) -> None:
    p = shapes.params
    lines = [
        SHAPES_MAGIC,
        f"# labels {' '.join(shapes.labels)}",
        f"# quantile={p.quantile!r} k={p.k} lmin={p.l_min} lmax={p.l_max} band={p.band}",
    ]
    for s in shapes:
        lines.append(f"{s.label} {s.dim} {s.support} {s.start} {s.length} {s.instance}")
        lines.append(" ".join("%.17g" % v for v in s.values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _opt_int(text: str):
    return None if text == "None" else int(text)


def load_shapes(path) -> MimicShapeSet:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != SHAPES_MAGIC:
        raise ShapeFileError(f"missing '{SHAPES_MAGIC}' header", 1, path)
    labels: list[str] = []
    params = ExtractionParams()
    shapes: dict[str, list[MimicShape]] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].split()
        try:
            if body and body[0] == "labels":
                labels = body[1:]
            elif body:
                kv = dict(tok.split("=", 1) for tok in body)
                params = ExtractionParams(
                    float(kv["quantile"]), int(kv["k"]), _opt_int(kv["lmin"]), _opt_int(kv["lmax"]), _opt_int(kv["band"])
                )
        except (KeyError, ValueError):
            raise ShapeFileError("bad parameter comment", i + 1, path) from None
        i += 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        head = lines[i].split()
        if len(head) != 6:
            raise ShapeFileError("shapelet header must be 'label dim support start length instance'", i + 1, path)
        try:
            label = head[0]
            dim, support, start, length, inst = (int(t) for t in head[1:])
        except ValueError:
            raise ShapeFileError("non-integer field in shapelet header", i + 1, path) from None
        if i + 1 >= len(lines):
            raise ShapeFileError("missing value line", i + 2, path)
        try:
            values = np.array([float(t) for t in lines[i + 1].split()])
        except ValueError:
            raise ShapeFileError("bad number in value line", i + 2, path) from None
        if len(values) != length or length < 1:
            raise ShapeFileError(f"value line has {len(values)} values, header says {length}", i + 2, path)
        if dim < 0 or support < 1:
            raise ShapeFileError("dim must be >= 0 and support >= 1", i + 1, path)
        shapes.setdefault(label, []).append(MimicShape(label, dim, values, support, inst, start))
        if label not in labels:
            labels.append(label)
        i += 2
    return MimicShapeSet(tuple(labels), shapes, params)
