"""Importance maps from masked probing.

For a label ``l`` the importance of coordinate ``b`` is the expected oracle score
for ``l`` given that ``b`` stays visible. With masks ``M_i`` drawn with keep
probability ``p`` it is estimated as::

    I(b) = 1 / (p * N) * sum_i score_l(x * M_i) * M_i(b)

and computed exactly by weighting every enumerated mask with ``P(M = m)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mimicshape.classifiers import ProbabilityOracle, check_distribution
from mimicshape.masking import MaskDistribution, MaskSet, enumerate_all_masks

PROBE_CHUNK = 128


@dataclass(frozen=True, eq=False)
class ImportanceMap:
    values: np.ndarray
    label: str
    n_samples: int
    distribution: MaskDistribution
    preclamp_max: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def probe_scores(series: np.ndarray, oracle: ProbabilityOracle, masks: MaskSet, threads: int = 1) -> np.ndarray:
    """Oracle distribution for every masked copy of ``series``: ``(N, len(labels))``.

    One oracle row per mask. Chunks may run on several threads; each chunk writes
    only its own rows, so the result does not depend on scheduling.
    """
    series = np.asarray(series, dtype=np.float64)
    if tuple(masks.shape) != series.shape:
        raise ValueError(f"mask shape {masks.shape} does not match series shape {series.shape}")
    N = len(masks)
    n_labels = len(oracle.labels)
    out = np.empty((N, n_labels))

    def run(start: int) -> None:
        stop = min(start + PROBE_CHUNK, N)
        P = oracle.predict_proba_batch(series[None] * masks.bits[start:stop])
        out[start:stop] = check_distribution(P, n_labels, offset=start)

    starts = range(0, N, PROBE_CHUNK)
    if threads > 1 and oracle.concurrent and N > PROBE_CHUNK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return out


def _weighted_mask_sum(weights: np.ndarray, bits: np.ndarray) -> np.ndarray:
    # fixed mask-index order: bit-identical whatever produced the weights
    acc = np.zeros(bits.shape[1:])
    for w, m in zip(weights, bits):
        if w != 0.0:
            acc += w * m
    return acc


def _make_map(raw: np.ndarray, label: str, n: int, dist: MaskDistribution) -> ImportanceMap:
    return ImportanceMap(np.clip(raw, 0.0, 1.0), label, n, dist, float(raw.max()))


def _label_index(oracle: ProbabilityOracle, label) -> int:
    try:
        return oracle.labels.index(str(label))
    except ValueError:
        raise KeyError(f"label {label!r} not among oracle labels {oracle.labels}") from None


def maps_from_scores(scores: np.ndarray, labels, masks: MaskSet) -> list[ImportanceMap]:
    N = len(masks)
    p = masks.distribution.p
    return [
        _make_map(_weighted_mask_sum(scores[:, k], masks.bits) / (p * N), lab, N, masks.distribution)
        for k, lab in enumerate(labels)
    ]


def estimate_importance(series, oracle: ProbabilityOracle, label, masks: MaskSet, threads: int = 1) -> ImportanceMap:
    k = _label_index(oracle, label)
    scores = probe_scores(series, oracle, masks, threads)
    return maps_from_scores(scores[:, [k]], [oracle.labels[k]], masks)[0]


def importance_for_all_labels(series, oracle: ProbabilityOracle, masks: MaskSet, threads: int = 1) -> list[ImportanceMap]:
    """One map per oracle label from a single pass of ``len(masks)`` probes."""
    scores = probe_scores(series, oracle, masks, threads)
    return maps_from_scores(scores, oracle.labels, masks)


def exact_importance_all(series, oracle: ProbabilityOracle, dist: MaskDistribution) -> list[ImportanceMap]:
    series = np.asarray(series, dtype=np.float64)
    masks = enumerate_all_masks(dist, series.shape)
    scores = probe_scores(series, oracle, masks)
    out = []
    for k, lab in enumerate(oracle.labels):
        raw = _weighted_mask_sum(scores[:, k] * masks.weights, masks.bits) / dist.p
        out.append(_make_map(raw, lab, len(masks), dist))
    return out


def exact_importance(series, oracle: ProbabilityOracle, label, dist: MaskDistribution) -> ImportanceMap:
    """Importance by full enumeration of the mask distribution (small problems only)."""
    k = _label_index(oracle, label)
    return exact_importance_all(series, oracle, dist)[k]


def class_importance_maps(
    X: np.ndarray,
    y,
    oracle: ProbabilityOracle,
    masks: MaskSet,
    per_class: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> dict[str, ImportanceMap]:
    """Per-label maps averaged over explained training instances of that label.

    ``per_class`` caps how many instances of each class are explained; the
    subset is drawn with ``seed`` and kept in dataset order.
    """
    y = [str(v) for v in y]
    rng = np.random.default_rng(seed)
    out = {}
    for k, lab in enumerate(oracle.labels):
        idx = np.flatnonzero(np.asarray(y, dtype=object) == lab)
        if len(idx) == 0:
            continue
        if per_class is not None and len(idx) > per_class:
            idx = np.sort(rng.choice(idx, size=per_class, replace=False))
        acc = np.zeros(masks.shape)
        top = 0.0
        for i in idx:
            m = estimate_importance_index(X[i], oracle, k, masks, threads)
            acc += m.values
            top = max(top, m.preclamp_max)
        out[lab] = ImportanceMap(acc / len(idx), lab, len(masks), masks.distribution, top)
    return out


def estimate_importance_index(series, oracle, k: int, masks: MaskSet, threads: int = 1) -> ImportanceMap:
    scores = probe_scores(series, oracle, masks, threads)
    return maps_from_scores(scores[:, [k]], [oracle.labels[k]], masks)[0]


def save_map_csv(imap: ImportanceMap, path) -> None:
    d = imap.distribution
    lines = [f"# label={imap.label} N={imap.n_samples} p={d.p!r} w={d.cell_width} seed={d.seed}"]
    lines.extend(",".join("%.17g" % v for v in row) for row in imap.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_map_csv(path) -> ImportanceMap:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith("# "):
        raise ValueError(f"{path}: missing importance-map header")
    meta = dict(tok.split("=", 1) for tok in text[0][2:].split())
    values = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line.strip()])
    dist = MaskDistribution(float(meta["p"]), int(meta["w"]), int(meta["seed"]))
    return ImportanceMap(values, meta["label"], int(meta["N"]), dist, float(values.max()))
