"""Fidelity experiments: base oracle vs its Mimic, fold by fold.

Accuracies are compared with a two-tailed paired t-test; reports follow the
familiar accuracy-table layout (percentages, signed difference, p, ``*``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import betainc
from sklearn.model_selection import StratifiedKFold

from mimicshape.classifiers import ProbabilityOracle
from mimicshape.pipeline import MimicParams, fit_mimic
from mimicshape.shapelets import classify
from mimicshape.tsdata import LabeledDataset

log = logging.getLogger(__name__)

ALPHA = 0.05
CSV_HEADER = "dataset,base_acc,mimic_acc,diff,t,p,significant"

OracleFactory = Callable[[LabeledDataset], ProbabilityOracle]


class TTest(NamedTuple):
    t: float
    p: float

    @property
    def degenerate(self) -> bool:
        """All paired differences equal and non-zero: t is infinite, p forced to 0."""
        return math.isinf(self.t)


def t_sf2(t: float, df: int) -> float:
    """Two-tailed tail probability ``P(|T| >= |t|)`` of Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_ttest(base: Sequence[float], mimic: Sequence[float]) -> TTest:
    base = np.asarray(base, dtype=np.float64)
    mimic = np.asarray(mimic, dtype=np.float64)
    if base.shape != mimic.shape or base.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    n = len(base)
    if n < 2:
        raise ValueError(f"paired t-test needs at least 2 pairs, got {n}")
    d = mimic - base
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TTest(0.0, 1.0)
        return TTest(math.copysign(math.inf, mean), 0.0)
    t = float(mean / (sd / math.sqrt(n)))
    return TTest(t, t_sf2(t, n - 1))


@dataclass
class FoldResult:
    fold: int
    y_true: list[str]
    base_pred: list[str]
    mimic_pred: list[str]

    @property
    def base_acc(self) -> float:
        return _accuracy(self.y_true, self.base_pred)

    @property
    def mimic_acc(self) -> float:
        return _accuracy(self.y_true, self.mimic_pred)


def _accuracy(y, pred) -> float:
    return sum(a == b for a, b in zip(y, pred)) / len(y)


@dataclass
class EvaluationReport:
    dataset: str
    base_acc: float
    mimic_acc: float
    t: float
    p: float
    mode: str = "cv:10"
    folds: list[FoldResult] = field(default_factory=list)

    @property
    def diff(self) -> float:
        return self.mimic_acc - self.base_acc

    @property
    def significant(self) -> bool:
        return self.p < ALPHA

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.t)

    @classmethod
    def from_folds(cls, dataset: str, folds: list[FoldResult], mode: str) -> "EvaluationReport":
        base = [f.base_acc for f in folds]
        mimic = [f.mimic_acc for f in folds]
        if len(folds) >= 2:
            t, p = paired_ttest(base, mimic)
        else:
            # one split: pair per-instance correctness instead of fold accuracies
            f = folds[0]
            t, p = paired_ttest(
                [float(a == b) for a, b in zip(f.y_true, f.base_pred)],
                [float(a == b) for a, b in zip(f.y_true, f.mimic_pred)],
            )
        return cls(dataset, float(np.mean(base)), float(np.mean(mimic)), t, p, mode, folds)


def mimic_predict(shapes, X) -> list[str]:
    if len(shapes.populated_labels) < 2:
        log.warning("fewer than two labels have shapelets; Mimic predictions count as errors")
        return [""] * len(X)
    return [classify(x, shapes)[0] for x in X]


def run_fold(
    fold: int, train: LabeledDataset, test: LabeledDataset, oracle_factory: OracleFactory, params: MimicParams, threads: int
) -> FoldResult:
    oracle = oracle_factory(train)
    try:
        base = oracle.predict(test.X)
        fit = fit_mimic(train.X, train.labels, oracle, params, threads)
    finally:
        oracle.close()
    return FoldResult(fold, list(test.labels), base, mimic_predict(fit.shapes, test.X))


def stratified_folds(labels: Sequence[str], folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    labels = list(labels)
    counts = {lab: labels.count(lab) for lab in set(labels)}
    small = {lab: n for lab, n in counts.items() if n < folds}
    if small:
        worst = min(counts.values())
        raise ValueError(
            f"classes {sorted(small)} have fewer than {folds} instances; "
            f"use --folds {worst} or fewer"
        )
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(len(labels)), labels))


def cross_validate(
    data: LabeledDataset,
    oracle_factory: OracleFactory,
    params: MimicParams,
    folds: int = 10,
    seed: int = 0,
    threads: int = 1,
) -> EvaluationReport:
    """Stratified k-fold comparison of the oracle and the Mimic fitted to it."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    data = data.normalized()
    results = []
    for k, (tr, te) in enumerate(stratified_folds(data.labels, folds, seed)):
        results.append(run_fold(k, data.subset(tr), data.subset(te), oracle_factory, params, threads))
        log.info("fold %d: base %.4f mimic %.4f", k, results[-1].base_acc, results[-1].mimic_acc)
    return EvaluationReport.from_folds(data.name, results, f"cv:{folds}")


def fixed_split(
    train: LabeledDataset,
    test: LabeledDataset,
    oracle_factory: OracleFactory,
    params: MimicParams,
    threads: int = 1,
) -> EvaluationReport:
    if train.shape != test.shape:
        raise ValueError(f"train shape {train.shape} differs from test shape {test.shape}")
    result = run_fold(0, train.normalized(), test.normalized(), oracle_factory, params, threads)
    return EvaluationReport.from_folds(train.name, [result], "split")


def format_p(p: float, significant: bool) -> str:
    if significant:
        return "<.05"
    return format_p_value(p)


def format_p_value(p: float) -> str:
    if p < 0.0001:
        return "<.0001"
    text = f"{p:.4f}"
    return text[1:] if text.startswith("0") else text


def format_row(name: str, base: float, mimic: float, p: float, significant: bool) -> str:
    diff = round(mimic * 100, 2) - round(base * 100, 2)
    fields = [name, f"{base * 100:.2f}", f"{mimic * 100:.2f}", f"{diff:+.2f}", format_p(p, significant)]
    if significant:
        fields.append("*")
    return "  ".join(fields)


def aggregate(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    if len(reports) == 1:
        r = reports[0]
        return EvaluationReport("Average", r.base_acc, r.mimic_acc, r.t, r.p, r.mode)
    base = [r.base_acc for r in reports]
    mimic = [r.mimic_acc for r in reports]
    t, p = paired_ttest(base, mimic)
    return EvaluationReport("Average", float(np.mean(base)), float(np.mean(mimic)), t, p, reports[0].mode)


def render_report(reports: Sequence[EvaluationReport]) -> tuple[str, str]:
    """Text table and CSV; the last row aggregates across datasets."""
    if not reports:
        raise ValueError("nothing to report")
    modes = sorted({r.mode for r in reports})
    agg = aggregate(reports)
    lines = [f"# mode={','.join(modes)}", "dataset  base  mimic  diff  p  sig"]
    lines.extend(format_row(r.dataset, r.base_acc, r.mimic_acc, r.p, r.significant) for r in reports)
    agg_fields = [
        agg.dataset,
        f"{agg.base_acc * 100:.2f}",
        f"{agg.mimic_acc * 100:.2f}",
        f"{round(agg.mimic_acc * 100, 2) - round(agg.base_acc * 100, 2):+.2f}",
        format_p_value(agg.p),
    ]
    if agg.significant:
        agg_fields.append("*")
    lines.append("  ".join(agg_fields))
    csv_lines = [CSV_HEADER]
    for r in [*reports, agg]:
        csv_lines.append(
            ",".join(
                [
                    r.dataset,
                    f"{r.base_acc * 100:.2f}",
                    f"{r.mimic_acc * 100:.2f}",
                    f"{round(r.mimic_acc * 100, 2) - round(r.base_acc * 100, 2):.2f}",
                    f"{r.t:.4f}",
                    f"{r.p:.6f}",
                    "true" if r.significant else "false",
                ]
            )
        )
    return "\n".join(lines) + "\n", "\n".join(csv_lines) + "\n"
