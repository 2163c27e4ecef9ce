import math
from collections import Counter

import numpy as np
import pytest
from oracles import t_two_tailed_by_integration

from mimicshape.classifiers import fit_1nn_dtw
from mimicshape.evaluation import (
    CSV_HEADER,
    EvaluationReport,
    FoldResult,
    aggregate,
    cross_validate,
    fixed_split,
    format_p_value,
    format_row,
    paired_ttest,
    render_report,
    stratified_folds,
    t_sf2,
)
from mimicshape.pipeline import MimicParams
from mimicshape.synthetic import planted_motif_dataset


@pytest.mark.parametrize("df", range(2, 31))
def test_tail_matches_integration(df):
    for t in (0.0, 0.3, 1.0, 2.0, 2.5, 4.0, 7.5, 10.0, -3.0):
        assert abs(t_sf2(t, df) - t_two_tailed_by_integration(t, df)) <= 1e-6


def test_ttest_examples():
    base = [0.5, 0.5, 0.5, 0.5]
    assert paired_ttest(base, [1.5, -0.5, 1.5, -0.5]) == (0.0, 1.0)
    t, p = paired_ttest([0, 0, 0, 0, 0], [2, 2, 2, 2, 3])
    assert t == pytest.approx(2.2 / (math.sqrt(0.2) / math.sqrt(5)))
    assert round(t, 1) == 11.0
    assert p < 0.001


def test_ttest_degenerate_cases():
    same = paired_ttest([0.8, 0.9, 0.7], [0.8, 0.9, 0.7])
    assert same == (0.0, 1.0) and not same.degenerate
    shifted = paired_ttest([0.5, 0.6], [0.6, 0.7 + 1e-17])
    assert shifted.p == 0.0 and shifted.degenerate and shifted.t > 0
    with pytest.raises(ValueError, match="at least 2"):
        paired_ttest([1.0], [1.0])
    with pytest.raises(ValueError):
        paired_ttest([1.0, 2.0], [1.0])


def test_fold_partition_and_proportions():
    labels = ["a"] * 37 + ["b"] * 23 + ["c"] * 11
    folds = stratified_folds(labels, 10, seed=3)
    seen = np.concatenate([te for _, te in folds])
    assert sorted(seen.tolist()) == list(range(len(labels)))
    total = Counter(labels)
    for tr, te in folds:
        assert set(tr).isdisjoint(te)
        counts = Counter(labels[i] for i in te)
        for lab, n in total.items():
            assert abs(counts[lab] - n * len(te) / len(labels)) <= 1
    again = stratified_folds(labels, 10, seed=3)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_too_few_instances_suggests_fold_count():
    with pytest.raises(ValueError, match="--folds 7"):
        stratified_folds(["a"] * 7 + ["b"] * 30, 10, seed=0)


def test_accuracies_recomputable():
    f = FoldResult(0, list("aabbc"), list("abbbc"), list("aabba"))
    assert f.base_acc == 4 / 5 and f.mimic_acc == 4 / 5
    r = EvaluationReport.from_folds("x", [f, FoldResult(1, ["a", "b"], ["a", "b"], ["a", "a"])], "cv:2")
    assert r.base_acc == pytest.approx((0.8 + 1.0) / 2)
    assert r.mimic_acc == pytest.approx((0.8 + 0.5) / 2)
    assert r.diff == r.mimic_acc - r.base_acc
    assert r.significant == (r.p < 0.05)


def test_identical_predictions_give_zero_difference():
    folds = [FoldResult(k, list("abab"), list("abba"), list("abba")) for k in range(5)]
    r = EvaluationReport.from_folds("same", folds, "cv:5")
    assert r.diff == 0.0 and r.p == 1.0 and not r.significant


def test_split_mode_pairs_instances():
    f = FoldResult(0, list("aaaabbbb"), list("aaaabbbb"), list("aaaabbba"))
    r = EvaluationReport.from_folds("s", [f], "split")
    assert r.mode == "split" and r.p == pytest.approx(t_sf2(-1.0, 7))


def test_reference_row():
    assert format_row("AWR", 0.4732, 0.9494, 0.001, True) == "AWR  47.32  94.94  +47.62  <.05  *"


def test_p_formatting():
    assert format_p_value(0.45441) == ".4544"
    assert format_p_value(1.0) == "1.0000"
    assert format_p_value(0.00001) == "<.0001"
    assert format_row("X", 0.5, 0.5, 0.4544, False) == "X  50.00  50.00  +0.00  .4544"


def test_single_report_aggregate_equals_row():
    r = EvaluationReport("D", 0.9, 0.85, -1.2, 0.26, "cv:10")
    agg = aggregate([r])
    assert (agg.base_acc, agg.mimic_acc, agg.t, agg.p) == (r.base_acc, r.mimic_acc, r.t, r.p)
    text, csv = render_report([r])
    lines = text.splitlines()
    assert lines[0] == "# mode=cv:10"
    assert lines[2] == "D  90.00  85.00  -5.00  .2600"
    assert lines[3] == "Average  90.00  85.00  -5.00  .2600"
    assert csv.splitlines()[0] == CSV_HEADER
    assert csv.splitlines()[1] == "D,90.00,85.00,-5.00,-1.2000,0.260000,false"


def test_aggregate_across_datasets():
    rs = [EvaluationReport(f"d{i}", b, m, 0.0, 1.0) for i, (b, m) in enumerate([(0.8, 0.7), (0.9, 0.95), (0.6, 0.6)])]
    agg = aggregate(rs)
    assert agg.base_acc == pytest.approx(np.mean([0.8, 0.9, 0.6]))
    assert (agg.t, agg.p) == paired_ttest([0.8, 0.9, 0.6], [0.7, 0.95, 0.6])


@pytest.fixture(scope="module")
def tiny():
    data, _ = planted_motif_dataset(n_instances=40, V=2, T=40, motif_length=10, noise=0.05, seed=2)
    return data


TINY_PARAMS = MimicParams(n_masks=100, per_class=3, seed=1)


def test_cross_validate_end_to_end(tiny):
    factory = lambda train: fit_1nn_dtw(train, band=4)  # noqa: E731
    r = cross_validate(tiny, factory, TINY_PARAMS, folds=4, seed=0)
    assert r.mode == "cv:4" and len(r.folds) == 4
    assert sum(len(f.y_true) for f in r.folds) == 40
    assert r.base_acc >= 0.9
    again = cross_validate(tiny, factory, TINY_PARAMS, folds=4, seed=0)
    assert render_report([r]) == render_report([again])


def test_fixed_split_mode(tiny):
    train, test = tiny.subset(range(30)), tiny.subset(range(30, 40))
    r = fixed_split(train, test, lambda d: fit_1nn_dtw(d, band=4), TINY_PARAMS)
    assert r.mode == "split" and len(r.folds[0].y_true) == 10
    assert render_report([r])[0].startswith("# mode=split\n")
