import subprocess
import sys
import textwrap
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from mimicshape.cli import companion_test_path, parse_args
from mimicshape.saliency import load_map_csv
from mimicshape.shapelets import ExtractionParams, MimicShape, MimicShapeSet, load_shapes, save_shapes, shapelet_distance
from mimicshape.synthetic import motif_layout, planted_motif_dataset
from mimicshape.tsdata import LabeledDataset, load_dataset, save_dataset


def run(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "mimicshape.cli", *map(str, args)], capture_output=True, text=True, cwd=cwd
    )


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def clean(work):
    """Noise-free, jitter-free planted motifs: every class instance carries the motif at the same place."""
    path = work / "clean.ts"
    r = run("gen-synthetic", "--instances", 40, "--length", 60, "--motif-length", 12,
            "--noise", 0, "--jitter", 0, "--seed", 1, "--out", path)
    assert r.returncode == 0, r.stderr
    assert r.stdout.splitlines() == ["c0 dim=0 start=39 length=12", "c1 dim=1 start=19 length=12"]
    return path


FAST = ("--masks", 300, "--explain-per-class", 5)


CONSTANT_ORACLE = textwrap.dedent(
    """
    import sys
    V = int(sys.argv[1])
    sys.stdin.readline()
    print("OK 2", flush=True)
    while sys.stdin.readline():
        for _ in range(V):
            sys.stdin.readline()
        print(sys.argv[2], sys.argv[3], flush=True)
    """
)


@pytest.fixture(scope="module")
def constant_script(work):
    path = work / "constant_oracle.py"
    path.write_text(CONSTANT_ORACLE)
    return path


def test_explain_writes_one_csv_and_svg_per_label(clean, work):
    out = work / "explain"
    r = run("explain", "--dataset", clean, *FAST, "--out", out)
    assert r.returncode == 0, r.stderr
    assert sorted(p.name for p in out.iterdir()) == ["map_c0.csv", "map_c0.svg", "map_c1.csv", "map_c1.svg"]
    m = load_map_csv(out / "map_c0.csv")
    assert m.values.shape == (3, 60) and m.n_samples == 300 and m.distribution.cell_width == 7
    for svg in out.glob("*.svg"):
        root = ET.parse(svg).getroot()
        rects = root.findall("{http://www.w3.org/2000/svg}rect")
        assert len(rects) == 3 * 60
        texts = " ".join(t.text for t in root.findall("{http://www.w3.org/2000/svg}text"))
        assert "time" in texts and "dimension" in texts
    again = work / "explain2"
    assert run("explain", "--dataset", clean, *FAST, "--out", again).returncode == 0
    for name in ("map_c0.csv", "map_c1.csv"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_explain_constant_subprocess_oracle(work, constant_script):
    data = LabeledDataset(np.random.default_rng(0).random((4, 2, 16)), ("a", "b", "a", "b"))
    path = work / "small.ts"
    save_dataset(data, path)
    out = work / "explain_const"
    oracle = f"subprocess:{sys.executable} {constant_script} 2 0.3 0.7"
    r = run("explain", "--dataset", path, "--oracle", oracle, "--masks", 20000, "--explain-per-class", 1,
            "--cell-width", 2, "--out", out)
    assert r.returncode == 0, r.stderr
    a, b = load_map_csv(out / "map_a.csv").values, load_map_csv(out / "map_b.csv").values
    assert np.abs(a - 0.3).max() <= 0.02
    assert np.abs(b - 0.7).max() <= 0.02


def test_extract_recovers_planted_motifs(clean, work):
    out = work / "extract"
    r = run("extract", "--dataset", clean, *FAST, "--cell-width", 3, "--lmax", 12, "--out", out)
    assert r.returncode == 0, r.stderr
    shapes = load_shapes(out / "mimicshapes.txt")
    data = load_dataset(clean).normalized()
    for motif in motif_layout(2, 3, 60, 12):
        truth = data.X[data.labels.index(motif.label)][:, motif.start:motif.start + motif.length]
        best = min(
            shapelet_distance(s, truth, shapes.params.band)
            for s in shapes.shapes[motif.label]
            if s.dim == motif.dim and s.length >= motif.length // 2
        )
        assert best <= 0.01, motif.label
    svgs = sorted(out.glob("shapelet_*.svg"))
    assert len(svgs) == len(shapes)
    for svg in svgs:
        root = ET.parse(svg).getroot()
        title = root.find("{http://www.w3.org/2000/svg}title").text
        assert "label=" in title and "dim=" in title and "support=" in title
        assert root.find("{http://www.w3.org/2000/svg}polyline") is not None


def test_extract_warns_for_all_zero_map(work, constant_script):
    data = LabeledDataset(np.random.default_rng(1).random((4, 1, 20)), ("a", "b", "a", "b"))
    path = work / "zero.ts"
    save_dataset(data, path)
    out = work / "extract_zero"
    oracle = f"subprocess:{sys.executable} {constant_script} 1 0 1"
    r = run("extract", "--dataset", path, "--oracle", oracle, "--masks", 50, "--quantile", 0, "--out", out)
    assert r.returncode == 0, r.stderr
    assert "label a" in r.stderr and "WARNING" in r.stderr
    shapes = load_shapes(out / "mimicshapes.txt")
    assert shapes.populated_labels == ["b"]


def test_extract_with_no_shapelets_fails(work, constant_script):
    data = LabeledDataset(np.random.default_rng(1).random((4, 1, 20)), ("a", "b", "a", "b"))
    path = work / "none.ts"
    save_dataset(data, path)
    oracle = f"subprocess:{sys.executable} {constant_script} 1 0 1"
    r = run("extract", "--dataset", path, "--oracle", oracle, "--masks", 50, "--lmin", 20, "--out", work / "none")
    assert r.returncode == 1
    assert "no shapelets" in r.stderr


def test_classify_output(work):
    X = np.random.default_rng(8).uniform(0.6, 1.0, (2, 2, 30))
    X[0, 0, 12:17] = [0.1, 0.5, 0.3, 0.05, 0.4]
    inp = work / "input.ts"
    save_dataset(LabeledDataset(X, ("?", "?")), inp)
    # shapelet A is an exact copy of what classify sees after normalization
    sA = LabeledDataset(X, ("?", "?")).normalized().X[0, 0, 12:17].copy()
    shapes = MimicShapeSet(
        ("A", "B", "C"),
        {"A": [MimicShape("A", 0, sA, 3, 0, 12)], "B": [MimicShape("B", 1, np.full(6, 0.05), 2, 1, 0)]},
        ExtractionParams(0.5, 1, 3, 20, None),
    )
    path = work / "shapes.txt"
    save_shapes(shapes, path)
    r = run("classify", "--shapes", path, "--input", inp)
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    # per series: the label, then one score line per label that has shapelets
    assert len(lines) == 2 * 3
    assert lines[0] == "A"
    assert lines[1] == "A 0"
    label, score = lines[2].split()
    assert label == "B" and float(score) > 0
    assert {ln.split()[0] for ln in lines[4:6]} == {"A", "B"}
    a, b = (float(ln.split()[1]) for ln in lines[4:6])
    assert a <= b


def test_classify_malformed_shapes(work):
    bad = work / "bad_shapes.txt"
    bad.write_text("# mimic-shapes 1\nA 0 1 0 2 0\n0.5 oops\n")
    inp = work / "one.ts"
    save_dataset(LabeledDataset(np.ones((1, 1, 5)), ("x",)), inp)
    r = run("classify", "--shapes", bad, "--input", inp)
    assert r.returncode == 1
    assert f"{bad}:3:" in r.stderr


def test_evaluate_missing_dataset_is_usage_error(work):
    r = run("evaluate", "--dataset", work / "nope.ts")
    assert r.returncode == 2
    assert "not found" in r.stderr


def test_evaluate_split_mode(work):
    data, _ = planted_motif_dataset(n_instances=30, V=2, T=30, motif_length=8, seed=3)
    save_dataset(data.subset(range(20)), work / "toy_TRAIN.ts")
    save_dataset(data.subset(range(20, 30)), work / "toy_TEST.ts")
    out = work / "split"
    r = run("evaluate", "--dataset", work / "toy_TRAIN.ts", "--mode", "split", "--masks", 100,
            "--explain-per-class", 3, "--out", out)
    assert r.returncode == 0, r.stderr
    text = (out / "report.txt").read_text()
    assert text.startswith("# mode=split\n")
    assert (out / "report.csv").read_text().startswith("dataset,base_acc,mimic_acc,diff,t,p,significant\n")


def test_companion_paths():
    assert companion_test_path(Path("d/AWR_TRAIN.ts")) == Path("d/AWR_TEST.ts")
    assert companion_test_path(Path("d/syn.ts")) == Path("d/syn.test.ts")


@pytest.mark.parametrize(
    "flags",
    [
        ["--p", "1.0"],
        ["--p", "0"],
        ["--masks", "0"],
        ["--cell-width", "0"],
        ["--quantile", "1"],
        ["--threads", "0"],
        ["--folds", "1"],
        ["--lmin", "5", "--lmax", "4"],
        ["--oracle", "builtin:svm"],
        ["--band", "-1"],
    ],
)
def test_out_of_domain_values_rejected(clean, flags):
    r = run("evaluate", "--dataset", clean, *flags)
    assert r.returncode == 2, flags
    assert "error" in r.stderr


def test_config_file_and_flag_precedence(clean, work):
    conf = work / "run.conf"
    conf.write_text(f"# comment\ndataset = {clean}\nmasks = 123\nquantile=0.25\n")
    args = parse_args(["extract", "--config", str(conf), "--masks", "77"])
    assert args.dataset == str(clean) and args.masks == 77 and args.quantile == 0.25
    conf.write_text("bogus = 1\n")
    with pytest.raises(SystemExit) as info:
        parse_args(["extract", "--config", str(conf)])
    assert info.value.code == 2
    conf.write_text(f"dataset={clean}\np=2\n")
    with pytest.raises(SystemExit):
        parse_args(["explain", "--config", str(conf)])


def test_bad_dataset_is_runtime_error(work):
    bad = work / "broken.ts"
    bad.write_text("# mimic-ts 1\nnonsense\n")
    r = run("explain", "--dataset", bad, "--out", work / "x")
    assert r.returncode == 1
    assert "broken.ts" in r.stderr
