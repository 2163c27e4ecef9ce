"""Command-line interface: ``mimicshape <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from mimicshape import svg
from mimicshape.classifiers import OracleError, SubprocessOracle, fit_1nn_dtw, fit_interval_forest
from mimicshape.evaluation import cross_validate, fixed_split, render_report
from mimicshape.masking import generate_masks
from mimicshape.pipeline import MimicParams, fit_mimic
from mimicshape.saliency import class_importance_maps, save_map_csv
from mimicshape.shapelets import ShapeFileError, classify, load_shapes, save_shapes
from mimicshape.synthetic import planted_motif_dataset
from mimicshape.tsdata import DataError, ParseError, load_dataset, save_dataset

log = logging.getLogger("mimicshape")

SHAPES_FILE = "mimicshapes.txt"


class UsageError(Exception):
    pass


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", label)


# ---------------------------------------------------------------- arguments


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value file; flags given on the command line win")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="mimic-ts dataset file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="mimic-out", help="output directory")


def _add_oracle_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--oracle",
        default="builtin:1nn-dtw",
        help="builtin:1nn-dtw | builtin:forest | subprocess:<command>",
    )
    p.add_argument("--band", type=int, default=None, help="Sakoe-Chiba radius (default T//10)")
    p.add_argument("--trees", type=int, default=100, help="trees for builtin:forest")
    p.add_argument("--temperature", type=float, default=None, help="softmin temperature for builtin:1nn-dtw")


def _add_mask_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=float, default=0.5, help="mask keep probability")
    p.add_argument("--cell-width", type=int, default=None, help="time steps per mask cell (default T//8)")
    p.add_argument("--masks", type=int, default=2000, help="number of random masks N")
    p.add_argument(
        "--explain-per-class", type=int, default=10, help="training instances explained per class (0 = all)"
    )


def _add_extract_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quantile", type=float, default=0.5)
    p.add_argument("--shapelets-per-label", type=int, default=3)
    p.add_argument("--lmin", type=int, default=None)
    p.add_argument("--lmax", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimicshape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]

    p = sub.add_parser("explain", help="importance-map CSV + SVG heatmap per label", parents=common)
    _add_data_args(p)
    _add_oracle_args(p)
    _add_mask_args(p)

    p = sub.add_parser("extract", help="MimicShape file + SVG per shapelet", parents=common)
    _add_data_args(p)
    _add_oracle_args(p)
    _add_mask_args(p)
    _add_extract_args(p)

    p = sub.add_parser("classify", help="classify series with a MimicShape file", parents=common)
    p.add_argument("--shapes", required=False, help="MimicShape file from 'extract'")
    p.add_argument("--input", required=False, help="mimic-ts file of series to classify")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("evaluate", help="base oracle vs Mimic accuracy report", parents=common)
    _add_data_args(p)
    _add_oracle_args(p)
    _add_mask_args(p)
    _add_extract_args(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--mode", default="cv", choices=["cv", "split"])
    p.add_argument("--test-dataset", help="test file for --mode split (default: companion *_TEST / *.test file)")

    p = sub.add_parser("gen-synthetic", help="write a planted-motif dataset", parents=common)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--dims", type=int, default=3)
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--motif-length", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--jitter", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=False, help="output mimic-ts file")
    return parser


def read_config(path) -> dict[str, str]:
    values = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = val
    return values


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        try:
            conf = read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, val in conf.items():
            if key not in known or key in ("config", "help", "verbose"):
                parser.error(f"unknown config key {key!r}")
            action = known[key]
            try:
                defaults[key] = action.type(val) if action.type else val
            except ValueError:
                parser.error(f"bad value for config key {key!r}: {val!r}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    try:
        validate(args)
    except UsageError as exc:
        parser.error(str(exc))
    return args


def validate(args) -> None:
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    cmd = args.command
    if hasattr(args, "threads"):
        need(args.threads >= 1, "--threads must be >= 1")
    if cmd in ("explain", "extract", "evaluate"):
        need(args.dataset, "--dataset is required")
        need(Path(args.dataset).is_file(), f"dataset {args.dataset} not found")
        need(0 < args.p < 1, "--p must lie in (0, 1)")
        need(args.cell_width is None or args.cell_width >= 1, "--cell-width must be >= 1")
        need(args.masks >= 1, "--masks must be >= 1")
        need(args.explain_per_class >= 0, "--explain-per-class must be >= 0")
        need(args.band is None or args.band >= 0, "--band must be >= 0")
        need(args.trees >= 1, "--trees must be >= 1")
        need(args.temperature is None or args.temperature > 0, "--temperature must be > 0")
        need(args.seed >= 0, "--seed must be >= 0")
        kind = args.oracle.split(":", 1)
        need(
            args.oracle in ("builtin:1nn-dtw", "builtin:forest")
            or (kind[0] == "subprocess" and len(kind) == 2 and kind[1].strip()),
            f"unknown oracle {args.oracle!r}",
        )
    if cmd in ("extract", "evaluate"):
        need(0 <= args.quantile < 1, "--quantile must lie in [0, 1)")
        need(args.shapelets_per_label >= 1, "--shapelets-per-label must be >= 1")
        need(args.lmin is None or args.lmin >= 1, "--lmin must be >= 1")
        need(args.lmax is None or args.lmax >= (args.lmin or 1), "--lmax must be >= --lmin")
    if cmd == "evaluate":
        need(args.folds >= 2, "--folds must be >= 2")
    if cmd == "classify":
        need(args.shapes, "--shapes is required")
        need(args.input, "--input is required")
    if cmd == "gen-synthetic":
        need(args.out, "--out is required")
        need(args.instances >= args.classes >= 1, "need --instances >= --classes >= 1")
        need(args.dims >= 1 and args.length >= 1, "--dims and --length must be >= 1")
        need(1 <= args.motif_length <= args.length, "--motif-length must lie in [1, --length]")
        need(args.noise >= 0, "--noise must be >= 0")
        need(args.jitter >= 0, "--jitter must be >= 0")


# ---------------------------------------------------------------- helpers


def resolve_band(args, T: int) -> int:
    return args.band if args.band is not None else max(1, T // 10)


def mimic_params(args, T: int) -> MimicParams:
    params = MimicParams(
        p=args.p,
        cell_width=args.cell_width,
        n_masks=args.masks,
        seed=args.seed,
        band=resolve_band(args, T),
        per_class=args.explain_per_class or None,
    )
    if hasattr(args, "quantile"):
        params = params.with_(
            quantile=args.quantile, k=args.shapelets_per_label, l_min=args.lmin, l_max=args.lmax
        )
    return params


def oracle_factory(args):
    def make(train):
        band = resolve_band(args, train.shape[1])
        if args.oracle == "builtin:1nn-dtw":
            return fit_1nn_dtw(train, band=band, theta=args.temperature)
        if args.oracle == "builtin:forest":
            return fit_interval_forest(train, trees=args.trees, seed=args.seed)
        return SubprocessOracle(args.oracle.split(":", 1)[1], train.label_set, train.shape)

    return make


def _load(path):
    data = load_dataset(path)
    return data, data.normalized()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands


def cmd_explain(args) -> int:
    _, data = _load(args.dataset)
    params = mimic_params(args, data.shape[1]).validate(data.shape)
    out = _out_dir(args)
    oracle = oracle_factory(args)(data)
    try:
        masks = generate_masks(params.distribution(data.shape[1]), data.shape, params.n_masks)
        maps = class_importance_maps(data.X, data.labels, oracle, masks, params.per_class, params.seed, args.threads)
    finally:
        oracle.close()
    for lab, imap in maps.items():
        save_map_csv(imap, out / f"map_{_safe(lab)}.csv")
        svg.write(out / f"map_{_safe(lab)}.svg", svg.heatmap_svg(imap.values, f"importance for label {lab}"))
        print(f"{lab}: max importance {imap.values.max():.4f} -> {out / f'map_{_safe(lab)}.csv'}")
    return 0


def cmd_extract(args) -> int:
    _, data = _load(args.dataset)
    params = mimic_params(args, data.shape[1]).validate(data.shape)
    out = _out_dir(args)
    oracle = oracle_factory(args)(data)
    try:
        fit = fit_mimic(data.X, data.labels, oracle, params, args.threads)
    finally:
        oracle.close()
    save_shapes(fit.shapes, out / SHAPES_FILE)
    for lab in fit.shapes.labels:
        for i, s in enumerate(fit.shapes.shapes[lab]):
            title = f"label={lab} dim={s.dim} support={s.support} start={s.start} length={s.length}"
            svg.write(out / f"shapelet_{_safe(lab)}_{i}.svg", svg.polyline_svg(s.values, title))
    for lab in fit.shapes.labels:
        print(f"{lab}: {len(fit.shapes.shapes[lab])} shapelets")
    if len(fit.shapes) == 0:
        print("error: no shapelets were extracted for any label", file=sys.stderr)
        return 1
    return 0


def cmd_classify(args) -> int:
    shapes = load_shapes(args.shapes)
    data = load_dataset(args.input).normalized()
    for x in data.X:
        label, scores = classify(x, shapes)
        print(label)
        for lab, score in sorted(
            ((lab, v) for lab, v in scores.items() if shapes.shapes[lab]), key=lambda kv: (kv[1], kv[0])
        ):
            print(f"{lab} {score:.10g}")
    return 0


def companion_test_path(path: Path) -> Path:
    if "_TRAIN" in path.stem:
        return path.with_name(path.name.replace("_TRAIN", "_TEST"))
    return path.with_name(f"{path.stem}.test{path.suffix}")


def cmd_evaluate(args) -> int:
    data = load_dataset(args.dataset)
    params = mimic_params(args, data.shape[1]).validate(data.shape)
    out = _out_dir(args)
    factory = oracle_factory(args)
    if args.mode == "cv":
        report = cross_validate(data, factory, params, args.folds, args.seed, args.threads)
    else:
        test_path = Path(args.test_dataset) if args.test_dataset else companion_test_path(Path(args.dataset))
        if not test_path.is_file():
            print(f"error: test file {test_path} not found", file=sys.stderr)
            return 1
        report = fixed_split(data, load_dataset(test_path), factory, params, args.threads)
    text, csv = render_report([report])
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.csv").write_text(csv, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_gen_synthetic(args) -> int:
    data, motifs = planted_motif_dataset(
        args.instances, args.dims, args.length, args.motif_length, args.noise, args.classes, args.jitter, args.seed
    )
    save_dataset(data, args.out)
    for m in motifs:
        print(f"{m.label} dim={m.dim} start={m.start} length={m.length}")
    return 0


COMMANDS = {
    "explain": cmd_explain,
    "extract": cmd_extract,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "gen-synthetic": cmd_gen_synthetic,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ShapeFileError, DataError, OracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
