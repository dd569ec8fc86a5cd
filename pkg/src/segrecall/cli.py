"""Command-line front end: batch decisions, priors, evaluation, losses,
graph classification, and architecture reports over dataset manifests.

Every run that produces files also writes a JSON sidecar recording the full
effective configuration, so results stay reproducible even when defaults
change. Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import archcalc, datasets, decision, fileio, gcn, losses, metrics
from .core import ClassSpec
from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    IndivisibleInputError,
    SegrecallError,
    ShapeMismatchError,
)

# Input-validation failures the user can fix by changing flags or inputs are
# reported as usage errors (2); mid-run data corruption stays a data error (1).
_USAGE_ERRORS = (EmptyInputError, DimensionMismatchError, IndivisibleInputError)


def _sidecar_path(primary) -> Path:
    return Path(str(primary) + ".json")


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _config_dict(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def _pool_map(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_groups(name_or_path: str | None, spec: ClassSpec):
    if name_or_path is None:
        return None
    if name_or_path == "camvid":
        return datasets.camvid_groups()
    if name_or_path == "cityscapes":
        return datasets.cityscapes_groups()
    return metrics.load_group_spec(name_or_path, spec)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_priors(args) -> int:
    manifest = fileio.load_manifest(args.manifest)
    paths = manifest.require_labels()
    if not paths:
        raise EmptyInputError("manifest lists no entries")
    label_maps = _pool_map(
        lambda p: fileio.read_label_map(p, manifest.class_spec), paths, args.jobs
    )
    first = label_maps[0].data.shape
    for p, lm in zip(paths, label_maps):
        if lm.data.shape != first:
            raise ShapeMismatchError(f"{p}: resolution {lm.data.shape} differs from {first}")
    priors = decision.estimate_priors(
        label_maps, manifest.class_spec, sigma=args.sigma, floor=args.floor
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_sft(out, priors.data)
    _write_json(
        _sidecar_path(out),
        {
            "command": "priors",
            "config": _config_dict(args, ("manifest", "sigma", "floor", "seed", "jobs")),
            "manifest_sha256": fileio.sha256_file(args.manifest),
            "class_spec": fileio.class_spec_to_dict(manifest.class_spec),
            "resolution": [priors.height, priors.width],
        },
    )
    return 0


def _read_priors(path) -> decision.PriorsMap:
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise FormatError(f"{path}: missing sidecar {sidecar} with sigma/floor metadata")
    config = fileio.load_json(sidecar).get("config", {})
    if "sigma" not in config or "floor" not in config:
        raise FormatError(f"{sidecar}: sidecar must record sigma and floor")
    data = fileio.read_sft(path)
    return decision.PriorsMap(
        data=data, sigma=float(config["sigma"]), floor=float(config["floor"])
    )


def cmd_decide(args) -> int:
    if args.rule == "ml" and args.priors is None:
        print("error: --rule ml requires --priors", file=sys.stderr)
        return 2
    manifest = fileio.load_manifest(args.probs)
    prob_paths = manifest.require_probs()
    if not prob_paths:
        raise EmptyInputError("manifest lists no entries")
    rule = decision.DecisionRule(
        kind=args.rule, priors=_read_priors(args.priors) if args.rule == "ml" else None
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ignore = manifest.class_spec.ignore_id

    def process(path) -> tuple:
        pm = fileio.read_prob_map(path, manifest.class_spec)
        pred = rule.apply(pm, ignore_id=ignore)
        target = out_dir / (Path(path).stem + ".pgm")
        fileio.write_label_map(target, pred)
        return pm.data.shape[:2], target

    results = _pool_map(process, prob_paths, args.jobs)
    shapes = {shape for shape, _ in results}
    if len(shapes) > 1:
        raise ShapeMismatchError(f"manifest mixes resolutions: {sorted(shapes)}")
    _write_json(
        out_dir / "run.json",
        {
            "command": "decide",
            "config": _config_dict(args, ("probs", "rule", "priors", "out", "seed", "jobs")),
            "outputs": sorted(str(t.name) for _, t in results),
        },
    )
    return 0


def cmd_evaluate(args) -> int:
    spec = fileio.load_class_spec(args.classes)
    groups = _load_groups(args.groups, spec)
    pred_paths = sorted(Path(args.pred).glob("*.pgm"))
    if not pred_paths:
        raise EmptyInputError(f"no .pgm predictions found in {args.pred}")
    gt_dir = Path(args.gt)

    def pair_matrix(pred_path) -> metrics.ConfusionMatrix:
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            raise FormatError(f"no ground truth {gt_path} for prediction {pred_path}")
        pred = fileio.read_label_map(pred_path, spec)
        gt = fileio.read_label_map(gt_path, spec)
        return metrics.accumulate(metrics.ConfusionMatrix.empty(spec.num_classes), pred, gt)

    partials = _pool_map(pair_matrix, pred_paths, args.jobs)
    cm = metrics.ConfusionMatrix.empty(spec.num_classes)
    for part in partials:
        cm = metrics.merge(cm, part)
    report = metrics.summarize(metrics.class_metrics(cm), groups)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(metrics.render_metrics_csv(report, spec.names))
    _write_json(
        _sidecar_path(out),
        {
            "command": "evaluate",
            "config": _config_dict(args, ("pred", "gt", "classes", "groups", "out", "seed", "jobs")),
            "pairs": [p.name for p in pred_paths],
            "total_pixels": cm.total,
        },
    )
    return 0


def cmd_loss(args) -> int:
    if args.loss == "ial" and args.config is None:
        print("error: --loss ial requires --config", file=sys.stderr)
        return 2
    if args.grad_check and args.loss != "ial":
        print("error: --grad-check applies to --loss ial", file=sys.stderr)
        return 2
    spec = fileio.load_class_spec(args.classes)
    p = fileio.read_prob_map(args.probs, spec)
    gt = fileio.read_label_map(args.labels, spec)
    report: dict = {
        "loss": args.loss,
        "config": _config_dict(
            args,
            ("probs", "labels", "classes", "loss", "config", "freqs",
             "smoothing", "grad_check", "out", "seed", "jobs"),
        ),
    }
    if args.loss == "ce":
        report["value"] = losses.cross_entropy(p, gt)
    elif args.loss == "wce":
        if args.freqs is not None:
            freqs = np.asarray(fileio.load_json(args.freqs), dtype=np.float64)
        else:
            freqs = losses.class_pixel_frequencies([gt], spec.num_classes)
        weights = losses.FrequencyWeights(frequencies=freqs, smoothing=args.smoothing)
        report["value"] = losses.cross_entropy(p, gt, weights)
        report["weights"] = [float(v) for v in weights.weights]
    else:
        cfg = losses.load_importance_config(args.config, spec)
        breakdown = losses.ial(p, gt, cfg)
        report["value"] = breakdown.total
        report["group_losses"] = list(breakdown.group_losses)
        report["dynamic_weights"] = list(breakdown.dynamic_weights)
        report["multipliers"] = list(breakdown.multipliers)
        if args.grad_check:
            report["grad_max_rel_error"] = losses.check_gradient(p, gt, cfg)
    # The report embeds the effective config, so it is its own sidecar.
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    return 0


def cmd_gcn(args) -> int:
    spec = fileio.load_class_spec(args.classes)
    graph = gcn.load_graph_spec(args.graph, spec)
    if graph.num_nodes != spec.num_classes:
        raise DimensionMismatchError(
            f"graph has {graph.num_nodes} nodes but the class spec lists {spec.num_classes}"
        )
    weights = gcn.GcnWeights(
        layers=tuple(fileio.read_sft(p) for p in args.weights), leaky_slope=args.slope
    )
    features = fileio.read_sft(args.features)
    if features.ndim != 3:
        raise DimensionMismatchError(f"features must be H*W*D, got rank {features.ndim}")
    node_out = gcn.gcn_forward(gcn.embed_one_hot(spec), graph, weights, symmetric=args.symmetric)
    classifier = gcn.as_classifier(node_out)
    probs = gcn.classify_features(features, classifier)
    labels = decision.decide_bayes(probs, ignore_id=spec.ignore_id)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_prob_map(out_dir / "probs.sft", probs)
    fileio.write_label_map(out_dir / "labels.pgm", labels)
    _write_json(
        out_dir / "run.json",
        {
            "command": "gcn",
            "config": _config_dict(
                args,
                ("features", "graph", "weights", "classes", "slope",
                 "symmetric", "out", "seed", "jobs"),
            ),
        },
    )
    return 0


def cmd_arch(args) -> int:
    if args.variant == "erf":
        try:
            dilations = tuple(int(d) for d in args.dilations.split(","))
        except ValueError:
            print(f"error: --dilations expects integers, got {args.dilations!r}", file=sys.stderr)
            return 2
        variant = archcalc.UdbVariant("erf", dilations=dilations)
    elif args.variant in ("gcnet-late", "gcnet-early"):
        variant = archcalc.UdbVariant(args.variant, kernel=args.kernel)
    else:
        variant = archcalc.UdbVariant("basic")
    try:
        h, w = (int(v) for v in args.input.lower().split("x"))
    except ValueError:
        print(f"error: --input expects HxW, got {args.input!r}", file=sys.stderr)
        return 2
    report = archcalc.report_variant(variant, (h, w), width=args.width)
    sys.stdout.write(archcalc.render_arch_report(report))
    if args.json:
        payload = archcalc.arch_report_to_dict(report)
        payload["config"] = _config_dict(
            args, ("variant", "dilations", "kernel", "input", "width", "seed", "jobs")
        )
        _write_json(args.json, payload)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segrecall",
        description="Decision rules, losses, metrics, and decoder analytics "
        "for high-recall semantic segmentation.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed recorded for randomized helpers")
    common.add_argument("--jobs", type=int, default=1, help="worker pool size for batch steps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("priors", parents=[common], help="estimate spatial class priors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sigma", type=float, default=40.0, help="Gaussian smoothing width in pixels")
    p.add_argument("--floor", type=float, default=1e-5, help="lower cutoff applied after smoothing")
    p.add_argument("--out", required=True, help="output SFT tensor path")
    p.set_defaults(func=cmd_priors)

    p = sub.add_parser("decide", parents=[common], help="run a decision rule over a manifest")
    p.add_argument("--probs", required=True, help="manifest listing probability maps")
    p.add_argument("--rule", required=True, choices=("bayes", "ml"))
    p.add_argument("--priors", help="priors SFT written by the priors command (ml only)")
    p.add_argument("--out", required=True, help="output directory for PGM label maps")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted PGM maps")
    p.add_argument("--gt", required=True, help="directory of ground-truth PGM maps")
    p.add_argument("--classes", required=True, help="class spec JSON")
    p.add_argument("--groups", help="'camvid', 'cityscapes', or a group JSON path")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("loss", parents=[common], help="evaluate a loss on one map pair")
    p.add_argument("--probs", required=True, help="probability map SFT")
    p.add_argument("--labels", required=True, help="ground-truth PGM")
    p.add_argument("--classes", required=True, help="class spec JSON")
    p.add_argument("--loss", required=True, choices=("ce", "wce", "ial"))
    p.add_argument("--config", help="importance config JSON (ial)")
    p.add_argument("--freqs", help="class frequency JSON list (wce); defaults to the label map")
    p.add_argument("--smoothing", type=float, default=1.02, help="frequency smoothing constant")
    p.add_argument("--grad-check", action="store_true", help="compare gradients to finite differences")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gcn", parents=[common], help="classify features via the class graph")
    p.add_argument("--features", required=True, help="H*W*D feature SFT")
    p.add_argument("--graph", required=True, help="graph JSON (adjacency or group rule)")
    p.add_argument("--weights", required=True, nargs="+", help="per-layer SFT matrices")
    p.add_argument("--classes", required=True, help="class spec JSON")
    p.add_argument("--slope", type=float, default=0.01, help="leaky rectifier slope")
    p.add_argument("--symmetric", action="store_true", help="use symmetric normalization")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gcn)

    p = sub.add_parser("arch", parents=[common], help="report decoder-variant shapes/RF/params")
    p.add_argument(
        "--variant", required=True, choices=("basic", "erf", "gcnet-late", "gcnet-early")
    )
    p.add_argument("--dilations", default="1,2,3", help="comma-separated dilations (erf)")
    p.add_argument("--kernel", type=int, default=7, help="large-kernel size (gcnet)")
    p.add_argument("--input", default="768x768", help="input resolution HxW")
    p.add_argument("--width", type=int, default=128, help="decoder width")
    p.add_argument("--json", help="optional JSON report path")
    p.set_defaults(func=cmd_arch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SegrecallError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
