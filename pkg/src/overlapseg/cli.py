"""Command line front end: ``segment``, ``concave``, ``gen-synth`` and ``eval``.

Exit codes: 0 success, 1 unreadable input, 2 invalid config, flags or
document schema, 3 failure inside the pipeline.
"""
import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io
from .concave import ConcavePointDetector
from .evaluation import (MatchConfig, match_objects, match_points, pairwise_jsc,
                         pool, point_scores, segmentation_scores)
from .exceptions import ImageReadError, InvalidConfig, PlacementExhausted, SchemaMismatch
from .pipeline import OverlappingObjectSegmenter, PipelineConfig
from .preprocess import extract_components
from .synth import RNG_ALGORITHM, SUPPORTED_OVERLAPS, SynthConfig, generate_image

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
JSC_SWEEP = tuple(round(0.05 * k, 2) for k in range(1, 21))
RHO_SWEEP = tuple(float(k) for k in range(1, 21))


def _fail(code, msg):
    print(f"overlapseg: {msg}", file=sys.stderr)
    return code


def _list_inputs(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(io.IMAGE_SUFFIXES))
        return [os.path.join(path, n) for n in names]
    if not os.path.exists(path):
        raise ImageReadError(f"{path}: no such file or directory")
    return [path]


def _segment_one(args):
    path, cfg, with_timing = args
    image = io.read_image(path)
    t0 = time.perf_counter()
    result = OverlappingObjectSegmenter.from_config(cfg).predict(image)
    elapsed = time.perf_counter() - t0 if with_timing else None
    rec = io.result_record(os.path.basename(path), image.shape, result, elapsed)
    return rec, image, [o.contour for o in result.objects]


def _concave_one(args):
    path, cfg = args[0], args[1]
    image = io.read_image(path)
    detector = ConcavePointDetector()
    points = [detector.detect(c.contour).points
              for c in extract_components(image, cfg.opening_radius, cfg.min_component_area)]
    pts = np.vstack(points) if points else np.empty((0, 2))
    return io.image_record(os.path.basename(path), image.shape[1], image.shape[0], None, pts)


def _run_batch(func, jobs, items):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(func, items))
    return [func(it) for it in items]


def _load_config(path):
    return io.read_config(path) if path else PipelineConfig()


def _overlay_path(overlay, image_path, many):
    if not many:
        return overlay
    stem = os.path.splitext(os.path.basename(image_path))[0]
    return os.path.join(overlay, f"{stem}_overlay.png")


def cmd_segment(args):
    try:
        cfg = _load_config(args.config)
    except InvalidConfig as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        paths = _list_inputs(args.input)
        for p in paths:
            io.read_image(p)
    except ImageReadError as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        out = _run_batch(_segment_one, args.jobs, [(p, cfg, args.timings) for p in paths])
    except ImageReadError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except Exception as exc:  # any failure inside the pipeline maps to exit 3
        return _fail(EXIT_INTERNAL, f"pipeline failure: {type(exc).__name__}: {exc}")
    try:
        io.write_json(args.out_json, io.make_document([r for r, _, _ in out]))
        if args.overlay:
            for p, (_, image, contours) in zip(paths, out):
                io.write_image(_overlay_path(args.overlay, p, os.path.isdir(args.input)),
                               io.render_overlay(image, contours))
    except OSError as exc:
        return _fail(EXIT_INTERNAL, f"cannot write output: {exc}")
    return EXIT_OK


def cmd_concave(args):
    try:
        cfg = _load_config(args.config)
    except InvalidConfig as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        paths = _list_inputs(args.input)
        records = _run_batch(_concave_one, args.jobs, [(p, cfg) for p in paths])
    except ImageReadError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except Exception as exc:
        return _fail(EXIT_INTERNAL, f"pipeline failure: {type(exc).__name__}: {exc}")
    try:
        io.write_json(args.out_json, io.make_document(records))
    except OSError as exc:
        return _fail(EXIT_INTERNAL, f"cannot write output: {exc}")
    return EXIT_OK


def cmd_gen_synth(args):
    if not args.unsafe and not any(abs(args.overlap - s) < 1e-9 for s in SUPPORTED_OVERLAPS):
        supported = ", ".join(f"{s:.2f}" for s in SUPPORTED_OVERLAPS)
        return _fail(EXIT_CONFIG, f"--overlap must be one of {supported} (or pass --unsafe)")
    try:
        cfg = SynthConfig(image_width=args.width, image_height=args.height,
                          objects_per_image=args.objects, images_per_subset=args.images,
                          max_overlap=args.overlap, seed=args.seed)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    if args.images < 1 or args.objects < 1:
        return _fail(EXIT_CONFIG, "--images and --objects must be positive")
    records = []
    try:
        for i in range(cfg.images_per_subset):
            image, truth = generate_image(cfg, i)
            name = f"image_{i:03d}.png"
            io.write_image(os.path.join(args.out_dir, name), image)
            records.append(io.ground_truth_record(name, truth))
    except PlacementExhausted as exc:
        return _fail(EXIT_INTERNAL, f"placement failed: {exc}")
    except OSError as exc:
        return _fail(EXIT_INTERNAL, f"cannot write output: {exc}")
    doc = io.make_document(records, generator=RNG_ALGORITHM, seed=cfg.seed,
                           max_overlap=cfg.max_overlap, objects_per_image=cfg.objects_per_image,
                           axis_min=cfg.axis_min, axis_max=cfg.axis_max)
    io.write_json(os.path.join(args.out_dir, "ground_truth.json"), doc)
    return EXIT_OK


def _pair_records(pred, gt):
    by_name = {r["image"]: r for r in pred["images"]}
    if set(by_name) != {r["image"] for r in gt["images"]}:
        missing = sorted({r["image"] for r in gt["images"]} ^ set(by_name))
        raise SchemaMismatch(f"image sets differ: {', '.join(missing[:5])}")
    pairs = []
    for g in gt["images"]:
        p = by_name[g["image"]]
        if (p["width"], p["height"]) != (g["width"], g["height"]):
            raise SchemaMismatch(f"{g['image']}: canvas sizes differ")
        pairs.append((p, g))
    return pairs


def _pts(rec):
    return np.asarray(rec["concave_points"], dtype=float).reshape(-1, 2)


def _scores_json(s):
    d = s.as_dict()
    return {k: (round(float(v), 6) + 0.0 if isinstance(v, float) else v) for k, v in d.items()}


def evaluate_documents(pred, gt, cfg=MatchConfig(), sweep=False):
    """Score a prediction document against ground truth; returns a JSON-ready dict."""
    pairs = _pair_records(pred, gt)
    with_objects = all("objects" in p and "objects" in g for p, g in pairs)
    point_list, object_list, jsc_tables, per_image = [], [], [], []
    for p, g in pairs:
        ps = point_scores(_pts(p), _pts(g), cfg.dist_threshold_rho1)
        point_list.append(ps)
        entry = {"image": g["image"], "concave_points": _scores_json(ps)}
        if with_objects:
            pm, gm = io.object_masks(p), io.object_masks(g)
            table = pairwise_jsc(pm, gm)
            jsc_tables.append((table, len(pm), len(gm)))
            os_ = segmentation_scores(pm, gm, cfg)
            object_list.append(os_)
            entry["objects"] = _scores_json(os_)
        per_image.append(entry)
    out = {"thresholds": {"dist_threshold_rho1": cfg.dist_threshold_rho1,
                          "jsc_threshold": cfg.jsc_threshold},
           "concave_points": _scores_json(pool(point_list))}
    if with_objects:
        out["objects"] = _scores_json(pool(object_list))
    if sweep:
        out["sweep"] = {"rho1": [], "jsc_threshold": []}
        for rho in RHO_SWEEP:
            tp = sum(len(match_points(_pts(p), _pts(g), rho)[0]) for p, g in pairs)
            out["sweep"]["rho1"].append({"value": rho, "tp": tp})
        if with_objects:
            for t in JSC_SWEEP:
                tp = sum(len(match_objects(table, t)) for table, _, _ in jsc_tables)
                out["sweep"]["jsc_threshold"].append({"value": t, "tp": tp})
    out["per_image"] = per_image
    return out


def _format_table(report):
    lines = [f"{'measure':<16}{'TP':>6}{'FP':>6}{'FN':>6}{'TPR':>8}{'PPV':>8}{'ACC':>8}"
             f"{'AD':>8}{'AJSC':>8}"]
    for key, label in (("concave_points", "concave points"), ("objects", "objects")):
        if key not in report:
            continue
        s = report[key]
        ad = f"{s['ad']:8.3f}" if key == "concave_points" else f"{'-':>8}"
        aj = f"{s['ajsc']:8.3f}" if key == "objects" else f"{'-':>8}"
        lines.append(f"{label:<16}{s['tp']:>6}{s['fp']:>6}{s['fn']:>6}{s['tpr']:8.3f}"
                     f"{s['ppv']:8.3f}{s['acc']:8.3f}{ad}{aj}")
    for name, rows in report.get("sweep", {}).items():
        if rows:
            lines.append(f"TP vs {name}: " + " ".join(f"{r['value']:g}:{r['tp']}" for r in rows))
    return "\n".join(lines)


def cmd_eval(args):
    try:
        cfg = MatchConfig(args.dist_threshold, args.jsc_threshold)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    try:
        pred, gt = io.read_json(args.pred), io.read_json(args.gt)
        report = evaluate_documents(pred, gt, cfg, args.sweep)
    except SchemaMismatch as exc:
        return _fail(EXIT_CONFIG, f"schema mismatch: {exc}")
    except (OSError, UnicodeDecodeError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    print(_format_table(report))
    if args.out_json:
        try:
            io.write_json(args.out_json, {"schema": io.SCHEMA, **report})
        except OSError as exc:
            return _fail(EXIT_INTERNAL, f"cannot write output: {exc}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="overlapseg", description="Segment overlapping convex objects in silhouette images.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("--input", required=True, help="PNG/PGM image or a directory of them")
        p.add_argument("--out-json", required=True, help="output JSON path")
        p.add_argument("--config", help="flat 'key = value' config file")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for directories")

    p = sub.add_parser("segment", help="segment objects and write contours")
    add_input(p)
    p.add_argument("--overlay", help="overlay PNG path (a directory when --input is one)")
    p.add_argument("--timings", action="store_true",
                   help="record per-image runtimes (output is then not reproducible)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("concave", help="detect concave points only")
    add_input(p)
    p.set_defaults(func=cmd_concave)

    p = sub.add_parser("gen-synth", help="generate a synthetic overlapping-ellipse subset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--overlap", type=float, default=0.40)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--objects", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=400)
    p.add_argument("--height", type=int, default=300)
    p.add_argument("--unsafe", action="store_true", help="allow unsupported overlap levels")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="prediction JSON (segment or concave output)")
    p.add_argument("--gt", required=True, help="ground-truth JSON")
    p.add_argument("--jsc-threshold", type=float, default=0.6)
    p.add_argument("--dist-threshold", type=float, default=10.0, help="rho1 in pixels")
    p.add_argument("--sweep", action="store_true", help="report TP counts over threshold sweeps")
    p.add_argument("--out-json", help="machine-readable report path")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be positive")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
