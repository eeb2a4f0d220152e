"""Command-line entry point.

Exit codes: 0 success, 1 validation found violations, 2 usage error,
3 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bag as bag_io
from . import graph as graph_rt
from . import report
from .errors import (BackendError, BoundsError, ConfigError, GenerationError,
                     ParseError, ReplayError, RoadsenseError, UnknownLabel)
from .evaluation import EvalConfig, dump_predictions, evaluate, load_predictions
from .geometry import Frame, draw_rect, read_ppm, write_ppm
from .pipeline import OracleClassifier, OracleDetector, run_two_stage
from .synth import NoiseSpec, color_for, corpus
from .taxonomy import load_taxonomy
from .voc import dataset_stats, iter_annotations, load_manifest, validate_dataset

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _default_seed() -> int:
    return int(os.environ.get("ROADSENSE_SEED", "0"))


def _parse_kv_config(path: Path) -> dict[str, str]:
    """Plain `key = value` lines; '#' starts a comment."""
    cfg: dict[str, str] = {}
    try:
        text = path.read_text("utf-8")
    except OSError as e:
        raise ParseError(f"cannot read config: {e}", path=str(path)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected `key = value`", path=str(path), line=lineno)
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def cmd_stats(args) -> int:
    t = load_taxonomy()
    manifest = load_manifest(args.manifest)
    stats = dataset_stats(manifest, t, min_instances=args.min_instances)
    print(report.stats_json(stats) if args.json else report.stats_text(stats))
    if args.figures:
        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        report.stats_figure(stats, out / "stats.png")
    return EXIT_OK


def cmd_validate(args) -> int:
    t = load_taxonomy()
    manifest = load_manifest(args.manifest)
    violations = validate_dataset(manifest, t)
    for v in violations:
        print(v)
    if violations:
        print(f"{len(violations)} violation(s) found", file=sys.stderr)
        return EXIT_VIOLATIONS
    print("dataset clean")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    t = load_taxonomy()
    manifest = load_manifest(args.manifest)
    preds = load_predictions(args.predictions)
    cfg = EvalConfig(
        iou_threshold=args.iou,
        granularity=args.granularity,
        min_instances_filter=args.min_instances,
        score_floor=args.score_floor,
    )
    result = evaluate(manifest, preds, t, cfg)
    print(report.eval_json(result) if args.json else report.eval_text(result))
    if args.figures:
        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        report.eval_figure(result, out / "eval.png")
    return EXIT_OK


def _build_backends(cfg: dict[str, str], t):
    def _f(key, default):
        return float(cfg.get(key, default))

    seed = int(cfg.get("seed", _default_seed()))
    fixtures_path = cfg.get("fixtures")
    if fixtures_path is None:
        raise ConfigError("pipeline config needs `fixtures = <manifest>`")
    manifest = load_manifest(fixtures_path)
    fixtures = {ann.filename: ann for _, ann in iter_annotations(manifest, t)}

    det_name = cfg.get("detector", "oracle")
    clf_name = cfg.get("classifier", "oracle")
    if det_name != "oracle":
        raise ConfigError(f"unknown detector backend {det_name!r}")
    if clf_name != "oracle":
        raise ConfigError(f"unknown classifier backend {clf_name!r}")
    noise = NoiseSpec(
        p_drop=_f("p_drop", 0.0),
        jitter=int(cfg.get("jitter", 0)),
        n_fp=int(cfg.get("n_fp", 0)),
        fp_disjoint=cfg.get("fp_disjoint", "true").lower() in ("1", "true", "yes"),
    )
    detector = OracleDetector(fixtures, t, noise, seed)
    classifier = OracleClassifier(fixtures, t, _f("error_rate", 0.0), seed)
    return detector, classifier, _f("score_floor", 0.0)


def _input_frames(args) -> list[Frame]:
    if args.bag:
        frames = []
        for i, payload in enumerate(bag_io.replay_bag(args.bag)):
            tmp = Path(args.out) / f"__bag_{i:05d}.ppm"
            tmp.write_bytes(payload)
            frame = read_ppm(tmp)
            tmp.unlink()
            frames.append(frame)
        return frames
    in_dir = Path(args.input)
    if not in_dir.is_dir():
        raise ParseError(f"input directory not found: {in_dir}")
    return [read_ppm(p) for p in sorted(in_dir.glob("*.ppm"))]


def cmd_run(args) -> int:
    t = load_taxonomy()
    cfg = _parse_kv_config(Path(args.config))
    try:
        detector, classifier, score_floor = _build_backends(cfg, t)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions = []
    for frame in _input_frames(args):
        result = run_two_stage(detector, classifier, frame, t,
                               score_floor=score_floor)
        predictions.extend(result.to_predictions(frame.name or "unknown"))
        if args.annotate:
            arr = frame.to_array().copy()
            for ld in result.detections:
                draw_rect(arr, ld.detection.bbox,
                          color_for(ld.classification.label), thickness=3)
            write_ppm(Frame.from_array(arr, frame.name),
                      out_dir / f"annotated_{frame.name}")
    (out_dir / "predictions.jsonl").write_text(dump_predictions(predictions))
    print(f"wrote {len(predictions)} predictions to {out_dir / 'predictions.jsonl'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    g = graph_rt.build_graph(args.config)
    if args.latency:
        for spec in args.latency:
            name, _, ms = spec.partition("=")
            node = next((n for n in g.nodes if n.name == name), None)
            if node is None:
                print(f"error: unknown node {name!r}", file=sys.stderr)
                return EXIT_USAGE
            node.latency_ms = float(ms)
    if args.bag:
        source = bag_io.replay_bag(args.bag)
    else:
        source = (f"frame-{i}".encode() for i in range(max(args.frames, 1)))
    tap = None
    writer = None
    if args.record:
        writer = bag_io.BagWriter(args.record, list(g.topics))
        def tap(topic, ts, payload):
            if isinstance(payload, bytes):
                writer.write(topic, ts, payload)
    try:
        result = graph_rt.run(g, source, args.frames, mode=args.mode,
                              warmup=args.warmup, tap=tap)
    finally:
        if writer is not None:
            writer.close()
    print(report.bench_json(result) if args.json else report.bench_text(result))
    if args.figures:
        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        report.bench_figure(result, out / "bench.png")
    return EXIT_OK


def cmd_synth(args) -> int:
    t = load_taxonomy()
    targets: dict[str, tuple[int, int]] = {}
    try:
        text = Path(args.targets).read_text("utf-8")
    except OSError as e:
        raise ParseError(f"cannot read targets: {e}", path=str(args.targets)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("expected `superclass<TAB>train<TAB>test`",
                             path=str(args.targets), line=lineno)
        targets[parts[0]] = (int(parts[1]), int(parts[2]))
    try:
        w, h = (int(v) for v in args.image_size.split("x"))
    except ValueError:
        print(f"error: bad --image-size {args.image_size!r}", file=sys.stderr)
        return EXIT_USAGE
    manifest = corpus(targets, args.out, t, seed=args.seed,
                      image_size=(w, h), write_frames=not args.no_frames)
    print(f"wrote corpus manifest {manifest}")
    return EXIT_OK


def cmd_taxonomy(args) -> int:
    print(load_taxonomy().to_tsv(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadsense",
        description="Traffic-sign/light detection toolkit: dataset statistics, "
                    "IoU/F1 evaluation, two-stage pipeline runs and pub/sub "
                    "throughput benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics from a manifest")
    p.add_argument("manifest")
    p.add_argument("--min-instances", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--figures", metavar="DIR")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="collect dataset violations")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="match predictions and report P/R/F1")
    p.add_argument("manifest")
    p.add_argument("predictions")
    p.add_argument("--iou", type=float, default=0.3)
    p.add_argument("--granularity", choices=("fine", "superclass"),
                   default="fine")
    p.add_argument("--min-instances", type=int, default=0)
    p.add_argument("--score-floor", type=float, default=0.0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--figures", metavar="DIR")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="run the two-stage pipeline over frames")
    p.add_argument("--config", required=True)
    p.add_argument("--input", help="directory of PPM frames")
    p.add_argument("--bag", help="bag recording to replay as input")
    p.add_argument("--out", required=True)
    p.add_argument("--annotate", action="store_true",
                   help="also write frames with detection boxes burned in")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run the node graph and measure FPS")
    p.add_argument("--config", help="graph config (defaults to the built-in topology)")
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--mode", choices=("blocking", "drop_oldest"),
                   default="blocking")
    p.add_argument("--latency", action="append", metavar="NODE=MS",
                   help="override a node's simulated latency")
    p.add_argument("--warmup", action="store_true",
                   help="exclude the first 10 frames from FPS")
    p.add_argument("--bag", help="bag recording as frame source")
    p.add_argument("--record", metavar="PATH", help="record topics to a bag")
    p.add_argument("--json", action="store_true")
    p.add_argument("--figures", metavar="DIR")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--targets", required=True,
                   help="per-superclass counts: `SC<TAB>train<TAB>test` lines")
    p.add_argument("--out", required=True)
    p.add_argument("--image-size", default="1920x1080")
    p.add_argument("--no-frames", action="store_true",
                   help="write annotations and manifest only")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("taxonomy", help="export the class registry")
    p.set_defaults(func=cmd_taxonomy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run" and not (args.input or args.bag):
        parser.error("run: need --input or --bag")
    try:
        return args.func(args)
    except (ParseError, ReplayError, UnknownLabel, BoundsError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, GenerationError, BackendError, RoadsenseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
