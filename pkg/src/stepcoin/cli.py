"""Command-line entry point.

Subcommands: validate | eval-loc | eval-seg | refine | synth | render | serve.
Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error
(including unreadable input files).  STEPCOIN_THREADS caps evaluation
parallelism; outputs are identical for any worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import consistency, metrics, synth
from .annotations import (
    load_annotations,
    load_frame_labels,
    load_proposals,
    segments_to_frame_labels,
)
from .errors import LengthMismatch, StepcoinError, UnknownVideo
from .lexicon import load_lexicon
from .metrics import EvalConfig, evaluate, render_report_table, serialize_report
from .service import serve_forever
from .timeline import render_timeline_ascii, render_timeline_svg

USAGE_ERROR = 2
FAILURE = 1


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("STEPCOIN_THREADS", "1")))
    except ValueError:
        return 1


def _map_proposals(proposal_sets, fn, workers):
    if workers > 1 and len(proposal_sets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(zip((p.video_id for p in proposal_sets), pool.map(fn, proposal_sets)))
    return {p.video_id: fn(p) for p in proposal_sets}


def cmd_validate(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    print(
        f"lexicon: OK ({len(lexicon.domains)} domains, {lexicon.num_tasks} tasks, "
        f"{lexicon.num_steps} steps)"
    )
    annotations = load_annotations(args.annotations, lexicon)
    segments = sum(len(a.segments) for a in annotations)
    print(f"annotations: OK ({len(annotations)} videos, {segments} segments)")
    return 0


def cmd_eval_loc(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    annotations = load_annotations(args.gt, lexicon)
    proposal_sets = load_proposals(args.proposals, lexicon.num_steps)
    workers = _workers()

    localizer = consistency.TaskConsistencyLocalizer(
        gamma=args.gamma,
        top_c=args.top_c,
        nms_threshold=args.nms,
        refine=args.with_tc,
    ).fit(lexicon)

    def detect(pset):
        if len(pset) == 0:
            return []
        return localizer.localize(pset)[1]

    detections = _map_proposals(proposal_sets, detect, workers)
    config = EvalConfig(alphas=tuple(args.alphas))
    report = evaluate(detections, annotations, lexicon, config, workers=workers)

    json_path = args.out_prefix + ".json"
    table_path = args.out_prefix + ".txt"
    with open(json_path, "wb") as handle:
        handle.write(serialize_report(report))
    table = render_report_table(report)
    with open(table_path, "w", encoding="utf-8") as handle:
        handle.write(table)
    sys.stdout.write(table)
    print(f"wrote {json_path} and {table_path}")
    return 0


def cmd_eval_seg(args) -> int:
    annotations = load_annotations(args.gt)
    predictions = load_frame_labels(args.predictions)
    gt_by_video = {a.video_id: a for a in annotations}
    predicted_ids = {p.video_id for p in predictions}
    if predicted_ids != set(gt_by_video):
        missing = sorted(set(gt_by_video) ^ predicted_ids)
        raise UnknownVideo(f"prediction/ground-truth video sets differ: {missing[:3]}")
    correct = 0
    total = 0
    for pred in predictions:
        if abs(pred.fps - args.fps) > 1e-9:
            raise LengthMismatch(
                f"{pred.video_id}: prediction fps {pred.fps} != --fps {args.fps}"
            )
        gt_seq = segments_to_frame_labels(gt_by_video[pred.video_id], args.fps)
        if len(gt_seq) != len(pred):
            raise LengthMismatch(
                f"{pred.video_id}: {len(pred)} predicted frames vs {len(gt_seq)} ground truth"
            )
        correct += int((pred.labels == gt_seq.labels).sum())
        total += len(gt_seq)
    accuracy = correct / total if total else 1.0
    print(f"frame accuracy: {100.0 * accuracy:.2f}")
    return 0


def cmd_refine(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    proposal_sets = load_proposals(args.proposals, lexicon.num_steps)
    localizer = consistency.TaskConsistencyLocalizer(
        gamma=args.gamma, top_c=args.top_c, nms_threshold=args.nms
    ).fit(lexicon)

    def localize(pset):
        if len(pset) == 0:
            return None, []
        return localizer.localize(pset)

    results = _map_proposals(proposal_sets, localize, _workers())
    detections = {vid: dets for vid, (_, dets) in results.items()}
    tasks = {vid: task for vid, (task, _) in results.items()}
    with open(args.out, "wb") as handle:
        handle.write(consistency.serialize_detections(detections, tasks))
    print(f"wrote {args.out}")
    return 0


def cmd_synth(args) -> int:
    if args.config:
        with open(args.config, "rb") as handle:
            doc = json.load(handle)
        noise = synth.NoiseModel(**doc.get("noise", {}))
        shape_raw = doc.get("lexicon_shape", [4, 5, [3, 5]])
        config = synth.SynthConfig(
            seed=int(doc["seed"]),
            num_videos=int(doc["num_videos"]),
            lexicon_shape=(int(shape_raw[0]), int(shape_raw[1]), (int(shape_raw[2][0]), int(shape_raw[2][1]))),
            mean_video_duration=float(doc.get("mean_video_duration", 141.6)),
            mean_segments_per_video=float(doc.get("mean_segments_per_video", 3.91)),
            mean_segment_duration=float(doc.get("mean_segment_duration", 14.91)),
            noise=noise,
        )
    else:
        noise = synth.NoiseModel(
            boundary_jitter_sd=args.jitter_sd,
            score_noise_sd=args.score_noise_sd,
            contamination_rate=args.contamination,
            dropout_rate=args.dropout,
        )
        config = synth.SynthConfig(
            seed=args.seed,
            num_videos=args.videos,
            lexicon_shape=(args.domains, args.tasks_per_domain, (args.steps_min, args.steps_max)),
            mean_video_duration=args.mean_duration,
            mean_segments_per_video=args.mean_segments,
            mean_segment_duration=args.mean_segment_duration,
            noise=noise,
        )
    paths = synth.write_fixture_dir(config, args.out)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def cmd_render(args) -> int:
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    annotations = load_annotations(args.gt, lexicon)
    by_id = {a.video_id: a for a in annotations}
    if args.video not in by_id:
        raise UnknownVideo(f"video '{args.video}' not in ground truth file")
    detections_by_video, _ = consistency.load_detections(args.detections)
    if args.video not in detections_by_video:
        raise UnknownVideo(f"video '{args.video}' not in detections file")
    annotation = by_id[args.video]
    runs = [("detections", detections_by_video[args.video])]
    svg = render_timeline_svg(annotation, runs, lexicon)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(svg)
    sys.stdout.write(render_timeline_ascii(annotation, runs, lexicon))
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    if args.demo:
        from .service_demo import ensure_demo_project

        ensure_demo_project(args.data_dir)
    serve_forever(args.data_dir, args.port, args.host, args.ui_dir)
    return 0


def _alpha_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha list '{text}'") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepcoin",
        description="Instructional-video step localization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a lexicon + annotation file pair")
    p.add_argument("lexicon")
    p.add_argument("annotations")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("eval-loc", help="step localization mAP/mAR report")
    p.add_argument("gt", help="annotation file")
    p.add_argument("proposals", help="proposal file")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--with-tc", action="store_true", help="apply task-consistency refinement")
    p.add_argument("--gamma", type=float, default=consistency.GAMMA_DEFAULT)
    p.add_argument("--top-c", type=int, default=consistency.TOP_C_DEFAULT)
    p.add_argument("--nms", type=float, default=consistency.NMS_THRESHOLD_DEFAULT)
    p.add_argument("--alphas", type=_alpha_list, default=list(metrics.ALPHA_GRID_DEFAULT))
    p.add_argument("--out-prefix", default="report")
    p.set_defaults(handler=cmd_eval_loc)

    p = sub.add_parser("eval-seg", help="action segmentation frame accuracy")
    p.add_argument("gt", help="annotation file")
    p.add_argument("predictions", help="frame label file")
    p.add_argument("--fps", type=float, default=10.0)
    p.set_defaults(handler=cmd_eval_seg)

    p = sub.add_parser("refine", help="run the refinement pipeline, write detections")
    p.add_argument("proposals")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--gamma", type=float, default=consistency.GAMMA_DEFAULT)
    p.add_argument("--top-c", type=int, default=consistency.TOP_C_DEFAULT)
    p.add_argument("--nms", type=float, default=consistency.NMS_THRESHOLD_DEFAULT)
    p.add_argument("--out", default="detections.json")
    p.set_defaults(handler=cmd_refine)

    p = sub.add_parser("synth", help="write a synthetic fixture directory")
    p.add_argument("--config", help="JSON config file (overrides the flags)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--videos", type=int, default=100)
    p.add_argument("--domains", type=int, default=4)
    p.add_argument("--tasks-per-domain", type=int, default=5)
    p.add_argument("--steps-min", type=int, default=3)
    p.add_argument("--steps-max", type=int, default=5)
    p.add_argument("--mean-duration", type=float, default=141.6)
    p.add_argument("--mean-segments", type=float, default=3.91)
    p.add_argument("--mean-segment-duration", type=float, default=14.91)
    p.add_argument("--jitter-sd", type=float, default=0.0)
    p.add_argument("--score-noise-sd", type=float, default=0.0)
    p.add_argument("--contamination", type=float, default=0.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("render", help="render a GT vs detections timeline")
    p.add_argument("gt", help="annotation file")
    p.add_argument("detections", help="detections file")
    p.add_argument("--video", required=True)
    p.add_argument("--lexicon", help="optional; supplies step phrases")
    p.add_argument("--out", required=True, help="SVG output path")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("serve", help="run the annotation backend")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--demo", action="store_true", help="create a demo project if absent")
    p.add_argument("--ui-dir", help="serve the browser client from this directory under /ui")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except StepcoinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
