"""Evaluation protocol for step localization and action segmentation.

Localization is scored with temporal IoU: detections are pooled per step
class across videos, ranked by score, and greedily matched one-to-one against
ground truth of the same class and video at each IoU threshold alpha.
Per-class average precision uses all-point interpolation (area under the
monotone precision envelope); average recall is the matched fraction of
ground truth.  mAP/mAR average over classes that have at least one ground
truth instance.  Segmentation is scored by frame accuracy, background
included.

Everything here is a pure function of its inputs; per-class work may be
spread over threads without changing any reported digit.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, BinaryIO, Iterable, Mapping, Sequence

import numpy as np

from .annotations import FrameLabelSequence, Interval, Segment, VideoAnnotation
from .errors import (
    DimensionMismatch,
    LengthMismatch,
    NoGroundTruth,
    ParseError,
    ValidationError,
)
from .lexicon import Lexicon, _parse_json, _read_source

REPORT_FORMAT = "stepcoin-report-v1"
ALPHA_GRID_DEFAULT = (0.1, 0.2, 0.3, 0.4, 0.5)


def temporal_iou(a: Interval, b: Interval) -> float:
    """Intersection over union of two time intervals; 0 when disjoint."""
    intersection = min(a.end, b.end) - max(a.start, b.start)
    if intersection <= 0.0:
        return 0.0
    union = max(a.end, b.end) - min(a.start, b.start)
    return intersection / union


@dataclass(frozen=True)
class EvalConfig:
    """IoU thresholds to evaluate at; must be strictly increasing in (0, 1]."""

    alphas: tuple[float, ...] = ALPHA_GRID_DEFAULT

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ValidationError("alpha grid must not be empty")
        for a in self.alphas:
            if not (0.0 < a <= 1.0):
                raise ValidationError(f"alpha {a} outside (0, 1]")
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValidationError("alphas must be strictly increasing")


@dataclass(frozen=True)
class ClassMetrics:
    ap: float  # percent
    ar: float  # percent


@dataclass(frozen=True)
class AlphaMetrics:
    m_ap: float  # percent
    m_ar: float  # percent
    per_class: dict[int, ClassMetrics]
    per_task: dict[int, float]
    per_domain: dict[int, float]


@dataclass(frozen=True)
class EvalCounts:
    videos: int
    gt_segments: int
    detections: int


@dataclass(frozen=True)
class EvalReport:
    alphas: tuple[float, ...]
    per_alpha: dict[float, AlphaMetrics]
    counts: EvalCounts


def _ranked(detections) -> list:
    """Score-descending order; ties by earlier start then lower step id."""
    return sorted(detections, key=lambda d: (-d.score, d.interval.start, d.step_id))


def match_detections(detections, ground_truth: Sequence[Segment], alpha: float) -> list[bool]:
    """TP/FP flags for detections ranked by :func:`_ranked` order.

    Greedy in score order: a detection is a true positive iff some
    not-yet-matched ground-truth segment of the same class overlaps it with
    IoU >= alpha; the highest-IoU such segment is consumed (equal IoUs resolve
    to the segment earlier by start, then end).
    """
    gts = sorted(ground_truth, key=lambda s: (s.interval.start, s.interval.end, s.step_id))
    available = [True] * len(gts)
    flags = []
    for det in _ranked(detections):
        best_index = -1
        best_iou = 0.0
        for i, gt in enumerate(gts):
            if not available[i] or gt.step_id != det.step_id:
                continue
            iou = temporal_iou(det.interval, gt.interval)
            if iou >= alpha and iou > best_iou:
                best_iou = iou
                best_index = i
        if best_index >= 0:
            available[best_index] = False
            flags.append(True)
        else:
            flags.append(False)
    return flags


def _ap_from_flags(flags: Sequence[bool], num_gt: int) -> float:
    """All-point-interpolated AP from ranked TP/FP flags.

    Equals the area under the monotone precision envelope of the PR curve:
    the envelope precision at each recall step, summed and divided by the
    ground-truth count.
    """
    if not flags:
        return 0.0
    tp = np.asarray(flags, dtype=np.float64)
    precision = np.cumsum(tp) / np.arange(1, len(tp) + 1)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return float(np.sum(envelope[tp == 1.0]) / num_gt)


def average_precision(detections, ground_truth: Sequence[Segment], alpha: float) -> float:
    """Per-class AP; ground truth must be non-empty (all of one class)."""
    if not ground_truth:
        raise NoGroundTruth("average precision undefined for a class with no ground truth")
    return _ap_from_flags(match_detections(detections, ground_truth, alpha), len(ground_truth))


@dataclass(frozen=True)
class _PooledDetection:
    """One detection in the cross-video per-class pool."""

    video_id: str
    interval: Interval
    score: float
    # (gt index, IoU) candidates in this video, best IoU first.
    candidates: tuple[tuple[int, float], ...]


def _pool_class(
    step_id: int,
    detections_by_video: Mapping[str, Iterable],
    gt_by_video: Mapping[str, list[Segment]],
) -> tuple[list[_PooledDetection], int]:
    gt_intervals: dict[str, list[Interval]] = {}
    gt_offsets: dict[str, int] = {}
    total_gt = 0
    for video_id in sorted(gt_by_video):
        intervals = [
            s.interval
            for s in sorted(
                gt_by_video[video_id],
                key=lambda s: (s.interval.start, s.interval.end, s.step_id),
            )
            if s.step_id == step_id
        ]
        if intervals:
            gt_offsets[video_id] = total_gt
            gt_intervals[video_id] = intervals
            total_gt += len(intervals)

    pooled = []
    for video_id in sorted(detections_by_video):
        for det in detections_by_video[video_id]:
            if det.step_id != step_id:
                continue
            candidates = []
            for local_index, gt in enumerate(gt_intervals.get(video_id, ())):
                iou = temporal_iou(det.interval, gt)
                if iou > 0.0:
                    candidates.append((gt_offsets[video_id] + local_index, iou))
            candidates.sort(key=lambda c: (-c[1], c[0]))
            pooled.append(
                _PooledDetection(
                    video_id=video_id,
                    interval=det.interval,
                    score=det.score,
                    candidates=tuple(candidates),
                )
            )
    pooled.sort(key=lambda d: (-d.score, d.video_id, d.interval.start))
    return pooled, total_gt


def _class_ap_ar(
    pooled: list[_PooledDetection], total_gt: int, alpha: float
) -> tuple[float, float]:
    matched = [False] * total_gt
    flags = []
    for det in pooled:
        hit = -1
        for gt_index, iou in det.candidates:
            if iou < alpha:
                break  # candidates sorted by IoU descending
            if not matched[gt_index]:
                hit = gt_index
                break
        if hit >= 0:
            matched[hit] = True
            flags.append(True)
        else:
            flags.append(False)
    ap = _ap_from_flags(flags, total_gt)
    ar = sum(matched) / total_gt
    return ap, ar


def _evaluate_class(
    step_id: int,
    detections_by_video: Mapping[str, Iterable],
    gt_by_video: Mapping[str, list[Segment]],
    alphas: Sequence[float],
) -> dict[float, tuple[float, float]]:
    pooled, total_gt = _pool_class(step_id, detections_by_video, gt_by_video)
    return {alpha: _class_ap_ar(pooled, total_gt, alpha) for alpha in alphas}


def evaluate(
    detections_by_video: Mapping[str, Iterable],
    annotations: Sequence[VideoAnnotation],
    lexicon: Lexicon,
    config: EvalConfig = EvalConfig(),
    workers: int = 1,
) -> EvalReport:
    """Full localization report over an annotated corpus.

    Classes with zero ground truth are excluded from every mean.  ``workers``
    only spreads per-class work over threads; the report is bit-identical for
    any worker count.
    """
    gt_by_video = {a.video_id: list(a.segments) for a in annotations}
    unknown = set(detections_by_video) - set(gt_by_video)
    if unknown:
        raise DimensionMismatch(
            f"detections for videos without annotations: {sorted(unknown)[:3]}"
        )
    classes = sorted(
        {s.step_id for a in annotations for s in a.segments}
    )
    for video_dets in detections_by_video.values():
        for det in video_dets:
            if not (0 <= det.step_id < lexicon.num_steps):
                raise DimensionMismatch(
                    f"detection step id {det.step_id} outside lexicon K={lexicon.num_steps}"
                )

    if workers > 1 and len(classes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda c: _evaluate_class(c, detections_by_video, gt_by_video, config.alphas),
                    classes,
                )
            )
        by_class = dict(zip(classes, results))
    else:
        by_class = {
            c: _evaluate_class(c, detections_by_video, gt_by_video, config.alphas)
            for c in classes
        }

    per_alpha: dict[float, AlphaMetrics] = {}
    for alpha in config.alphas:
        per_class = {
            c: ClassMetrics(ap=100.0 * by_class[c][alpha][0], ar=100.0 * by_class[c][alpha][1])
            for c in classes
        }
        aps = np.array([by_class[c][alpha][0] for c in classes])
        ars = np.array([by_class[c][alpha][1] for c in classes])
        per_task: dict[int, float] = {}
        for task in lexicon.tasks:
            task_classes = [c for c in classes if lexicon.task_of_step(c) == task.id]
            if task_classes:
                per_task[task.id] = 100.0 * float(
                    np.mean([by_class[c][alpha][0] for c in task_classes])
                )
        per_domain: dict[int, float] = {}
        for domain in lexicon.domains:
            domain_classes = [
                c for c in classes if lexicon.domain_of_task(lexicon.task_of_step(c)) == domain.id
            ]
            if domain_classes:
                per_domain[domain.id] = 100.0 * float(
                    np.mean([by_class[c][alpha][0] for c in domain_classes])
                )
        per_alpha[alpha] = AlphaMetrics(
            m_ap=100.0 * float(np.mean(aps)) if classes else 0.0,
            m_ar=100.0 * float(np.mean(ars)) if classes else 0.0,
            per_class=per_class,
            per_task=per_task,
            per_domain=per_domain,
        )

    counts = EvalCounts(
        videos=len(annotations),
        gt_segments=sum(len(a.segments) for a in annotations),
        detections=sum(len(list(d)) for d in detections_by_video.values()),
    )
    return EvalReport(alphas=tuple(config.alphas), per_alpha=per_alpha, counts=counts)


def mean_ap(
    detections_by_video: Mapping[str, Iterable],
    annotations: Sequence[VideoAnnotation],
    alpha: float,
    lexicon: Lexicon,
) -> AlphaMetrics:
    """Single-threshold slice of :func:`evaluate`."""
    report = evaluate(detections_by_video, annotations, lexicon, EvalConfig(alphas=(alpha,)))
    return report.per_alpha[alpha]


def mean_ar(
    detections_by_video: Mapping[str, Iterable],
    annotations: Sequence[VideoAnnotation],
    alpha: float,
    lexicon: Lexicon,
    max_detections: int | None = None,
) -> AlphaMetrics:
    """As :func:`mean_ap`; ``max_detections`` optionally caps how many of a
    video's highest-scored detections are retained before matching."""
    if max_detections is not None:
        detections_by_video = {
            vid: _ranked(dets)[:max_detections]
            for vid, dets in detections_by_video.items()
        }
    report = evaluate(detections_by_video, annotations, lexicon, EvalConfig(alphas=(alpha,)))
    return report.per_alpha[alpha]


def frame_accuracy(predicted: FrameLabelSequence, ground_truth: FrameLabelSequence) -> float:
    """Fraction of frames whose label matches, background included."""
    if len(predicted) != len(ground_truth):
        raise LengthMismatch(
            f"predicted {len(predicted)} frames vs ground truth {len(ground_truth)}"
        )
    if predicted.fps != ground_truth.fps:
        raise LengthMismatch(
            f"predicted fps {predicted.fps} vs ground truth fps {ground_truth.fps}"
        )
    if len(predicted) == 0:
        return 1.0
    return float(np.mean(predicted.labels == ground_truth.labels))


# --- report serialization ---------------------------------------------------


def _alpha_key(alpha: float) -> str:
    return format(alpha, "g")


def serialize_report(report: EvalReport) -> bytes:
    doc: dict[str, Any] = {
        "format": REPORT_FORMAT,
        "alphas": list(report.alphas),
        "counts": {
            "videos": report.counts.videos,
            "gt_segments": report.counts.gt_segments,
            "detections": report.counts.detections,
        },
        "per_alpha": {
            _alpha_key(alpha): {
                "map": slice_.m_ap,
                "mar": slice_.m_ar,
                "per_class": {
                    str(c): {"ap": cm.ap, "ar": cm.ar}
                    for c, cm in sorted(slice_.per_class.items())
                },
                "per_task": {str(t): v for t, v in sorted(slice_.per_task.items())},
                "per_domain": {str(d): v for d, v in sorted(slice_.per_domain.items())},
            }
            for alpha, slice_ in report.per_alpha.items()
        },
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_report(source: bytes | str | os.PathLike | BinaryIO) -> EvalReport:
    doc = _parse_json(_read_source(source), "report")
    if doc.get("format") != REPORT_FORMAT:
        raise ParseError(
            f"report: format key must be '{REPORT_FORMAT}', got {doc.get('format')!r}"
        )
    try:
        alphas = tuple(float(a) for a in doc["alphas"])
        counts = EvalCounts(
            videos=int(doc["counts"]["videos"]),
            gt_segments=int(doc["counts"]["gt_segments"]),
            detections=int(doc["counts"]["detections"]),
        )
        per_alpha = {}
        for alpha in alphas:
            raw = doc["per_alpha"][_alpha_key(alpha)]
            per_alpha[alpha] = AlphaMetrics(
                m_ap=float(raw["map"]),
                m_ar=float(raw["mar"]),
                per_class={
                    int(c): ClassMetrics(ap=float(v["ap"]), ar=float(v["ar"]))
                    for c, v in raw["per_class"].items()
                },
                per_task={int(t): float(v) for t, v in raw["per_task"].items()},
                per_domain={int(d): float(v) for d, v in raw["per_domain"].items()},
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"report: malformed file ({exc})") from exc
    return EvalReport(alphas=alphas, per_alpha=per_alpha, counts=counts)


def render_report_table(report: EvalReport) -> str:
    """Two-row plain-text table: mAP and mAR per alpha, percentages to 2 dp."""
    header = ["metric"] + [f"@{alpha:.2f}" for alpha in report.alphas]
    map_row = ["mAP"] + [f"{report.per_alpha[a].m_ap:.2f}" for a in report.alphas]
    mar_row = ["mAR"] + [f"{report.per_alpha[a].m_ar:.2f}" for a in report.alphas]
    widths = [max(len(row[i]) for row in (header, map_row, mar_row)) for i in range(len(header))]
    lines = [
        "  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(row, widths)))
        for row in (header, map_row, mar_row)
    ]
    return "\n".join(lines) + "\n"
