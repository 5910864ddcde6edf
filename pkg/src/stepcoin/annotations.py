"""Per-video ground truth and detector proposals, plus frame-label conversion.

Interval semantics are half-open ``[start, end)`` in real seconds: adjacent
segments do not overlap and every timestamp buckets into at most one segment.
Frame ``t`` of a sequence sampled at ``fps`` sits at time ``t / fps``.
Background is the reserved frame label -1 and is never part of a score vector.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, BinaryIO

import numpy as np

from .errors import DimensionMismatch, ParseError, ValidationError
from .lexicon import Lexicon, _parse_json, _read_source

ANNOTATION_FORMAT = "stepcoin-ann-v1"
PROPOSAL_FORMAT = "stepcoin-prop-v1"
FRAME_LABEL_FORMAT = "stepcoin-frames-v1"
BACKGROUND = -1

# Slop for float round trips like duration * fps landing a hair under an int.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class Interval:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.start < self.end):
            raise ValidationError(
                f"empty or negative interval [{self.start}, {self.end})"
            )

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Segment:
    interval: Interval
    step_id: int


@dataclass(frozen=True)
class VideoAnnotation:
    """One video's task label and its ordered, non-overlapping step segments."""

    video_id: str
    task_id: int
    duration: float
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class Proposal:
    interval: Interval
    scores: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Proposal):
            return NotImplemented
        return self.interval == other.interval and np.array_equal(
            self.scores, other.scores
        )


@dataclass(frozen=True)
class ProposalSet:
    """A detector's raw output for one video: N intervals with K-dim scores."""

    video_id: str
    proposals: tuple[Proposal, ...]

    def __len__(self) -> int:
        return len(self.proposals)


@dataclass(frozen=True)
class FrameLabelSequence:
    video_id: str
    fps: float
    labels: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameLabelSequence):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.fps == other.fps
            and np.array_equal(self.labels, other.labels)
        )


def validate_annotation(annotation: VideoAnnotation, lexicon: Lexicon | None) -> None:
    """Check one video's invariants; messages carry video id + segment index."""
    vid = annotation.video_id
    if annotation.duration <= 0:
        raise ValidationError(f"{vid}: non-positive duration {annotation.duration}")
    if lexicon is not None and not (0 <= annotation.task_id < lexicon.num_tasks):
        raise ValidationError(f"{vid}: unknown task_id {annotation.task_id}")
    for index, seg in enumerate(annotation.segments):
        if seg.interval.end > annotation.duration + _TIME_EPS:
            raise ValidationError(
                f"{vid}: segment {index} ends at {seg.interval.end} past duration "
                f"{annotation.duration}"
            )
        if lexicon is not None:
            if not (0 <= seg.step_id < lexicon.num_steps):
                raise ValidationError(f"{vid}: segment {index} unknown step_id {seg.step_id}")
            if lexicon.task_of_step(seg.step_id) != annotation.task_id:
                raise ValidationError(
                    f"{vid}: segment {index} task-consistency violated: step "
                    f"{seg.step_id} belongs to task {lexicon.task_of_step(seg.step_id)}, "
                    f"video is task {annotation.task_id}"
                )
    ordered = sorted(enumerate(annotation.segments), key=lambda p: p[1].interval.start)
    for (_, prev), (index, cur) in zip(ordered, ordered[1:]):
        if cur.interval.start < prev.interval.end - _TIME_EPS:
            raise ValidationError(
                f"{vid}: segment {index} overlaps the previous segment"
            )


def _segment_from_dict(doc: dict[str, Any], where: str) -> Segment:
    try:
        start = float(doc["start"])
        end = float(doc["end"])
        step_id = int(doc["step_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: malformed segment ({exc})") from exc
    if not (0.0 <= start < end):
        raise ValidationError(f"{where}: empty interval [{start}, {end})")
    return Segment(interval=Interval(start, end), step_id=step_id)


def load_annotations(
    source: bytes | str | os.PathLike | BinaryIO,
    lexicon: Lexicon | None = None,
) -> list[VideoAnnotation]:
    """Load a ``stepcoin-ann-v1`` file, sorted by video id.

    With a lexicon, step ranges and ground-truth task-consistency are enforced;
    without one only the structural invariants (ordering, bounds, overlap) are.
    """
    doc = _parse_json(_read_source(source), "annotations")
    if doc.get("format") != ANNOTATION_FORMAT:
        raise ParseError(
            f"annotations: format key must be '{ANNOTATION_FORMAT}', "
            f"got {doc.get('format')!r}"
        )
    videos = doc.get("videos")
    if not isinstance(videos, dict):
        raise ParseError("annotations: missing 'videos' object")

    out = []
    for video_id in sorted(videos):
        entry = videos[video_id]
        try:
            task_id = int(entry["task_id"])
            duration = float(entry["duration"])
            segments_raw = entry["segments"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{video_id}: malformed annotation ({exc})") from exc
        if not isinstance(segments_raw, list):
            raise ParseError(f"{video_id}: 'segments' must be a list")
        segments = tuple(
            sorted(
                (
                    _segment_from_dict(seg, f"{video_id}: segment {i}")
                    for i, seg in enumerate(segments_raw)
                ),
                key=lambda s: s.interval.start,
            )
        )
        annotation = VideoAnnotation(
            video_id=video_id, task_id=task_id, duration=duration, segments=segments
        )
        validate_annotation(annotation, lexicon)
        out.append(annotation)
    return out


def serialize_annotations(annotations: list[VideoAnnotation]) -> bytes:
    doc = {
        "format": ANNOTATION_FORMAT,
        "videos": {
            a.video_id: {
                "task_id": int(a.task_id),
                "duration": float(a.duration),
                "segments": [
                    {
                        "start": float(s.interval.start),
                        "end": float(s.interval.end),
                        "step_id": int(s.step_id),
                    }
                    for s in a.segments
                ],
            }
            for a in sorted(annotations, key=lambda a: a.video_id)
        },
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_proposals(
    source: bytes | str | os.PathLike | BinaryIO, num_steps: int
) -> list[ProposalSet]:
    """Load a ``stepcoin-prop-v1`` file; every score vector must have length K
    and non-negative entries (scores are step probabilities)."""
    doc = _parse_json(_read_source(source), "proposals")
    if doc.get("format") != PROPOSAL_FORMAT:
        raise ParseError(
            f"proposals: format key must be '{PROPOSAL_FORMAT}', got {doc.get('format')!r}"
        )
    videos = doc.get("videos")
    if not isinstance(videos, dict):
        raise ParseError("proposals: missing 'videos' object")

    out = []
    for video_id in sorted(videos):
        entries = videos[video_id]
        if not isinstance(entries, list):
            raise ParseError(f"{video_id}: proposals must be a list")
        proposals = []
        for i, entry in enumerate(entries):
            try:
                start = float(entry["start"])
                end = float(entry["end"])
                scores = np.asarray(entry["scores"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{video_id}: malformed proposal {i} ({exc})") from exc
            if scores.ndim != 1 or scores.shape[0] != num_steps:
                raise DimensionMismatch(
                    f"{video_id}: proposal {i} has {scores.shape[0] if scores.ndim == 1 else '?'} "
                    f"scores, expected K={num_steps}"
                )
            if np.any(scores < 0):
                raise ValidationError(f"{video_id}: proposal {i} has negative scores")
            proposals.append(Proposal(interval=Interval(start, end), scores=scores))
        out.append(ProposalSet(video_id=video_id, proposals=tuple(proposals)))
    return out


def serialize_proposals(proposal_sets: list[ProposalSet]) -> bytes:
    doc = {
        "format": PROPOSAL_FORMAT,
        "videos": {
            p.video_id: [
                {
                    "start": float(prop.interval.start),
                    "end": float(prop.interval.end),
                    "scores": np.asarray(prop.scores, dtype=np.float64).tolist(),
                }
                for prop in p.proposals
            ]
            for p in sorted(proposal_sets, key=lambda p: p.video_id)
        },
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def frame_count(duration: float, fps: float) -> int:
    return int(math.floor(duration * fps + _TIME_EPS))


def segments_to_frame_labels(
    annotation: VideoAnnotation, fps: float
) -> FrameLabelSequence:
    """Sample an annotation at ``fps``: frame t gets the label of the segment
    containing time ``t / fps`` under [start, end) semantics, else background.
    """
    if fps <= 0:
        raise ValidationError(f"fps must be positive, got {fps}")
    n = frame_count(annotation.duration, fps)
    labels = np.full(n, BACKGROUND, dtype=np.int64)
    if annotation.segments and n:
        times = np.arange(n, dtype=np.float64) / fps
        starts = np.array([s.interval.start for s in annotation.segments])
        ends = np.array([s.interval.end for s in annotation.segments])
        ids = np.array([s.step_id for s in annotation.segments])
        # Segments are sorted and disjoint, so the candidate is unique.
        slot = np.searchsorted(starts, times, side="right") - 1
        valid = slot >= 0
        inside = np.zeros(n, dtype=bool)
        inside[valid] = times[valid] < ends[slot[valid]]
        labels[inside] = ids[slot[inside]]
    return FrameLabelSequence(video_id=annotation.video_id, fps=fps, labels=labels)


def frame_labels_to_segments(seq: FrameLabelSequence) -> list[Segment]:
    """Inverse sampling: maximal runs of one non-background label become
    segments ``[first / fps, (last + 1) / fps)``."""
    labels = np.asarray(seq.labels)
    segments: list[Segment] = []
    n = len(labels)
    i = 0
    while i < n:
        label = int(labels[i])
        j = i
        while j + 1 < n and labels[j + 1] == label:
            j += 1
        if label != BACKGROUND:
            segments.append(
                Segment(
                    interval=Interval(i / seq.fps, (j + 1) / seq.fps),
                    step_id=label,
                )
            )
        i = j + 1
    return segments


def load_frame_labels(
    source: bytes | str | os.PathLike | BinaryIO,
) -> list[FrameLabelSequence]:
    """Load a ``stepcoin-frames-v1`` file, sorted by video id."""
    doc = _parse_json(_read_source(source), "frame labels")
    if doc.get("format") != FRAME_LABEL_FORMAT:
        raise ParseError(
            f"frame labels: format key must be '{FRAME_LABEL_FORMAT}', "
            f"got {doc.get('format')!r}"
        )
    try:
        fps = float(doc["fps"])
        videos = doc["videos"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"frame labels: malformed file ({exc})") from exc
    if not isinstance(videos, dict):
        raise ParseError("frame labels: 'videos' must be an object")
    out = []
    for video_id in sorted(videos):
        labels = np.asarray(videos[video_id], dtype=np.int64)
        if labels.ndim != 1:
            raise ParseError(f"{video_id}: labels must be a flat list")
        out.append(FrameLabelSequence(video_id=video_id, fps=fps, labels=labels))
    return out


def serialize_frame_labels(sequences: list[FrameLabelSequence]) -> bytes:
    if sequences and len({s.fps for s in sequences}) != 1:
        raise ValidationError("all sequences in one file must share an fps")
    doc = {
        "format": FRAME_LABEL_FORMAT,
        "fps": sequences[0].fps if sequences else 10.0,
        "videos": {
            s.video_id: s.labels.tolist()
            for s in sorted(sequences, key=lambda s: s.video_id)
        },
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
