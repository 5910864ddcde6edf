"""Task-consistency refinement for step localization.

A detector emits proposals whose scores may scatter across steps of many
tasks, but an instructional video demonstrates exactly one task.  The
refinement runs in two stages:

  bottom-up   sum the per-proposal score vectors into a video score, project
              it through the step-task incidence matrix, and take the argmax
              task;
  top-down    attenuate every step outside the predicted task by a factor
              ``gamma`` (default ``e**-2``), leaving in-task scores untouched,
              then re-rank and apply per-class temporal NMS.

All operations are pure; videos can be processed in parallel with results
independent of scheduling.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .annotations import Interval, Proposal, ProposalSet
from .errors import DimensionMismatch, EmptyProposalSet, InvalidGamma, ParseError, UnknownTask
from .lexicon import Lexicon, StepTaskMatrix, _parse_json, _read_source, build_incidence_matrix
from .metrics import temporal_iou

DETECTION_FORMAT = "stepcoin-det-v1"

GAMMA_DEFAULT = math.exp(-2)
NMS_THRESHOLD_DEFAULT = 0.4
TOP_C_DEFAULT = 1


@dataclass(frozen=True)
class TaskScore:
    """Per-task evidence and the argmax task (ties go to the lowest index)."""

    values: np.ndarray
    predicted_task: int


@dataclass(frozen=True)
class RefinedMask:
    """K-vector that is 1.0 for steps of the predicted task, gamma elsewhere."""

    values: np.ndarray
    gamma: float


@dataclass(frozen=True)
class Detection:
    interval: Interval
    step_id: int
    score: float


def aggregate_scores(proposals: ProposalSet) -> np.ndarray:
    """Sum score vectors over all proposals into one K-vector.

    Each component is summed in sorted order, so the result is bit-identical
    under any permutation of the proposals.
    """
    if len(proposals) == 0:
        raise EmptyProposalSet(f"{proposals.video_id}: no proposals to aggregate")
    stacked = np.stack([p.scores for p in proposals.proposals])
    return np.sum(np.sort(stacked, axis=0), axis=0)


def predict_task(video_score: np.ndarray, incidence: StepTaskMatrix) -> TaskScore:
    """Project the video score onto tasks and pick the argmax task."""
    video_score = np.asarray(video_score, dtype=np.float64)
    if video_score.shape != (incidence.num_steps,):
        raise DimensionMismatch(
            f"video score has shape {video_score.shape}, expected ({incidence.num_steps},)"
        )
    values = video_score @ incidence.entries.astype(np.float64)
    return TaskScore(values=values, predicted_task=int(np.argmax(values)))


def refine_mask(incidence: StepTaskMatrix, task_id: int, gamma: float) -> RefinedMask:
    """Build the attenuation mask for one task.

    Entries are exactly 1.0 for the task's steps and exactly ``gamma`` for all
    others.  ``gamma`` must lie in (0, 1]; 1.0 is the degenerate no-op mask.
    """
    if not (0 <= task_id < incidence.num_tasks):
        raise UnknownTask(f"task id {task_id} out of range 0..{incidence.num_tasks - 1}")
    if not (0.0 < gamma <= 1.0):
        raise InvalidGamma(f"gamma must be in (0, 1], got {gamma}")
    in_task = incidence.entries[:, task_id] == 1
    values = np.where(in_task, 1.0, float(gamma))
    return RefinedMask(values=values, gamma=float(gamma))


def refine_scores(proposals: ProposalSet, mask: RefinedMask) -> ProposalSet:
    """Hadamard-multiply every proposal's scores by the mask; intervals stay."""
    if len(proposals) and proposals.proposals[0].scores.shape != mask.values.shape:
        raise DimensionMismatch(
            f"{proposals.video_id}: scores have shape "
            f"{proposals.proposals[0].scores.shape}, mask {mask.values.shape}"
        )
    return ProposalSet(
        video_id=proposals.video_id,
        proposals=tuple(
            Proposal(interval=p.interval, scores=p.scores * mask.values)
            for p in proposals.proposals
        ),
    )


def proposals_to_detections(proposals: ProposalSet, top_c: int = TOP_C_DEFAULT) -> list[Detection]:
    """Flatten each proposal into its ``top_c`` best (step, score) candidates."""
    if top_c < 1:
        raise ValueError(f"top_c must be >= 1, got {top_c}")
    detections = []
    for p in proposals.proposals:
        # Stable sort on the negated scores: ties resolve to the lower step id.
        best = np.argsort(-p.scores, kind="stable")[:top_c]
        detections.extend(
            Detection(interval=p.interval, step_id=int(k), score=float(p.scores[k]))
            for k in best
        )
    return detections


def _rank_key(det: Detection):
    return (-det.score, det.interval.start, det.step_id)


def nms(detections: list[Detection], iou_threshold: float = NMS_THRESHOLD_DEFAULT) -> list[Detection]:
    """Greedy per-class non-maximum suppression.

    Within each step class, repeatedly keep the highest-scoring detection and
    drop the rest of the class whose IoU with a kept one exceeds the
    threshold.  Classes never suppress each other.  Output is sorted by score
    descending (ties: earlier start, then lower step id), so the function is
    idempotent and deterministic.
    """
    if not (0.0 <= iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    by_class: dict[int, list[Detection]] = {}
    for det in detections:
        by_class.setdefault(det.step_id, []).append(det)
    kept: list[Detection] = []
    for step_id in sorted(by_class):
        pending = sorted(by_class[step_id], key=_rank_key)
        while pending:
            best = pending.pop(0)
            kept.append(best)
            pending = [
                d for d in pending if temporal_iou(d.interval, best.interval) <= iou_threshold
            ]
    return sorted(kept, key=_rank_key)


def localize_steps(
    proposals: ProposalSet,
    incidence: StepTaskMatrix,
    gamma: float = GAMMA_DEFAULT,
    top_c: int = TOP_C_DEFAULT,
    nms_threshold: float = NMS_THRESHOLD_DEFAULT,
) -> tuple[int, list[Detection]]:
    """Full pipeline: predict the task, refine scores, emit NMS'd detections."""
    task = predict_task(aggregate_scores(proposals), incidence).predicted_task
    refined = refine_scores(proposals, refine_mask(incidence, task, gamma))
    return task, nms(proposals_to_detections(refined, top_c), nms_threshold)


def baseline_detections(
    proposals: ProposalSet,
    top_c: int = TOP_C_DEFAULT,
    nms_threshold: float = NMS_THRESHOLD_DEFAULT,
) -> list[Detection]:
    """Unrefined reference path: raw top-c candidates plus NMS."""
    return nms(proposals_to_detections(proposals, top_c), nms_threshold)


class TaskConsistencyLocalizer(BaseEstimator):
    """Estimator wrapping the refinement pipeline.

    ``fit`` derives the step-task incidence matrix from a lexicon; ``predict``
    turns proposal sets into detection lists, and ``transform`` returns the
    refined proposal sets for callers that want to re-rank themselves.  With
    ``refine=False`` the estimator degrades to the raw top-c + NMS baseline.

    Parameters
    ----------
    gamma : float, default ``e**-2``
        Attenuation applied to scores of steps outside the predicted task.
    top_c : int, default 1
        Candidates emitted per proposal before NMS.
    nms_threshold : float, default 0.4
        Temporal IoU above which a lower-scored same-class detection is dropped.
    refine : bool, default True
        Apply the task-consistency mask before ranking.
    """

    def __init__(
        self,
        gamma: float = GAMMA_DEFAULT,
        top_c: int = TOP_C_DEFAULT,
        nms_threshold: float = NMS_THRESHOLD_DEFAULT,
        refine: bool = True,
    ):
        self.gamma = gamma
        self.top_c = top_c
        self.nms_threshold = nms_threshold
        self.refine = refine

    def fit(self, lexicon: Lexicon, y=None) -> "TaskConsistencyLocalizer":
        self.incidence_ = build_incidence_matrix(lexicon)
        self.num_steps_ = lexicon.num_steps
        self.num_tasks_ = lexicon.num_tasks
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "incidence_"):
            raise NotFittedError("call fit(lexicon) before using the localizer")

    def localize(self, proposals: ProposalSet) -> tuple[int | None, list[Detection]]:
        """(predicted task, detections) for one video.

        Without refinement no task is predicted and ``None`` is returned in
        its place; an empty proposal set is legal there and yields no
        detections.
        """
        self._check_fitted()
        if not self.refine:
            return None, baseline_detections(proposals, self.top_c, self.nms_threshold)
        return localize_steps(
            proposals, self.incidence_, self.gamma, self.top_c, self.nms_threshold
        )

    def transform(self, proposal_sets: list[ProposalSet]) -> list[ProposalSet]:
        self._check_fitted()
        if not self.refine:
            return list(proposal_sets)
        out = []
        for pset in proposal_sets:
            task = predict_task(aggregate_scores(pset), self.incidence_).predicted_task
            out.append(refine_scores(pset, refine_mask(self.incidence_, task, self.gamma)))
        return out

    def predict(self, proposal_sets: list[ProposalSet]) -> list[list[Detection]]:
        return [self.localize(pset)[1] for pset in proposal_sets]

    def predict_tasks(self, proposal_sets: list[ProposalSet]) -> list[int]:
        self._check_fitted()
        return [
            predict_task(aggregate_scores(pset), self.incidence_).predicted_task
            for pset in proposal_sets
        ]


# --- detections file ---------------------------------------------------------


def serialize_detections(
    detections_by_video: dict[str, list[Detection]],
    tasks_by_video: dict[str, int | None] | None = None,
) -> bytes:
    tasks_by_video = tasks_by_video or {}
    doc = {
        "format": DETECTION_FORMAT,
        "videos": {
            video_id: {
                "task": tasks_by_video.get(video_id),
                "detections": [
                    {
                        "start": float(d.interval.start),
                        "end": float(d.interval.end),
                        "step_id": int(d.step_id),
                        "score": float(d.score),
                    }
                    for d in dets
                ],
            }
            for video_id, dets in sorted(detections_by_video.items())
        },
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_detections(
    source: bytes | str | os.PathLike | BinaryIO,
) -> tuple[dict[str, list[Detection]], dict[str, int | None]]:
    """Returns (detections per video, predicted task per video)."""
    doc = _parse_json(_read_source(source), "detections")
    if doc.get("format") != DETECTION_FORMAT:
        raise ParseError(
            f"detections: format key must be '{DETECTION_FORMAT}', got {doc.get('format')!r}"
        )
    videos = doc.get("videos")
    if not isinstance(videos, dict):
        raise ParseError("detections: missing 'videos' object")
    detections: dict[str, list[Detection]] = {}
    tasks: dict[str, int | None] = {}
    for video_id in sorted(videos):
        entry = videos[video_id]
        try:
            task = entry.get("task")
            tasks[video_id] = int(task) if task is not None else None
            detections[video_id] = [
                Detection(
                    interval=Interval(float(d["start"]), float(d["end"])),
                    step_id=int(d["step_id"]),
                    score=float(d["score"]),
                )
                for d in entry["detections"]
            ]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"{video_id}: malformed detections ({exc})") from exc
    return detections, tasks
