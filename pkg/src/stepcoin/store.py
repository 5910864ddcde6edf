"""Annotation project persistence and the three-pass workflow state machine.

A project is one directory holding a single ``store.json``.  Every mutation
rewrites the file through an atomic rename and fsync *before* the new revision
is acknowledged, so a crash between requests can never lose an acknowledged
write.  Concurrent editors are serialized per video through optimistic
revision checks: a submit must present the revision it based its edit on.

Workflow states move strictly forward: PASS1 -> PASS2 -> PASS3 -> DONE.
Pass 1 creates the primary annotation, pass 2 adjusts it, pass 3 verifies in
video mode; DONE is terminal.  Ground-truth task-consistency is deliberately
not enforced on drafts, only at export time.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, replace

from .annotations import (
    Interval,
    Segment,
    VideoAnnotation,
    load_annotations,
    serialize_annotations,
    validate_annotation,
)
from .errors import (
    IncompleteProject,
    ParseError,
    RevisionConflict,
    UnknownVideo,
    UnsupportedRate,
    ValidationError,
    WrongPass,
)
from .lexicon import Lexicon, load_lexicon, serialize_lexicon

STORE_FILENAME = "store.json"
WORKFLOW_STATES = ("PASS1", "PASS2", "PASS3", "DONE")
DEFAULT_FRAME_FPS = 2.0

_RATE_EPS = 1e-9


def pass_number(state: str) -> int:
    """1..3 for the editing passes; DONE has no pass."""
    if state == "DONE":
        return 0
    return WORKFLOW_STATES.index(state) + 1


def next_state(state: str) -> str:
    index = WORKFLOW_STATES.index(state)
    if state == "DONE":
        raise WrongPass("video already DONE; no further passes")
    return WORKFLOW_STATES[index + 1]


@dataclass(frozen=True)
class VideoEntry:
    video_id: str
    duration: float
    frame_dir: str
    native_fps_available: tuple[float, ...] = (2.0,)
    workflow_state: str = "PASS1"
    revision: int = 0
    task_id: int | None = None  # label picker scope; export default
    media_path: str | None = None  # original video for video mode, if present


@dataclass(frozen=True)
class DraftAnnotation:
    video_id: str
    segments: tuple[Segment, ...]
    author_pass: int
    saved_at: float = 0.0
    worker: str = ""


def _draft_to_dict(draft: DraftAnnotation) -> dict:
    return {
        "video_id": draft.video_id,
        "author_pass": draft.author_pass,
        "saved_at": draft.saved_at,
        "worker": draft.worker,
        "segments": [
            {"start": s.interval.start, "end": s.interval.end, "step_id": s.step_id}
            for s in draft.segments
        ],
    }


def _draft_from_dict(doc: dict) -> DraftAnnotation:
    return DraftAnnotation(
        video_id=str(doc["video_id"]),
        author_pass=int(doc["author_pass"]),
        saved_at=float(doc.get("saved_at", 0.0)),
        worker=str(doc.get("worker", "")),
        segments=tuple(
            Segment(
                interval=Interval(float(s["start"]), float(s["end"])),
                step_id=int(s["step_id"]),
            )
            for s in doc["segments"]
        ),
    )


def _validate_draft_segments(draft: DraftAnnotation, duration: float) -> None:
    ordered = sorted(draft.segments, key=lambda s: s.interval.start)
    for i, seg in enumerate(ordered):
        if seg.interval.end > duration + 1e-9:
            raise ValidationError(
                f"{draft.video_id}: segment {i} ends past duration {duration}"
            )
        if i and seg.interval.start < ordered[i - 1].interval.end - 1e-9:
            raise ValidationError(
                f"{draft.video_id}: segment {i} overlaps the previous segment"
            )


class ProjectStore:
    """One annotation project backed by a single atomic JSON file."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = os.fspath(directory)
        self._lock = threading.Lock()
        self._load()

    # -- persistence ----------------------------------------------------------

    @property
    def _store_path(self) -> str:
        return os.path.join(self.directory, STORE_FILENAME)

    def _load(self) -> None:
        try:
            with open(self._store_path, "rb") as handle:
                doc = json.load(handle)
        except FileNotFoundError:
            raise
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"store.json: {exc}") from exc
        self.project_id: str = doc["project_id"]
        self.lexicon: Lexicon = load_lexicon(
            json.dumps(doc["lexicon"]).encode("utf-8")
        )
        self._videos: dict[str, VideoEntry] = {}
        for vid, entry in doc["videos"].items():
            self._videos[vid] = VideoEntry(
                video_id=vid,
                duration=float(entry["duration"]),
                frame_dir=str(entry["frame_dir"]),
                native_fps_available=tuple(float(r) for r in entry["native_fps_available"]),
                workflow_state=str(entry["workflow_state"]),
                revision=int(entry["revision"]),
                task_id=entry.get("task_id"),
                media_path=entry.get("media_path"),
            )
        self._drafts: dict[str, dict[int, DraftAnnotation]] = {
            vid: {int(p): _draft_from_dict(d) for p, d in passes.items()}
            for vid, passes in doc.get("drafts", {}).items()
        }

    def _persist(self) -> None:
        doc = {
            "project_id": self.project_id,
            "lexicon": json.loads(serialize_lexicon(self.lexicon).decode("utf-8")),
            "videos": {
                vid: {
                    "duration": e.duration,
                    "frame_dir": e.frame_dir,
                    "native_fps_available": list(e.native_fps_available),
                    "workflow_state": e.workflow_state,
                    "revision": e.revision,
                    "task_id": e.task_id,
                    "media_path": e.media_path,
                }
                for vid, e in sorted(self._videos.items())
            },
            "drafts": {
                vid: {str(p): _draft_to_dict(d) for p, d in sorted(passes.items())}
                for vid, passes in sorted(self._drafts.items())
            },
        }
        tmp_path = self._store_path + ".tmp"
        with open(tmp_path, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2, sort_keys=True)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_path, self._store_path)

    @classmethod
    def create(
        cls,
        directory: str | os.PathLike,
        project_id: str,
        lexicon: Lexicon,
        videos: list[VideoEntry],
    ) -> "ProjectStore":
        directory = os.fspath(directory)
        ids = [v.video_id for v in videos]
        if len(set(ids)) != len(ids):
            raise ValidationError("video ids must be unique within a project")
        os.makedirs(directory, exist_ok=True)
        doc = {
            "project_id": project_id,
            "lexicon": json.loads(serialize_lexicon(lexicon).decode("utf-8")),
            "videos": {
                v.video_id: {
                    "duration": v.duration,
                    "frame_dir": v.frame_dir,
                    "native_fps_available": list(v.native_fps_available),
                    "workflow_state": v.workflow_state,
                    "revision": v.revision,
                    "task_id": v.task_id,
                    "media_path": v.media_path,
                }
                for v in videos
            },
            "drafts": {},
        }
        path = os.path.join(directory, STORE_FILENAME)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2, sort_keys=True)
        return cls(directory)

    # -- reads ----------------------------------------------------------------

    def list_videos(self) -> list[VideoEntry]:
        return [self._videos[vid] for vid in sorted(self._videos)]

    def get_video(self, video_id: str) -> VideoEntry:
        try:
            return self._videos[video_id]
        except KeyError:
            raise UnknownVideo(f"unknown video '{video_id}'") from None

    def current_segments(self, video_id: str) -> tuple[Segment, ...]:
        """Latest draft wins; earlier passes are kept for audit."""
        drafts = self._drafts.get(video_id, {})
        if not drafts:
            return ()
        return drafts[max(drafts)].segments

    def get_annotation(self, video_id: str) -> dict:
        entry = self.get_video(video_id)
        drafts = self._drafts.get(video_id, {})
        latest = drafts[max(drafts)] if drafts else None
        return {
            "video_id": video_id,
            "revision": entry.revision,
            "workflow_state": entry.workflow_state,
            "task_id": entry.task_id,
            "draft": _draft_to_dict(latest) if latest else None,
        }

    def frames(self, video_id: str, fps: float = DEFAULT_FRAME_FPS) -> list[dict]:
        """Frame references at ``fps`` covering [0, duration).

        The rate must be one of the video's native extraction rates or an
        exact divisor of one; subsampled frames reuse the native images.
        """
        entry = self.get_video(video_id)
        if fps <= 0:
            raise UnsupportedRate(f"fps must be positive, got {fps}")
        native = None
        stride = 1
        for rate in sorted(entry.native_fps_available):
            ratio = rate / fps
            if abs(ratio - round(ratio)) < _RATE_EPS and round(ratio) >= 1:
                native = rate
                stride = int(round(ratio))
                break
        if native is None:
            raise UnsupportedRate(
                f"fps {fps} not available; native rates: {list(entry.native_fps_available)}"
            )
        count = int(math.ceil(entry.duration * fps - _RATE_EPS))
        rate_dir = format(native, "g")
        frames = []
        for k in range(count):
            native_index = k * stride
            frames.append(
                {
                    "time": k / fps,
                    "url": f"/frames/{self.project_id}/{video_id}/{rate_dir}/{native_index:06d}.jpg",
                }
            )
        return frames

    def frame_file(self, video_id: str, rate_dir: str, filename: str) -> str:
        """Filesystem path for a frame image; rejects path escapes."""
        entry = self.get_video(video_id)
        if "/" in filename or "\\" in filename or ".." in (rate_dir, filename):
            raise UnknownVideo("bad frame path")
        return os.path.join(entry.frame_dir, rate_dir, filename)

    # -- writes ---------------------------------------------------------------

    def submit_annotation(
        self,
        video_id: str,
        draft: DraftAnnotation,
        expected_revision: int,
        complete: bool = False,
    ) -> dict:
        """Persist a draft; optionally mark the pass complete and advance.

        The optimistic-lock check and the persist happen under one lock, so of
        two racing submitters exactly one wins and the loser sees
        RevisionConflict.
        """
        with self._lock:
            entry = self.get_video(video_id)
            if entry.workflow_state == "DONE":
                raise WrongPass(f"{video_id} is DONE; no further edits accepted")
            current_pass = pass_number(entry.workflow_state)
            if draft.author_pass != current_pass:
                raise WrongPass(
                    f"{video_id} expects pass {current_pass}, draft is pass {draft.author_pass}"
                )
            if expected_revision != entry.revision:
                raise RevisionConflict(
                    f"{video_id} is at revision {entry.revision}, "
                    f"submit based on {expected_revision}"
                )
            _validate_draft_segments(draft, entry.duration)
            saved = replace(draft, video_id=video_id, saved_at=draft.saved_at or time.time())
            new_entry = replace(
                entry,
                revision=entry.revision + 1,
                workflow_state=next_state(entry.workflow_state)
                if complete
                else entry.workflow_state,
            )
            self._videos[video_id] = new_entry
            self._drafts.setdefault(video_id, {})[draft.author_pass] = saved
            self._persist()
            return {
                "revision": new_entry.revision,
                "workflow_state": new_entry.workflow_state,
            }

    def advance(self, video_id: str, expected_revision: int) -> dict:
        """Mark the current pass complete without changing segments."""
        with self._lock:
            entry = self.get_video(video_id)
            if entry.workflow_state == "DONE":
                raise WrongPass(f"{video_id} is DONE")
            if expected_revision != entry.revision:
                raise RevisionConflict(
                    f"{video_id} is at revision {entry.revision}, "
                    f"advance based on {expected_revision}"
                )
            new_entry = replace(
                entry,
                revision=entry.revision + 1,
                workflow_state=next_state(entry.workflow_state),
            )
            self._videos[video_id] = new_entry
            self._persist()
            return {
                "revision": new_entry.revision,
                "workflow_state": new_entry.workflow_state,
            }

    # -- export ---------------------------------------------------------------

    def export_annotations(self, assignment: dict[str, int] | None = None) -> bytes:
        """Emit a validated annotation file; every video must be DONE.

        Task ids come from ``assignment`` or fall back to the stored per-video
        task.  Task-consistency is enforced here, naming the offending video.
        """
        assignment = assignment or {}
        annotations = []
        for entry in self.list_videos():
            if entry.workflow_state != "DONE":
                raise IncompleteProject(
                    f"{entry.video_id} is in {entry.workflow_state}, not DONE"
                )
            task_id = assignment.get(entry.video_id, entry.task_id)
            if task_id is None:
                raise ValidationError(f"{entry.video_id}: no task assigned for export")
            annotation = VideoAnnotation(
                video_id=entry.video_id,
                task_id=int(task_id),
                duration=entry.duration,
                segments=tuple(
                    sorted(self.current_segments(entry.video_id), key=lambda s: s.interval.start)
                ),
            )
            validate_annotation(annotation, self.lexicon)
            annotations.append(annotation)
        payload = serialize_annotations(annotations)
        # Belt and braces: an export must always re-load cleanly.
        load_annotations(payload, self.lexicon)
        return payload
