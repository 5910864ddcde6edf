from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepcoin.annotations import (
    BACKGROUND,
    FrameLabelSequence,
    Interval,
    Segment,
    VideoAnnotation,
    frame_count,
    frame_labels_to_segments,
    load_annotations,
    load_frame_labels,
    load_proposals,
    segments_to_frame_labels,
    serialize_annotations,
    serialize_frame_labels,
    serialize_proposals,
)
from stepcoin.errors import DimensionMismatch, ParseError, ValidationError


def ann_doc(videos):
    return json.dumps({"format": "stepcoin-ann-v1", "videos": videos}).encode()


def prop_doc(videos):
    return json.dumps({"format": "stepcoin-prop-v1", "videos": videos}).encode()


def test_single_video_single_segment(tiny_lexicon):
    doc = ann_doc(
        {
            "v1": {
                "task_id": 1,
                "duration": 20.0,
                "segments": [{"start": 3.0, "end": 10.5, "step_id": 3}],
            }
        }
    )
    (annotation,) = load_annotations(doc, tiny_lexicon)
    assert annotation.video_id == "v1"
    assert annotation.segments[0].interval == Interval(3.0, 10.5)


def test_empty_interval_rejected(tiny_lexicon):
    doc = ann_doc(
        {
            "v1": {
                "task_id": 0,
                "duration": 20.0,
                "segments": [{"start": 12.0, "end": 12.0, "step_id": 0}],
            }
        }
    )
    with pytest.raises(ValidationError, match="empty"):
        load_annotations(doc, tiny_lexicon)


def test_cross_task_step_rejected(tiny_lexicon):
    # step 5 belongs to task 2, video claims task 0
    doc = ann_doc(
        {
            "v1": {
                "task_id": 0,
                "duration": 20.0,
                "segments": [{"start": 0.0, "end": 5.0, "step_id": 5}],
            }
        }
    )
    with pytest.raises(ValidationError, match="task-consistency"):
        load_annotations(doc, tiny_lexicon)


def test_overlapping_segments_rejected(tiny_lexicon):
    doc = ann_doc(
        {
            "v1": {
                "task_id": 0,
                "duration": 20.0,
                "segments": [
                    {"start": 0.0, "end": 5.0, "step_id": 0},
                    {"start": 4.0, "end": 8.0, "step_id": 1},
                ],
            }
        }
    )
    with pytest.raises(ValidationError, match="overlap"):
        load_annotations(doc, tiny_lexicon)


def test_touching_segments_allowed(tiny_lexicon):
    doc = ann_doc(
        {
            "v1": {
                "task_id": 0,
                "duration": 20.0,
                "segments": [
                    {"start": 0.0, "end": 5.0, "step_id": 0},
                    {"start": 5.0, "end": 8.0, "step_id": 1},
                ],
            }
        }
    )
    (annotation,) = load_annotations(doc, tiny_lexicon)
    assert len(annotation.segments) == 2


def test_segment_past_duration_rejected(tiny_lexicon):
    doc = ann_doc(
        {
            "v1": {
                "task_id": 0,
                "duration": 4.0,
                "segments": [{"start": 0.0, "end": 5.0, "step_id": 0}],
            }
        }
    )
    with pytest.raises(ValidationError, match="past duration"):
        load_annotations(doc, tiny_lexicon)


def test_annotation_round_trip(tiny_lexicon):
    doc = ann_doc(
        {
            "b": {"task_id": 2, "duration": 9.0, "segments": [{"start": 1.0, "end": 2.0, "step_id": 5}]},
            "a": {"task_id": 0, "duration": 20.0, "segments": [{"start": 0.5, "end": 5.0, "step_id": 1}]},
        }
    )
    first = load_annotations(doc, tiny_lexicon)
    second = load_annotations(serialize_annotations(first), tiny_lexicon)
    assert first == second


def test_proposals_round_trip_and_checks():
    doc = prop_doc({"v1": [{"start": 0.0, "end": 2.0, "scores": [0.1, 0.8, 0.1]}]})
    (pset,) = load_proposals(doc, 3)
    assert len(pset) == 1
    assert np.allclose(pset.proposals[0].scores, [0.1, 0.8, 0.1])
    again = load_proposals(serialize_proposals([pset]), 3)
    assert again == [pset]


def test_proposal_dimension_mismatch():
    doc = prop_doc({"v1": [{"start": 0.0, "end": 2.0, "scores": [0.1, 0.8, 0.1, 0.0]}]})
    with pytest.raises(DimensionMismatch):
        load_proposals(doc, 3)


def test_empty_proposal_list_is_legal():
    doc = prop_doc({"v1": []})
    (pset,) = load_proposals(doc, 3)
    assert len(pset) == 0


def test_negative_scores_rejected():
    doc = prop_doc({"v1": [{"start": 0.0, "end": 2.0, "scores": [0.1, -0.8, 0.1]}]})
    with pytest.raises(ValidationError, match="negative"):
        load_proposals(doc, 3)


def test_bad_format_key_is_parse_error():
    with pytest.raises(ParseError, match="format"):
        load_annotations(json.dumps({"videos": {}}).encode())
    with pytest.raises(ParseError, match="format"):
        load_proposals(json.dumps({"videos": {}}).encode(), 3)


# --- frame label conversion ---------------------------------------------------


def make_annotation(duration, segments, video_id="v", task_id=0):
    return VideoAnnotation(
        video_id=video_id,
        task_id=task_id,
        duration=duration,
        segments=tuple(Segment(Interval(s, e), step) for s, e, step in segments),
    )


def test_frame_labels_hand_enumerated():
    # timestamps 0.0, 0.5, 1.0, 1.5; [0.5, 1.5) covers the middle two
    annotation = make_annotation(2.0, [(0.5, 1.5, 3)])
    seq = segments_to_frame_labels(annotation, fps=2)
    assert seq.labels.tolist() == [-1, 3, 3, -1]


def test_frame_labels_no_segments_all_background():
    seq = segments_to_frame_labels(make_annotation(2.0, []), fps=2)
    assert seq.labels.tolist() == [BACKGROUND] * 4


def test_frame_labels_full_cover():
    seq = segments_to_frame_labels(make_annotation(2.0, [(0.0, 2.0, 1)]), fps=2)
    assert seq.labels.tolist() == [1, 1, 1, 1]


def test_frame_labels_length_exact():
    assert len(segments_to_frame_labels(make_annotation(2.0, []), fps=2)) == 4
    # 0.3 * 10 is 2.9999... in binary; the count must still be 3
    assert frame_count(0.3, 10) == 3
    assert len(segments_to_frame_labels(make_annotation(0.3, []), fps=10)) == 3


def test_frame_labels_to_segments_inverse():
    seq = FrameLabelSequence(video_id="v", fps=2, labels=np.array([-1, 3, 3, -1]))
    segments = frame_labels_to_segments(seq)
    assert segments == [Segment(Interval(0.5, 1.5), 3)]


def test_frame_labels_to_segments_run_length():
    seq = FrameLabelSequence(video_id="v", fps=1, labels=np.array([2, 2, 5]))
    assert frame_labels_to_segments(seq) == [
        Segment(Interval(0.0, 2.0), 2),
        Segment(Interval(2.0, 3.0), 5),
    ]


def test_frame_labels_all_background_empty():
    seq = FrameLabelSequence(video_id="v", fps=2, labels=np.full(5, BACKGROUND))
    assert frame_labels_to_segments(seq) == []


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_round_trip_on_frame_grid(data):
    fps = data.draw(st.sampled_from([1, 2, 4, 10]))
    n_frames = data.draw(st.integers(min_value=1, max_value=40))
    # build non-overlapping segments aligned to the frame grid
    cuts = data.draw(
        st.lists(st.integers(0, n_frames), min_size=2, max_size=8, unique=True).map(sorted)
    )
    segments = []
    for a, b in zip(cuts, cuts[1:]):
        if data.draw(st.booleans()):
            step = data.draw(st.integers(0, 3))
            segments.append((a / fps, b / fps, step))
    annotation = make_annotation(n_frames / fps, segments)
    seq = segments_to_frame_labels(annotation, fps)
    assert len(seq) == n_frames
    rebuilt = frame_labels_to_segments(seq)
    # adjacent same-step segments merge into one run; compare frame coverage
    want = segments_to_frame_labels(make_annotation(n_frames / fps, segments), fps)
    got = segments_to_frame_labels(
        make_annotation(n_frames / fps, [(s.interval.start, s.interval.end, s.step_id) for s in rebuilt]),
        fps,
    )
    assert want == got


def test_round_trip_exact_segments():
    # distinct neighbours never merge, so the inverse is exact
    annotation = make_annotation(3.0, [(0.5, 1.0, 2), (1.0, 2.0, 3), (2.5, 3.0, 2)])
    seq = segments_to_frame_labels(annotation, fps=2)
    assert frame_labels_to_segments(seq) == list(annotation.segments)


def test_frame_label_file_round_trip():
    seqs = [
        FrameLabelSequence(video_id="a", fps=10.0, labels=np.array([1, -1, 2])),
        FrameLabelSequence(video_id="b", fps=10.0, labels=np.array([0, 0])),
    ]
    again = load_frame_labels(serialize_frame_labels(seqs))
    assert again == seqs
