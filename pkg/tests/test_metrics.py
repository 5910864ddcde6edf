from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepcoin.annotations import FrameLabelSequence, Interval, Segment
from stepcoin.consistency import Detection
from stepcoin.errors import LengthMismatch, NoGroundTruth, ValidationError
from stepcoin.metrics import (
    EvalConfig,
    average_precision,
    evaluate,
    frame_accuracy,
    load_report,
    match_detections,
    mean_ap,
    mean_ar,
    render_report_table,
    serialize_report,
    temporal_iou,
)

from .oracles import ap_oracle, class_ap_ar_oracle, frame_accuracy_oracle, iou_oracle, match_oracle


def det(start, end, step, score):
    return Detection(interval=Interval(start, end), step_id=step, score=score)


def seg(start, end, step):
    return Segment(interval=Interval(start, end), step_id=step)


# --- IoU ------------------------------------------------------------------------


def test_iou_identical_is_one():
    assert temporal_iou(Interval(2, 7), Interval(2, 7)) == 1.0


def test_iou_touching_is_zero():
    assert temporal_iou(Interval(0, 5), Interval(5, 10)) == 0.0


def test_iou_hand_computed():
    assert temporal_iou(Interval(0, 10), Interval(5, 15)) == pytest.approx(1 / 3)


def test_iou_symmetric_and_monotone():
    a = Interval(10, 20)
    previous = 1.0
    for shift in (0, 2, 5, 9, 11, 30):
        b = Interval(10 + shift, 20 + shift)
        value = temporal_iou(a, b)
        assert value == temporal_iou(b, a)
        assert value <= previous
        previous = value


@settings(max_examples=200, deadline=None)
@given(
    a0=st.floats(0, 50, allow_nan=False),
    al=st.floats(0.01, 30, allow_nan=False),
    b0=st.floats(0, 50, allow_nan=False),
    bl=st.floats(0.01, 30, allow_nan=False),
)
def test_iou_matches_oracle(a0, al, b0, bl):
    a, b = Interval(a0, a0 + al), Interval(b0, b0 + bl)
    assert temporal_iou(a, b) == pytest.approx(iou_oracle(a0, a0 + al, b0, b0 + bl), abs=1e-12)


# --- matching ---------------------------------------------------------------------


def test_match_exact_detection_is_tp():
    assert match_detections([det(0, 10, 1, 0.9)], [seg(0, 10, 1)], 0.5) == [True]


def test_match_one_to_one():
    flags = match_detections(
        [det(0, 10, 1, 0.9), det(1, 10, 1, 0.8)], [seg(0, 10, 1)], 0.5
    )
    assert flags == [True, False]


def test_match_threshold_boundary():
    # IoU([0,10], [0,22]) = 10/22 = 0.4545...
    d = [det(0, 10, 1, 0.9)]
    g = [seg(0, 22, 1)]
    assert temporal_iou(d[0].interval, g[0].interval) == pytest.approx(10 / 22)
    assert match_detections(d, g, 0.5) == [False]
    assert match_detections(d, g, 0.4) == [True]


def test_match_class_must_agree():
    assert match_detections([det(0, 10, 2, 0.9)], [seg(0, 10, 1)], 0.1) == [False]


def test_match_caps_tp_at_gt_count():
    dets = [det(0, 10, 1, s) for s in (0.9, 0.8, 0.7, 0.6)]
    gts = [seg(0, 10, 1), seg(0, 11, 1)]
    assert sum(match_detections(dets, gts, 0.1)) <= len(gts)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_match_agrees_with_oracle(data):
    n_det = data.draw(st.integers(0, 5))
    n_gt = data.draw(st.integers(0, 4))
    grid = st.integers(0, 12)
    dets, gts = [], []
    for _ in range(n_det):
        a = data.draw(grid)
        b = data.draw(st.integers(a + 1, 14))
        dets.append((float(a), float(b), data.draw(st.integers(0, 1)), data.draw(st.sampled_from([0.25, 0.5, 0.75, 1.0]))))
    for _ in range(n_gt):
        a = data.draw(grid)
        b = data.draw(st.integers(a + 1, 14))
        gts.append((float(a), float(b), data.draw(st.integers(0, 1))))
    alpha = data.draw(st.sampled_from([0.1, 0.3, 0.5]))
    got = match_detections(
        [det(*d) for d in dets], [seg(*g) for g in gts], alpha
    )
    assert got == match_oracle(dets, gts, alpha)


# --- average precision ---------------------------------------------------------------


def test_ap_perfect_single():
    assert average_precision([det(0, 10, 1, 0.9)], [seg(0, 10, 1)], 0.5) == 1.0


def test_ap_tp_then_fp_over_two_gt():
    dets = [det(0, 10, 1, 0.9), det(50, 60, 1, 0.8)]
    gts = [seg(0, 10, 1), seg(20, 30, 1)]
    # ranked flags are [TP, FP]; the oracle integrates the envelope to 0.5
    assert ap_oracle([True, False], 2) == 0.5
    assert average_precision(dets, gts, 0.5) == 0.5


def test_ap_no_detections_is_zero():
    assert average_precision([], [seg(0, 10, 1)], 0.5) == 0.0


def test_ap_requires_ground_truth():
    with pytest.raises(NoGroundTruth):
        average_precision([det(0, 10, 1, 0.9)], [], 0.5)


def test_ap_is_one_iff_all_matched_above_fps():
    dets = [det(0, 10, 1, 0.9), det(20, 30, 1, 0.8), det(50, 51, 1, 0.1)]
    gts = [seg(0, 10, 1), seg(20, 30, 1)]
    assert average_precision(dets, gts, 0.5) == 1.0
    # an FP ranked above a TP drags AP below 1
    dets_bad = [det(50, 51, 1, 0.95), det(0, 10, 1, 0.9), det(20, 30, 1, 0.8)]
    assert average_precision(dets_bad, gts, 0.5) < 1.0


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_ap_agrees_with_oracle(data):
    n_det = data.draw(st.integers(0, 4))
    n_gt = data.draw(st.integers(1, 3))
    dets, gts = [], []
    for _ in range(n_det):
        a = data.draw(st.integers(0, 10))
        b = data.draw(st.integers(a + 1, 12))
        dets.append((float(a), float(b), 0, data.draw(st.sampled_from([0.2, 0.5, 0.8, 1.0]))))
    for _ in range(n_gt):
        a = data.draw(st.integers(0, 10))
        b = data.draw(st.integers(a + 1, 12))
        gts.append((float(a), float(b), 0))
    alpha = data.draw(st.sampled_from([0.2, 0.5]))
    library = average_precision([det(*d) for d in dets], [seg(*g) for g in gts], alpha)
    oracle = ap_oracle(match_oracle(dets, gts, alpha), len(gts))
    assert library == pytest.approx(oracle, abs=1e-9)


# --- corpus-level evaluation -----------------------------------------------------------


def perfect_fixture(lexicon, videos=3):
    from stepcoin.annotations import VideoAnnotation

    annotations = []
    detections = {}
    for i in range(videos):
        task_id = i % lexicon.num_tasks
        steps = [s.id for s in lexicon.steps if s.task_id == task_id]
        segs = tuple(
            seg(10.0 * j, 10.0 * j + 5.0, steps[j % len(steps)]) for j in range(2)
        )
        vid = f"v{i}"
        annotations.append(
            VideoAnnotation(video_id=vid, task_id=task_id, duration=40.0, segments=segs)
        )
        detections[vid] = [det(s.interval.start, s.interval.end, s.step_id, 1.0) for s in segs]
    return annotations, detections


def test_mean_ap_perfect_is_hundred(tiny_lexicon):
    annotations, detections = perfect_fixture(tiny_lexicon)
    for alpha in (0.1, 0.5, 1.0):
        slice_ = mean_ap(detections, annotations, alpha, tiny_lexicon)
        assert slice_.m_ap == 100.0
        assert slice_.m_ar == 100.0


def test_mean_ap_half_classes_perfect(tiny_lexicon):
    from stepcoin.annotations import VideoAnnotation

    # two classes with GT; detections only for class 0
    annotations = [
        VideoAnnotation(
            video_id="v0",
            task_id=0,
            duration=30.0,
            segments=(seg(0, 5, 0), seg(10, 15, 1)),
        )
    ]
    detections = {"v0": [det(0, 5, 0, 1.0)]}
    slice_ = mean_ap(detections, annotations, 0.5, tiny_lexicon)
    assert slice_.m_ap == 50.0
    assert slice_.per_class[0].ap == 100.0
    assert slice_.per_class[1].ap == 0.0


def test_mean_ar_counts(tiny_lexicon):
    from stepcoin.annotations import VideoAnnotation

    annotations = [
        VideoAnnotation(
            video_id="v0",
            task_id=0,
            duration=40.0,
            segments=(seg(0, 5, 0), seg(10, 15, 0)),
        )
    ]
    # one of two class-0 GTs matched
    detections = {"v0": [det(0, 5, 0, 1.0)]}
    slice_ = mean_ar(detections, annotations, 0.5, tiny_lexicon)
    assert slice_.per_class[0].ar == 50.0
    # no detections at all
    assert mean_ar({"v0": []}, annotations, 0.5, tiny_lexicon).m_ar == 0.0
    # everything matched
    detections_all = {"v0": [det(0, 5, 0, 1.0), det(10, 15, 0, 0.9)]}
    assert mean_ar(detections_all, annotations, 0.5, tiny_lexicon).m_ar == 100.0


def test_mean_ar_cap_parameter(tiny_lexicon):
    from stepcoin.annotations import VideoAnnotation

    annotations = [
        VideoAnnotation(
            video_id="v0",
            task_id=0,
            duration=40.0,
            segments=(seg(0, 5, 0), seg(10, 15, 0)),
        )
    ]
    detections = {"v0": [det(0, 5, 0, 1.0), det(10, 15, 0, 0.5)]}
    uncapped = mean_ar(detections, annotations, 0.5, tiny_lexicon)
    capped = mean_ar(detections, annotations, 0.5, tiny_lexicon, max_detections=1)
    assert uncapped.m_ar == 100.0
    assert capped.m_ar == 50.0


def random_corpus(rng, lexicon, videos=5, max_dets=4):
    from stepcoin.annotations import VideoAnnotation

    annotations = []
    detections = {}
    for i in range(videos):
        vid = f"v{i}"
        task_id = int(rng.integers(0, lexicon.num_tasks))
        steps = [s.id for s in lexicon.steps if s.task_id == task_id]
        n_seg = int(rng.integers(1, 4))
        segs = []
        cursor = 0.0
        for _ in range(n_seg):
            cursor += float(rng.uniform(0, 3))
            length = float(rng.uniform(1, 8))
            segs.append(seg(cursor, cursor + length, int(rng.choice(steps))))
            cursor += length
        annotations.append(
            VideoAnnotation(
                video_id=vid, task_id=task_id, duration=cursor + 1.0, segments=tuple(segs)
            )
        )
        dets = []
        for _ in range(int(rng.integers(0, max_dets + 1))):
            start = float(rng.uniform(0, cursor))
            dets.append(
                det(
                    start,
                    start + float(rng.uniform(0.5, 9)),
                    int(rng.integers(0, lexicon.num_steps)),
                    float(rng.choice([0.2, 0.5, 0.8, 1.0])),
                )
            )
        detections[vid] = dets
    return annotations, detections


def test_evaluate_matches_pooled_oracle(tiny_lexicon):
    rng = np.random.default_rng(123)
    for trial in range(40):
        annotations, detections = random_corpus(rng, tiny_lexicon)
        for alpha in (0.3, 0.5):
            report = evaluate(detections, annotations, tiny_lexicon, EvalConfig(alphas=(alpha,)))
            classes = sorted({s.step_id for a in annotations for s in a.segments})
            oracle_aps, oracle_ars = [], []
            for c in classes:
                dets_by_video = {
                    a.video_id: [
                        (d.interval.start, d.interval.end, d.score)
                        for d in detections[a.video_id]
                        if d.step_id == c
                    ]
                    for a in annotations
                }
                gts_by_video = {
                    a.video_id: [
                        (s.interval.start, s.interval.end)
                        for s in a.segments
                        if s.step_id == c
                    ]
                    for a in annotations
                }
                ap, ar = class_ap_ar_oracle(dets_by_video, gts_by_video, alpha)
                oracle_aps.append(ap)
                oracle_ars.append(ar)
            slice_ = report.per_alpha[alpha]
            assert slice_.m_ap == pytest.approx(100 * np.mean(oracle_aps), abs=1e-9)
            assert slice_.m_ar == pytest.approx(100 * np.mean(oracle_ars), abs=1e-9)


def test_evaluate_monotone_in_alpha(tiny_lexicon):
    rng = np.random.default_rng(7)
    for _ in range(10):
        annotations, detections = random_corpus(rng, tiny_lexicon)
        report = evaluate(detections, annotations, tiny_lexicon)
        maps = [report.per_alpha[a].m_ap for a in report.alphas]
        mars = [report.per_alpha[a].m_ar for a in report.alphas]
        assert all(x >= y - 1e-12 for x, y in zip(maps, maps[1:]))
        assert all(x >= y - 1e-12 for x, y in zip(mars, mars[1:]))


def test_evaluate_workers_bit_identical(tiny_lexicon):
    rng = np.random.default_rng(99)
    annotations, detections = random_corpus(rng, tiny_lexicon, videos=8)
    sequential = evaluate(detections, annotations, tiny_lexicon, workers=1)
    parallel = evaluate(detections, annotations, tiny_lexicon, workers=8)
    assert serialize_report(sequential) == serialize_report(parallel)


def test_evaluate_per_task_and_domain_scoping(tiny_lexicon):
    annotations, detections = perfect_fixture(tiny_lexicon, videos=3)
    report = evaluate(detections, annotations, tiny_lexicon)
    slice_ = report.per_alpha[0.5]
    # every evaluated task and domain had perfect detections
    assert all(v == 100.0 for v in slice_.per_task.values())
    assert all(v == 100.0 for v in slice_.per_domain.values())
    assert set(slice_.per_task) <= {t.id for t in tiny_lexicon.tasks}
    assert set(slice_.per_domain) <= {d.id for d in tiny_lexicon.domains}


def test_eval_config_validation():
    with pytest.raises(ValidationError):
        EvalConfig(alphas=(0.5, 0.3))
    with pytest.raises(ValidationError):
        EvalConfig(alphas=(0.0, 0.5))
    with pytest.raises(ValidationError):
        EvalConfig(alphas=())


# --- frame accuracy -----------------------------------------------------------------


def fls(labels, fps=10.0, vid="v"):
    return FrameLabelSequence(video_id=vid, fps=fps, labels=np.asarray(labels))


def test_frame_accuracy_identity():
    x = fls([1, 2, -1, 3])
    assert frame_accuracy(x, x) == 1.0


def test_frame_accuracy_complementary():
    assert frame_accuracy(fls([1, 2, 3]), fls([2, 3, 1])) == 0.0


def test_frame_accuracy_background_counts():
    assert frame_accuracy(fls([-1, 1]), fls([-1, 2])) == 0.5


def test_frame_accuracy_length_mismatch():
    with pytest.raises(LengthMismatch):
        frame_accuracy(fls([1]), fls([1, 2]))
    with pytest.raises(LengthMismatch):
        frame_accuracy(fls([1], fps=10), fls([1], fps=2))


def test_frame_accuracy_permutation_invariance():
    rng = np.random.default_rng(3)
    pred = rng.integers(-1, 5, 200)
    gt = rng.integers(-1, 5, 200)
    base = frame_accuracy(fls(pred), fls(gt))
    assert base == pytest.approx(frame_accuracy_oracle(list(pred), list(gt)))
    perm = rng.permutation(200)
    assert frame_accuracy(fls(pred[perm]), fls(gt[perm])) == pytest.approx(base)


# --- report serialization --------------------------------------------------------------


def test_report_round_trip(tiny_lexicon):
    annotations, detections = perfect_fixture(tiny_lexicon)
    report = evaluate(detections, annotations, tiny_lexicon)
    payload = serialize_report(report)
    loaded = load_report(payload)
    assert loaded == report
    assert serialize_report(loaded) == payload


def test_report_table_agrees_with_json(tiny_lexicon):
    rng = np.random.default_rng(17)
    annotations, detections = random_corpus(rng, tiny_lexicon)
    report = evaluate(detections, annotations, tiny_lexicon)
    table = render_report_table(report)
    lines = [ln.split() for ln in table.strip().splitlines()]
    header, map_row, mar_row = lines
    assert header[0] == "metric"
    for i, alpha in enumerate(report.alphas):
        assert header[1 + i] == f"@{alpha:.2f}"
        assert float(map_row[1 + i]) == pytest.approx(report.per_alpha[alpha].m_ap, abs=0.005)
        assert float(mar_row[1 + i]) == pytest.approx(report.per_alpha[alpha].m_ar, abs=0.005)
