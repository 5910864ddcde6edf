"""Instructional-video step localization toolkit.

Data model and file formats for a three-level step taxonomy and per-video
annotations, the task-consistency score refinement pipeline, the mAP/mAR and
frame-accuracy evaluation protocol, a seeded synthetic corpus generator, and
an annotation backend with a three-pass review workflow.
"""

from .annotations import (
    BACKGROUND,
    FrameLabelSequence,
    Interval,
    Proposal,
    ProposalSet,
    Segment,
    VideoAnnotation,
    frame_labels_to_segments,
    load_annotations,
    load_frame_labels,
    load_proposals,
    segments_to_frame_labels,
    serialize_annotations,
    serialize_frame_labels,
    serialize_proposals,
)
from .consistency import (
    GAMMA_DEFAULT,
    Detection,
    TaskConsistencyLocalizer,
    aggregate_scores,
    baseline_detections,
    load_detections,
    localize_steps,
    nms,
    predict_task,
    proposals_to_detections,
    refine_mask,
    refine_scores,
    serialize_detections,
)
from .lexicon import (
    Domain,
    Lexicon,
    Step,
    StepTaskMatrix,
    Task,
    build_incidence_matrix,
    reference_shaped_lexicon,
    load_lexicon,
    serialize_lexicon,
    steps_of_task,
)
from .metrics import (
    ALPHA_GRID_DEFAULT,
    EvalConfig,
    EvalReport,
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
from .synth import NoiseModel, SynthConfig, generate_corpus, generate_proposals, write_fixture_dir

__version__ = "0.1.0"

__all__ = [
    "ALPHA_GRID_DEFAULT",
    "BACKGROUND",
    "Detection",
    "Domain",
    "EvalConfig",
    "EvalReport",
    "FrameLabelSequence",
    "GAMMA_DEFAULT",
    "Interval",
    "Lexicon",
    "NoiseModel",
    "Proposal",
    "ProposalSet",
    "Segment",
    "Step",
    "StepTaskMatrix",
    "SynthConfig",
    "Task",
    "TaskConsistencyLocalizer",
    "VideoAnnotation",
    "aggregate_scores",
    "average_precision",
    "baseline_detections",
    "build_incidence_matrix",
    "reference_shaped_lexicon",
    "evaluate",
    "frame_accuracy",
    "frame_labels_to_segments",
    "generate_corpus",
    "generate_proposals",
    "load_annotations",
    "load_detections",
    "load_frame_labels",
    "load_lexicon",
    "load_proposals",
    "load_report",
    "localize_steps",
    "match_detections",
    "mean_ap",
    "mean_ar",
    "nms",
    "predict_task",
    "proposals_to_detections",
    "refine_mask",
    "refine_scores",
    "render_report_table",
    "segments_to_frame_labels",
    "serialize_annotations",
    "serialize_detections",
    "serialize_frame_labels",
    "serialize_lexicon",
    "serialize_proposals",
    "serialize_report",
    "steps_of_task",
    "temporal_iou",
    "write_fixture_dir",
]
