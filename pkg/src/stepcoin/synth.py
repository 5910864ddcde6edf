"""Seeded synthetic corpora with known optima.

Videos are assembled so that every statistic is calibrated to its configured
mean: segment counts are shifted Poisson (1 + Poisson(mean - 1)), segment
durations log-normal with the configured mean, and each video's duration is
the sum of its segments plus a log-normal slack distributed into the gaps, so
generated annotations are always valid by construction.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence`` with one
spawned child stream per video (corpus and proposal generation use disjoint
spawn namespaces), so output is identical across runs, platforms, and any
parallel schedule.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .annotations import (
    Interval,
    Proposal,
    ProposalSet,
    Segment,
    VideoAnnotation,
    serialize_annotations,
    serialize_proposals,
    validate_annotation,
)
from .errors import InfeasibleConfig, ValidationError
from .lexicon import Domain, Lexicon, Step, Task, serialize_lexicon, steps_of_task, validate_lexicon

# Log-normal shape parameters; only the means are calibration targets.
_SEGMENT_SIGMA = 0.5
_SLACK_SIGMA = 0.6

_CORPUS_NAMESPACE = 0
_PROPOSAL_NAMESPACE = 1


@dataclass(frozen=True)
class NoiseModel:
    """Corruption applied when deriving proposals from ground truth."""

    boundary_jitter_sd: float = 0.0
    score_noise_sd: float = 0.0
    contamination_rate: float = 0.0
    dropout_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.boundary_jitter_sd < 0 or self.score_noise_sd < 0:
            raise ValidationError("noise standard deviations must be >= 0")
        for name in ("contamination_rate", "dropout_rate"):
            rate = getattr(self, name)
            if not (0.0 <= rate <= 1.0):
                raise ValidationError(f"{name} must be in [0, 1], got {rate}")


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    num_videos: int
    lexicon_shape: tuple[int, int, tuple[int, int]] = (4, 5, (3, 5))
    mean_video_duration: float = 141.6
    mean_segments_per_video: float = 3.91
    mean_segment_duration: float = 14.91
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self) -> None:
        if self.num_videos < 1:
            raise ValidationError("num_videos must be >= 1")
        if min(
            self.mean_video_duration,
            self.mean_segments_per_video,
            self.mean_segment_duration,
        ) <= 0:
            raise ValidationError("all means must be positive")
        if self.mean_segments_per_video < 1.0:
            raise ValidationError("mean_segments_per_video must be >= 1")
        domains, tasks_per_domain, (lo, hi) = self.lexicon_shape
        if domains < 1 or tasks_per_domain < 1 or not (1 <= lo <= hi):
            raise ValidationError(f"bad lexicon_shape {self.lexicon_shape}")


def _stream_root(seed: int, namespace: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(namespace,))


def _lognormal_mean(rng: np.random.Generator, mean: float, sigma: float, size=None):
    """Log-normal draws with the requested arithmetic mean."""
    mu = np.log(mean) - sigma * sigma / 2.0
    return rng.lognormal(mu, sigma, size)


def _slack_mean(config: SynthConfig) -> float:
    return config.mean_video_duration - (
        config.mean_segments_per_video * config.mean_segment_duration
    )


def build_synth_lexicon(config: SynthConfig) -> Lexicon:
    """Lexicon for a corpus: shape from config, step counts drawn per task."""
    rng = np.random.Generator(
        np.random.PCG64(_stream_root(config.seed, _CORPUS_NAMESPACE).spawn(1)[0])
    )
    num_domains, tasks_per_domain, (lo, hi) = config.lexicon_shape
    domains = tuple(Domain(id=d, name=f"domain {d:02d}") for d in range(num_domains))
    tasks = tuple(
        Task(id=t, domain_id=t // tasks_per_domain, name=f"task {t:03d}")
        for t in range(num_domains * tasks_per_domain)
    )
    steps = []
    step_id = 0
    for task in tasks:
        count = int(rng.integers(lo, hi + 1))
        for j in range(count):
            steps.append(
                Step(id=step_id, task_id=task.id, phrase=f"step {j + 1} of task {task.id:03d}")
            )
            step_id += 1
    lexicon = Lexicon(
        domains=domains, tasks=tasks, steps=tuple(steps), version=f"synth-{config.seed}"
    )
    validate_lexicon(lexicon)
    return lexicon


def generate_corpus(config: SynthConfig) -> tuple[Lexicon, list[VideoAnnotation]]:
    """Deterministic corpus: one task per video, ordered disjoint segments."""
    if _slack_mean(config) <= 0:
        raise InfeasibleConfig(
            "mean_segments_per_video * mean_segment_duration must stay below "
            f"mean_video_duration (got {config.mean_segments_per_video} * "
            f"{config.mean_segment_duration} vs {config.mean_video_duration})"
        )
    lexicon = build_synth_lexicon(config)
    steps_by_task = {t.id: steps_of_task(lexicon, t.id) for t in lexicon.tasks}

    root = _stream_root(config.seed, _CORPUS_NAMESPACE)
    streams = root.spawn(config.num_videos + 1)  # stream 0 built the lexicon
    annotations = []
    for i in range(config.num_videos):
        rng = np.random.Generator(np.random.PCG64(streams[i + 1]))
        task_id = int(rng.integers(0, lexicon.num_tasks))
        count = 1 + int(rng.poisson(config.mean_segments_per_video - 1.0))
        durations = _lognormal_mean(rng, config.mean_segment_duration, _SEGMENT_SIGMA, count)
        slack = float(_lognormal_mean(rng, _slack_mean(config), _SLACK_SIGMA))
        gaps = rng.dirichlet(np.ones(count + 1)) * slack
        step_pool = steps_by_task[task_id]
        chosen = rng.integers(0, len(step_pool), count)

        segments = []
        cursor = gaps[0]
        for j in range(count):
            start = float(cursor)
            end = float(cursor + durations[j])
            segments.append(
                Segment(interval=Interval(start, end), step_id=step_pool[int(chosen[j])])
            )
            cursor = end + gaps[j + 1]
        annotation = VideoAnnotation(
            video_id=f"synth-{i:05d}",
            task_id=task_id,
            duration=float(cursor),
            segments=tuple(segments),
        )
        validate_annotation(annotation, lexicon)
        annotations.append(annotation)
    return lexicon, annotations


def generate_proposals(
    ground_truth: list[VideoAnnotation],
    lexicon: Lexicon,
    noise: NoiseModel,
    seed: int,
) -> list[ProposalSet]:
    """One proposal per surviving ground-truth segment.

    The score vector is one-hot on the true step plus zero-truncated Gaussian
    noise.  A contaminated proposal additionally gets a strictly dominating
    score (top value plus the one-hot amplitude) planted on a uniformly chosen
    step of another task, the exact cross-task inconsistency the refinement
    mask exists to suppress.
    """
    num_steps = lexicon.num_steps
    off_task_steps = {
        t.id: np.array([s.id for s in lexicon.steps if s.task_id != t.id])
        for t in lexicon.tasks
    }
    streams = _stream_root(seed, _PROPOSAL_NAMESPACE).spawn(len(ground_truth))
    out = []
    for annotation, stream in zip(ground_truth, streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        proposals = []
        for segment in annotation.segments:
            if rng.uniform() < noise.dropout_rate:
                continue
            jitter = rng.normal(0.0, noise.boundary_jitter_sd, 2) if noise.boundary_jitter_sd > 0 else np.zeros(2)
            start = max(0.0, segment.interval.start + float(jitter[0]))
            end = segment.interval.end + float(jitter[1])
            if end <= start:
                end = start + 0.1
            scores = np.maximum(rng.normal(0.0, noise.score_noise_sd, num_steps), 0.0) if noise.score_noise_sd > 0 else np.zeros(num_steps)
            scores[segment.step_id] += 1.0
            if rng.uniform() < noise.contamination_rate:
                pool = off_task_steps[annotation.task_id]
                if len(pool):
                    target = int(pool[int(rng.integers(0, len(pool)))])
                    scores[target] = scores[int(np.argmax(scores))] + 1.0
            proposals.append(Proposal(interval=Interval(start, end), scores=scores))
        out.append(ProposalSet(video_id=annotation.video_id, proposals=tuple(proposals)))
    return out


def write_fixture_dir(config: SynthConfig, out_dir: str | os.PathLike) -> dict[str, str]:
    """Write a self-contained fixture: lexicon, annotations, proposals."""
    lexicon, annotations = generate_corpus(config)
    proposals = generate_proposals(annotations, lexicon, config.noise, config.seed)
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "lexicon": os.path.join(out_dir, "lexicon.json"),
        "annotations": os.path.join(out_dir, "annotations.json"),
        "proposals": os.path.join(out_dir, "proposals.json"),
    }
    with open(paths["lexicon"], "wb") as handle:
        handle.write(serialize_lexicon(lexicon))
    with open(paths["annotations"], "wb") as handle:
        handle.write(serialize_annotations(annotations))
    with open(paths["proposals"], "wb") as handle:
        handle.write(serialize_proposals(proposals))
    return paths
