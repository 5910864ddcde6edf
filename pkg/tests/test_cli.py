from __future__ import annotations

import hashlib
import json
import os
import signal
import subprocess
import sys
import time
import urllib.request

import numpy as np
import pytest

from stepcoin.annotations import (
    serialize_annotations,
    serialize_frame_labels,
    FrameLabelSequence,
    Interval,
    Segment,
    VideoAnnotation,
)
from stepcoin.cli import main
from stepcoin.lexicon import serialize_lexicon
from stepcoin.synth import NoiseModel, SynthConfig, write_fixture_dir

from .conftest import make_lexicon


def write(path, payload: bytes):
    with open(path, "wb") as handle:
        handle.write(payload)
    return str(path)


@pytest.fixture
def fixture_dir(tmp_path):
    config = SynthConfig(seed=1, num_videos=12)
    write_fixture_dir(config, tmp_path / "fx")
    return tmp_path / "fx"


def test_validate_ok(fixture_dir, capsys):
    code = main(
        ["validate", str(fixture_dir / "lexicon.json"), str(fixture_dir / "annotations.json")]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "lexicon: OK" in out
    assert "annotations: OK" in out


def test_validate_overlap_exit_1(tmp_path, capsys):
    lexicon = make_lexicon([2])
    ann = {
        "format": "stepcoin-ann-v1",
        "videos": {
            "v": {
                "task_id": 0,
                "duration": 10.0,
                "segments": [
                    {"start": 0.0, "end": 5.0, "step_id": 0},
                    {"start": 4.0, "end": 6.0, "step_id": 1},
                ],
            }
        },
    }
    lex_path = write(tmp_path / "lex.json", serialize_lexicon(lexicon))
    ann_path = write(tmp_path / "ann.json", json.dumps(ann).encode())
    code = main(["validate", lex_path, ann_path])
    err = capsys.readouterr().err
    assert code == 1
    assert "overlap" in err


def test_validate_missing_file_exit_2(tmp_path, capsys):
    code = main(["validate", str(tmp_path / "none.json"), str(tmp_path / "none2.json")])
    assert code == 2


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["eval-loc"])
    assert exc.value.code == 2


def test_eval_loc_zero_noise_all_hundred(fixture_dir, tmp_path, capsys):
    prefix = str(tmp_path / "report")
    code = main(
        [
            "eval-loc",
            str(fixture_dir / "annotations.json"),
            str(fixture_dir / "proposals.json"),
            "--lexicon",
            str(fixture_dir / "lexicon.json"),
            "--out-prefix",
            prefix,
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    map_line = [ln for ln in out.splitlines() if ln.startswith("mAP")][0]
    assert map_line.split()[1:] == ["100.00"] * 5
    report = json.loads(open(prefix + ".json").read())
    assert report["format"] == "stepcoin-report-v1"
    assert all(v["map"] == 100.0 for v in report["per_alpha"].values())
    assert os.path.exists(prefix + ".txt")


def test_eval_loc_alpha_subset(fixture_dir, tmp_path, capsys):
    prefix = str(tmp_path / "report")
    code = main(
        [
            "eval-loc",
            str(fixture_dir / "annotations.json"),
            str(fixture_dir / "proposals.json"),
            "--lexicon",
            str(fixture_dir / "lexicon.json"),
            "--alphas",
            "0.1,0.5",
            "--out-prefix",
            prefix,
        ]
    )
    assert code == 0
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header[1:] == ["@0.10", "@0.50"]
    report = json.loads(open(prefix + ".json").read())
    assert sorted(report["per_alpha"]) == ["0.1", "0.5"]


def test_eval_loc_with_tc_improves_contaminated(tmp_path, capsys):
    config = SynthConfig(
        seed=4,
        num_videos=40,
        noise=NoiseModel(
            boundary_jitter_sd=1.0, score_noise_sd=0.1, contamination_rate=0.3
        ),
    )
    write_fixture_dir(config, tmp_path / "fx")
    results = {}
    for label, flags in (("base", []), ("tc", ["--with-tc"])):
        prefix = str(tmp_path / f"report-{label}")
        code = main(
            [
                "eval-loc",
                str(tmp_path / "fx" / "annotations.json"),
                str(tmp_path / "fx" / "proposals.json"),
                "--lexicon",
                str(tmp_path / "fx" / "lexicon.json"),
                "--out-prefix",
                prefix,
                *flags,
            ]
        )
        assert code == 0
        results[label] = json.loads(open(prefix + ".json").read())
    capsys.readouterr()
    assert (
        results["tc"]["per_alpha"]["0.5"]["map"]
        > results["base"]["per_alpha"]["0.5"]["map"]
    )


def test_eval_seg_perfect(tmp_path, capsys):
    annotation = VideoAnnotation(
        video_id="v",
        task_id=0,
        duration=10.0,
        segments=(Segment(Interval(0.0, 5.0), 0),),
    )
    from stepcoin.annotations import segments_to_frame_labels

    gt_path = write(tmp_path / "gt.json", serialize_annotations([annotation]))
    seq = segments_to_frame_labels(annotation, fps=10.0)
    pred_path = write(tmp_path / "pred.json", serialize_frame_labels([seq]))
    code = main(["eval-seg", gt_path, pred_path])
    out = capsys.readouterr().out
    assert code == 0
    assert "frame accuracy: 100.00" in out


def test_eval_seg_all_background_on_half_covered(tmp_path, capsys):
    annotation = VideoAnnotation(
        video_id="v",
        task_id=0,
        duration=10.0,
        segments=(Segment(Interval(0.0, 5.0), 0),),
    )
    gt_path = write(tmp_path / "gt.json", serialize_annotations([annotation]))
    pred = FrameLabelSequence(video_id="v", fps=10.0, labels=np.full(100, -1))
    pred_path = write(tmp_path / "pred.json", serialize_frame_labels([pred]))
    code = main(["eval-seg", gt_path, pred_path])
    out = capsys.readouterr().out
    assert code == 0
    assert "frame accuracy: 50.00" in out


def test_eval_seg_random_778_label_baseline(tmp_path, capsys):
    from stepcoin.lexicon import reference_shaped_lexicon, steps_of_task

    lexicon = reference_shaped_lexicon()
    annotations = []
    for i in range(200):
        task_id = i % lexicon.num_tasks
        steps = steps_of_task(lexicon, task_id)
        # fully covered: every frame carries a step label
        segments = tuple(
            Segment(Interval(15.0 * j, 15.0 * (j + 1)), steps[j % len(steps)])
            for j in range(4)
        )
        annotations.append(
            VideoAnnotation(
                video_id=f"v{i:03d}", task_id=task_id, duration=60.0, segments=segments
            )
        )
    gt_path = write(tmp_path / "gt.json", serialize_annotations(annotations))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(424242)))
    predictions = [
        FrameLabelSequence(
            video_id=a.video_id, fps=10.0, labels=rng.integers(0, 778, 600)
        )
        for a in annotations
    ]
    pred_path = write(tmp_path / "pred.json", serialize_frame_labels(predictions))
    code = main(["eval-seg", gt_path, pred_path])
    out = capsys.readouterr().out
    assert code == 0
    reported = float(out.split("frame accuracy:")[1])
    assert abs(reported - 0.13) <= 0.05


def test_eval_seg_length_mismatch_exit_1(tmp_path, capsys):
    annotation = VideoAnnotation(
        video_id="v", task_id=0, duration=10.0, segments=()
    )
    gt_path = write(tmp_path / "gt.json", serialize_annotations([annotation]))
    pred = FrameLabelSequence(video_id="v", fps=10.0, labels=np.full(42, -1))
    pred_path = write(tmp_path / "pred.json", serialize_frame_labels([pred]))
    assert main(["eval-seg", gt_path, pred_path]) == 1


def test_refine_then_render(fixture_dir, tmp_path, capsys):
    det_path = str(tmp_path / "dets.json")
    code = main(
        [
            "refine",
            str(fixture_dir / "proposals.json"),
            "--lexicon",
            str(fixture_dir / "lexicon.json"),
            "--out",
            det_path,
        ]
    )
    assert code == 0
    doc = json.loads(open(det_path).read())
    assert doc["format"] == "stepcoin-det-v1"
    video_id = sorted(doc["videos"])[0]
    svg_path = str(tmp_path / "timeline.svg")
    code = main(
        [
            "render",
            str(fixture_dir / "annotations.json"),
            det_path,
            "--video",
            video_id,
            "--lexicon",
            str(fixture_dir / "lexicon.json"),
            "--out",
            svg_path,
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    svg = open(svg_path).read()
    assert svg.count('class="lane"') == 2
    assert video_id in out


def test_render_unknown_video_exit_1(fixture_dir, tmp_path, capsys):
    det_path = str(tmp_path / "dets.json")
    main(
        [
            "refine",
            str(fixture_dir / "proposals.json"),
            "--lexicon",
            str(fixture_dir / "lexicon.json"),
            "--out",
            det_path,
        ]
    )
    capsys.readouterr()
    code = main(
        [
            "render",
            str(fixture_dir / "annotations.json"),
            det_path,
            "--video",
            "ghost",
            "--out",
            str(tmp_path / "x.svg"),
        ]
    )
    assert code == 1


def dir_checksum(path):
    digest = hashlib.sha256()
    for name in sorted(os.listdir(path)):
        digest.update(name.encode())
        digest.update(open(os.path.join(path, name), "rb").read())
    return digest.hexdigest()


def test_synth_deterministic_directories(tmp_path, capsys):
    args = ["synth", "--seed", "9", "--videos", "15"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    assert dir_checksum(tmp_path / "a") == dir_checksum(tmp_path / "b")


def test_synth_infeasible_exit_1(tmp_path, capsys):
    code = main(
        [
            "synth",
            "--seed",
            "1",
            "--videos",
            "2",
            "--mean-duration",
            "10",
            "--mean-segments",
            "4",
            "--mean-segment-duration",
            "20",
            "--out",
            str(tmp_path / "bad"),
        ]
    )
    assert code == 1


def test_synth_config_file(tmp_path, capsys):
    config_path = write(
        tmp_path / "cfg.json",
        json.dumps(
            {
                "seed": 3,
                "num_videos": 4,
                "lexicon_shape": [2, 2, [2, 3]],
                "noise": {"contamination_rate": 0.5},
            }
        ).encode(),
    )
    code = main(["synth", "--config", config_path, "--out", str(tmp_path / "cfg-out")])
    assert code == 0
    assert os.path.exists(tmp_path / "cfg-out" / "proposals.json")


def test_serve_health_endpoint(tmp_path):
    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "stepcoin.cli",
            "serve",
            "--data-dir",
            str(tmp_path),
            "--port",
            str(port),
            "--demo",
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.time() + 10
        status = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(
                    f"http://127.0.0.1:{port}/healthz", timeout=1
                ) as response:
                    status = json.loads(response.read())
                    break
            except OSError:
                time.sleep(0.1)
        assert status == {"status": "ok"}
        with urllib.request.urlopen(
            f"http://127.0.0.1:{port}/api/projects/demo/videos", timeout=2
        ) as response:
            videos = json.loads(response.read())["videos"]
        assert len(videos) == 3
    finally:
        proc.send_signal(signal.SIGINT)
        proc.wait(timeout=5)


def _free_port() -> int:
    import socket

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]
