"""Demo project scaffolding for `stepcoin serve --demo`.

Creates one small project with placeholder frame images so the browser UI can
be exercised without any real video ingestion.
"""

from __future__ import annotations

import os

from .store import ProjectStore, STORE_FILENAME, VideoEntry
from .synth import SynthConfig, build_synth_lexicon

# 8x8 gray JPEG, enough for an <img> tag to render.
_TINY_JPEG = bytes.fromhex(
    "ffd8ffe000104a46494600010100000100010000ffdb004300080606070605080707"
    "070909080a0c140d0c0b0b0c1912130f141d1a1f1e1d1a1c1c20242e2720222c231c"
    "1c2837292c30313434341f27393d38323c2e333432ffdb0043010909090c0b0c180d"
    "0d1832211c21323232323232323232323232323232323232323232323232323232323"
    "2323232323232323232323232323232323232323232ffc000110800080008030122000"
    "21101031101ffc4001f0000010501010101010100000000000000000102030405060708"
    "090a0bffc400b5100002010303020403050504040000017d0102030004110512213141"
    "0613516107227114328191a1082342b1c11552d1f02433627282090a161718191a2526"
    "2728292a3435363738393a434445464748494a535455565758595a636465666768696a"
    "737475767778797a838485868788898a92939495969798999aa2a3a4a5a6a7a8a9aab2"
    "b3b4b5b6b7b8b9bac2c3c4c5c6c7c8c9cad2d3d4d5d6d7d8d9dae1e2e3e4e5e6e7e8e9"
    "eaf1f2f3f4f5f6f7f8f9faffc4001f01000301010101010101010100000000000001020"
    "30405060708090a0bffc400b511000201020404030407050404000102770001020311040"
    "52131061241510761711322328108144291a1b1c109233352f0156272d10a162434e125f"
    "11718191a262728292a35363738393a434445464748494a535455565758595a63646566"
    "6768696a737475767778797a82838485868788898a92939495969798999aa2a3a4a5a6a7"
    "a8a9aab2b3b4b5b6b7b8b9bac2c3c4c5c6c7c8c9cad2d3d4d5d6d7d8d9dae2e3e4e5e6e7"
    "e8e9eaf2f3f4f5f6f7f8f9faffda000c03010002110311003f00828a28ad047fffd9"
)

DEMO_PROJECT_ID = "demo"


def ensure_demo_project(data_dir: str | os.PathLike, num_videos: int = 3) -> str:
    """Create the demo project unless it already exists; returns its path."""
    directory = os.path.join(os.fspath(data_dir), DEMO_PROJECT_ID)
    if os.path.isfile(os.path.join(directory, STORE_FILENAME)):
        return directory
    lexicon = build_synth_lexicon(SynthConfig(seed=7, num_videos=1))
    videos = []
    for i in range(num_videos):
        video_id = f"demo-{i:03d}"
        duration = 10.0
        frame_dir = os.path.join(directory, "frames", video_id)
        rates = (2.0, 10.0)
        for rate in rates:
            rate_dir = os.path.join(frame_dir, format(rate, "g"))
            os.makedirs(rate_dir, exist_ok=True)
            for k in range(int(duration * rate)):
                with open(os.path.join(rate_dir, f"{k:06d}.jpg"), "wb") as handle:
                    handle.write(_TINY_JPEG)
        videos.append(
            VideoEntry(
                video_id=video_id,
                duration=duration,
                frame_dir=frame_dir,
                native_fps_available=rates,
                task_id=i % lexicon.num_tasks,
            )
        )
    ProjectStore.create(directory, DEMO_PROJECT_ID, lexicon, videos)
    return directory
