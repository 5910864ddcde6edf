"""Timeline visualization: ground truth and detection runs as parallel lanes.

SVG output is dependency-free and deterministic, so golden tests can diff it;
the ASCII rendering targets terminals and log files.
"""

from __future__ import annotations

from .annotations import Interval, VideoAnnotation
from .consistency import Detection
from .lexicon import Lexicon

_LANE_HEIGHT = 30
_LANE_GAP = 8
_LABEL_WIDTH = 110
_PLOT_WIDTH = 720
_LEGEND_ROW = 18


def step_color(step_id: int) -> str:
    """Deterministic color per step id, spread around the hue wheel."""
    hue = (step_id * 47) % 360
    return f"hsl({hue},65%,55%)"


def _blocks_of(items) -> list[tuple[Interval, int]]:
    return [(it.interval, it.step_id) for it in items]


def render_timeline_svg(
    annotation: VideoAnnotation,
    runs: list[tuple[str, list[Detection]]],
    lexicon: Lexicon | None = None,
) -> str:
    """One lane for ground truth plus one per (name, detections) run."""
    lanes: list[tuple[str, list[tuple[Interval, int]]]] = [
        ("GT", _blocks_of(annotation.segments))
    ]
    lanes.extend((name, _blocks_of(dets)) for name, dets in runs)

    duration = max(annotation.duration, 1e-9)
    scale = _PLOT_WIDTH / duration
    used_steps = sorted({step for _, blocks in lanes for _, step in blocks})
    legend_height = _LEGEND_ROW * len(used_steps) + (10 if used_steps else 0)
    height = len(lanes) * (_LANE_HEIGHT + _LANE_GAP) + legend_height + 30
    width = _LABEL_WIDTH + _PLOT_WIDTH + 20

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{_LABEL_WIDTH}" y="14" fill="#444">{_escape(annotation.video_id)} '
        f"({duration:.1f}s)</text>",
    ]
    y = 24
    for name, blocks in lanes:
        parts.append('<g class="lane">')
        parts.append(
            f'<text class="lane-label" x="4" y="{y + _LANE_HEIGHT / 2 + 4}" '
            f'fill="#222">{_escape(name)}</text>'
        )
        parts.append(
            f'<rect x="{_LABEL_WIDTH}" y="{y}" width="{_PLOT_WIDTH}" '
            f'height="{_LANE_HEIGHT}" fill="#f2f2f2"/>'
        )
        for interval, step in blocks:
            x = _LABEL_WIDTH + interval.start * scale
            w = max(interval.length * scale, 1.0)
            title = _step_phrase(lexicon, step)
            parts.append(
                f'<rect class="block" x="{x:.2f}" y="{y + 2}" width="{w:.2f}" '
                f'height="{_LANE_HEIGHT - 4}" fill="{step_color(step)}">'
                f"<title>{_escape(title)}</title></rect>"
            )
        parts.append("</g>")
        y += _LANE_HEIGHT + _LANE_GAP
    y += 6
    for step in used_steps:
        parts.append(
            f'<rect x="{_LABEL_WIDTH}" y="{y}" width="12" height="12" '
            f'fill="{step_color(step)}"/>'
        )
        parts.append(
            f'<text x="{_LABEL_WIDTH + 18}" y="{y + 10}" fill="#222">'
            f"{_escape(_step_phrase(lexicon, step))}</text>"
        )
        y += _LEGEND_ROW
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_timeline_ascii(
    annotation: VideoAnnotation,
    runs: list[tuple[str, list[Detection]]],
    lexicon: Lexicon | None = None,
    columns: int = 72,
) -> str:
    """Aligned character lanes; each used step gets a letter, background '.'."""
    lanes: list[tuple[str, list[tuple[Interval, int]]]] = [
        ("GT", _blocks_of(annotation.segments))
    ]
    lanes.extend((name, _blocks_of(dets)) for name, dets in runs)
    used_steps = sorted({step for _, blocks in lanes for _, step in blocks})
    glyphs = {
        step: chr(ord("A") + i % 26) if i < 26 else "#"
        for i, step in enumerate(used_steps)
    }
    duration = max(annotation.duration, 1e-9)
    label_width = max((len(name) for name, _ in lanes), default=2) + 1

    lines = [f"{annotation.video_id} ({duration:.1f}s)"]
    for name, blocks in lanes:
        row = ["."] * columns
        for interval, step in blocks:
            first = int(interval.start / duration * columns)
            last = int(min(interval.end, duration) / duration * columns)
            last = max(first + 1, last)
            for c in range(first, min(last, columns)):
                row[c] = glyphs[step]
        lines.append(f"{name.ljust(label_width)}|{''.join(row)}|")
    for step in used_steps:
        lines.append(f"  {glyphs[step]} = {_step_phrase(lexicon, step)}")
    return "\n".join(lines) + "\n"


def _step_phrase(lexicon: Lexicon | None, step_id: int) -> str:
    if lexicon is not None and 0 <= step_id < lexicon.num_steps:
        return lexicon.steps[step_id].phrase
    return f"step {step_id}"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
