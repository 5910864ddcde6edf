// Video-mode timeline: segment blocks over a time axis with draggable
// boundaries. Drag math lives in DraftModel.dragBoundary (snap + clamp); this
// module only maps pointer positions to times and repaints.

import type { DraftModel } from "./draft.js";

export function stepColor(stepId: number): string {
  return `hsl(${(stepId * 47) % 360},65%,55%)`;
}

export interface TimelineCallbacks {
  onChanged: () => void;
  onSelect: (index: number) => void;
}

export function renderTimeline(
  container: HTMLElement,
  draft: DraftModel,
  duration: number,
  callbacks: TimelineCallbacks,
): void {
  container.textContent = "";
  const lane = document.createElement("div");
  lane.className = "timeline-lane";
  const toTime = (clientX: number): number => {
    const rect = lane.getBoundingClientRect();
    const ratio = (clientX - rect.left) / Math.max(rect.width, 1);
    return Math.min(Math.max(ratio, 0), 1) * duration;
  };

  draft.segments.forEach((segment, index) => {
    const block = document.createElement("div");
    block.className = "timeline-block";
    block.style.left = `${(segment.start / duration) * 100}%`;
    block.style.width = `${((segment.end - segment.start) / duration) * 100}%`;
    block.style.background = stepColor(segment.stepId);
    block.title = `[${segment.start.toFixed(1)}, ${segment.end.toFixed(1)}) step ${segment.stepId}`;
    block.addEventListener("click", () => callbacks.onSelect(index));

    for (const edge of ["start", "end"] as const) {
      const handle = document.createElement("div");
      handle.className = `timeline-handle ${edge}`;
      handle.addEventListener("pointerdown", (down) => {
        down.preventDefault();
        handle.setPointerCapture(down.pointerId);
        const move = (event: PointerEvent) => {
          draft.dragBoundary(index, edge, toTime(event.clientX), duration);
          callbacks.onChanged();
        };
        const up = () => {
          handle.removeEventListener("pointermove", move);
          handle.removeEventListener("pointerup", up);
          callbacks.onChanged();
        };
        handle.addEventListener("pointermove", move);
        handle.addEventListener("pointerup", up);
      });
      block.append(handle);
    }
    lane.append(block);
  });

  const axis = document.createElement("div");
  axis.className = "timeline-axis";
  for (let t = 0; t <= duration; t += Math.max(1, Math.round(duration / 10))) {
    const tick = document.createElement("span");
    tick.style.left = `${(t / duration) * 100}%`;
    tick.textContent = `${t}s`;
    axis.append(tick);
  }
  container.append(lane, axis);
}
