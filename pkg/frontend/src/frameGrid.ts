// Frame-grid selection logic and rendering. The grid pages at 100 frames so
// long videos stay responsive; selection is two clicks (start frame, then end
// frame), after which the caller attaches the picked step label.

import type { FrameRef } from "./types.js";

export const FRAMES_PER_PAGE = 100;

export interface GridSelection {
  anchor: number | null;
}

export type ClickOutcome =
  | { kind: "anchored"; selection: GridSelection }
  | { kind: "range"; startFrame: number; endFrame: number; selection: GridSelection }
  | { kind: "rejected"; reason: "end-not-after-start"; selection: GridSelection };

/**
 * First click anchors the start frame; the second completes the range. A
 * second click at or before the anchor rejects the selection (the segment's
 * end frame must come strictly after its start frame) and clears the anchor.
 */
export function clickFrame(selection: GridSelection, index: number): ClickOutcome {
  if (selection.anchor === null) {
    return { kind: "anchored", selection: { anchor: index } };
  }
  if (index <= selection.anchor) {
    return { kind: "rejected", reason: "end-not-after-start", selection: { anchor: null } };
  }
  return {
    kind: "range",
    startFrame: selection.anchor,
    endFrame: index,
    selection: { anchor: null },
  };
}

export function pageCount(totalFrames: number): number {
  return Math.max(1, Math.ceil(totalFrames / FRAMES_PER_PAGE));
}

export function pageSlice(frames: FrameRef[], page: number): { offset: number; frames: FrameRef[] } {
  const offset = page * FRAMES_PER_PAGE;
  return { offset, frames: frames.slice(offset, offset + FRAMES_PER_PAGE) };
}

export interface FrameHighlight {
  startFrame: number;
  endFrame: number;
  color: string;
}

export function renderFrameGrid(
  container: HTMLElement,
  frames: FrameRef[],
  page: number,
  selection: GridSelection,
  highlights: FrameHighlight[],
  onClick: (index: number) => void,
): void {
  container.textContent = "";
  const { offset, frames: visible } = pageSlice(frames, page);
  for (let i = 0; i < visible.length; i++) {
    const index = offset + i;
    const ref = visible[i]!;
    const cell = document.createElement("div");
    cell.className = "frame-cell";
    cell.dataset.frame = String(index);
    const img = document.createElement("img");
    img.src = ref.url;
    img.loading = "lazy";
    img.alt = `frame ${index}`;
    const label = document.createElement("span");
    label.className = "frame-time";
    label.textContent = ref.time.toFixed(1) + "s";
    cell.append(img, label);
    if (selection.anchor === index) {
      cell.classList.add("anchored");
    }
    for (const h of highlights) {
      if (index >= h.startFrame && index <= h.endFrame) {
        cell.style.outline = `3px solid ${h.color}`;
        cell.classList.add("in-segment");
      }
    }
    cell.addEventListener("click", () => onClick(index));
    container.append(cell);
  }
}
