// Local draft model shared by both editing modes.
//
// The invariant maintained here mirrors the server's validators exactly:
// segments are kept ordered by start, pairwise non-overlapping (touching is
// fine), inside [0, duration], and never empty. A draft that this module
// accepts is a draft the server will accept, so the submit button can be
// gated purely on local state.

import type { SegmentDto } from "./types.js";

export interface DraftSegment {
  start: number;
  end: number;
  stepId: number;
}

export type AddRejection = "end-not-after-start" | "overlap";

export type AddResult =
  | { ok: true; index: number }
  | { ok: false; reason: AddRejection; conflictIndex?: number };

/** Timeline edits snap to a 0.1 s grid. */
export const SNAP = 0.1;

export function snapTime(t: number): number {
  return Math.round(t * 10) / 10;
}

/** Half-open interval of the frames startFrame..endFrame inclusive. */
export function framesToInterval(
  startFrame: number,
  endFrame: number,
  fps: number,
): { start: number; end: number } {
  return { start: startFrame / fps, end: (endFrame + 1) / fps };
}

function overlaps(aStart: number, aEnd: number, bStart: number, bEnd: number): boolean {
  return Math.max(aStart, bStart) < Math.min(aEnd, bEnd);
}

export class DraftModel {
  private list: DraftSegment[] = [];

  get segments(): readonly DraftSegment[] {
    return this.list;
  }

  replaceAll(segments: SegmentDto[]): void {
    this.list = segments
      .map((s) => ({ start: s.start, end: s.end, stepId: s.step_id }))
      .sort((a, b) => a.start - b.start);
  }

  clear(): void {
    this.list = [];
  }

  toDto(): SegmentDto[] {
    return this.list.map((s) => ({ start: s.start, end: s.end, step_id: s.stepId }));
  }

  /** Index of the first segment overlapping [start, end), or -1. */
  findOverlap(start: number, end: number, ignoreIndex = -1): number {
    for (let i = 0; i < this.list.length; i++) {
      const s = this.list[i]!;
      if (i !== ignoreIndex && overlaps(start, end, s.start, s.end)) {
        return i;
      }
    }
    return -1;
  }

  addSegment(start: number, end: number, stepId: number): AddResult {
    if (!(start < end)) {
      return { ok: false, reason: "end-not-after-start" };
    }
    const conflict = this.findOverlap(start, end);
    if (conflict >= 0) {
      return { ok: false, reason: "overlap", conflictIndex: conflict };
    }
    this.list.push({ start, end, stepId });
    this.list.sort((a, b) => a.start - b.start);
    return { ok: true, index: this.list.findIndex((s) => s.start === start && s.end === end) };
  }

  /**
   * Frame-mode selection: the segment covers the clicked start frame through
   * the clicked end frame inclusive, i.e. [start/fps, (end+1)/fps). The end
   * frame must come strictly after the start frame; overlap with an existing
   * segment rejects the selection without touching the draft.
   */
  addFromFrames(startFrame: number, endFrame: number, fps: number, stepId: number): AddResult {
    if (endFrame <= startFrame) {
      return { ok: false, reason: "end-not-after-start" };
    }
    const { start, end } = framesToInterval(startFrame, endFrame, fps);
    return this.addSegment(start, end, stepId);
  }

  removeSegment(index: number): void {
    this.list.splice(index, 1);
  }

  setStep(index: number, stepId: number): void {
    const segment = this.list[index];
    if (segment) {
      segment.stepId = stepId;
    }
  }

  /**
   * Video-mode boundary drag. The target snaps to the 0.1 s grid and is then
   * clamped so the segment keeps positive length and never crosses a
   * neighbour or the video bounds; dragging never errors.
   */
  dragBoundary(
    index: number,
    edge: "start" | "end",
    target: number,
    duration: number,
  ): DraftSegment {
    const segment = this.list[index];
    if (!segment) {
      throw new Error(`no draft segment at index ${index}`);
    }
    const snapped = snapTime(target);
    if (edge === "end") {
      const lower = snapTime(segment.start + SNAP);
      const next = this.list[index + 1];
      const upper = snapTime(next ? next.start : duration);
      segment.end = Math.min(Math.max(snapped, lower), upper);
    } else {
      const upper = snapTime(segment.end - SNAP);
      const previous = this.list[index - 1];
      const lower = snapTime(previous ? previous.end : 0);
      segment.start = Math.max(Math.min(snapped, upper), lower);
    }
    return { ...segment };
  }

  /** Mirrors the server-side draft checks; true means a submit will pass. */
  isValid(duration: number): boolean {
    return this.violations(duration).length === 0;
  }

  violations(duration: number): string[] {
    const problems: string[] = [];
    for (let i = 0; i < this.list.length; i++) {
      const s = this.list[i]!;
      if (!(s.start >= 0 && s.start < s.end)) {
        problems.push(`segment ${i}: empty or negative interval`);
      }
      if (s.end > duration + 1e-9) {
        problems.push(`segment ${i}: ends past duration ${duration}`);
      }
      const prev = this.list[i - 1];
      if (prev && s.start < prev.end - 1e-9) {
        problems.push(`segment ${i}: overlaps the previous segment`);
      }
    }
    return problems;
  }
}
