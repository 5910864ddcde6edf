// DTOs mirroring the annotation service API (see docs/formats.md in the repo root).

export type WorkflowState = "PASS1" | "PASS2" | "PASS3" | "DONE";

export interface VideoSummary {
  video_id: string;
  duration: number;
  frame_dir: string;
  native_fps_available: number[];
  workflow_state: WorkflowState;
  revision: number;
  task_id: number | null;
  media_path: string | null;
}

export interface FrameRef {
  time: number;
  url: string;
}

export interface SegmentDto {
  start: number;
  end: number;
  step_id: number;
}

export interface DraftDto {
  video_id?: string;
  author_pass: number;
  worker: string;
  segments: SegmentDto[];
  saved_at?: number;
}

export interface AnnotationState {
  video_id: string;
  revision: number;
  workflow_state: WorkflowState;
  task_id: number | null;
  draft: DraftDto | null;
}

export interface LexiconStep {
  id: number;
  task_id: number;
  phrase: string;
}

export interface LexiconTask {
  id: number;
  domain_id: number;
  name: string;
}

export interface LexiconDto {
  version: string;
  domains: { id: number; name: string }[];
  tasks: LexiconTask[];
  steps: LexiconStep[];
}

/** 1..3 for the editing passes; 0 once the video is DONE. */
export function passNumber(state: WorkflowState): number {
  switch (state) {
    case "PASS1":
      return 1;
    case "PASS2":
      return 2;
    case "PASS3":
      return 3;
    case "DONE":
      return 0;
  }
}

export const WORKFLOW_ORDER: WorkflowState[] = ["PASS1", "PASS2", "PASS3", "DONE"];
