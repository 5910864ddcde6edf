// Editor session state: one open video, one unsaved draft, one revision.
//
// The session enforces the two UI-level guarantees: a submit is only offered
// when the local draft would pass server validation, and a stale revision
// never silently overwrites someone else's work (a conflict surfaces the
// server copy for the merge prompt).
import { ApiError } from "./api.js";
import { DraftModel } from "./draft.js";
import { passNumber } from "./types.js";
export const DEFAULT_FPS = 2;
export class UiSession {
    constructor(api, projectId, worker) {
        this.api = api;
        this.projectId = projectId;
        this.worker = worker;
        this.mode = "FRAME";
        this.fps = DEFAULT_FPS;
        this.draft = new DraftModel();
        this.videoId = null;
        this.taskId = null;
        this.duration = 0;
        this.revision = -1;
        this.workflowState = "PASS1";
        this.dirty = false;
    }
    async openVideo(video) {
        const state = await this.api.annotation(this.projectId, video.video_id);
        this.videoId = video.video_id;
        this.taskId = state.task_id ?? video.task_id;
        this.duration = video.duration;
        this.adoptServerState(state);
    }
    adoptServerState(state) {
        this.revision = state.revision;
        this.workflowState = state.workflow_state;
        this.draft.replaceAll(state.draft?.segments ?? []);
        this.dirty = false;
    }
    /** Mode switches never touch the draft. */
    setMode(mode) {
        this.mode = mode;
    }
    setFps(fps) {
        this.fps = fps;
    }
    markEdited() {
        this.dirty = true;
    }
    get currentPass() {
        return passNumber(this.workflowState);
    }
    canSubmit() {
        return (this.videoId !== null &&
            this.workflowState !== "DONE" &&
            this.draft.isValid(this.duration));
    }
    async submitPass(complete = true) {
        if (this.videoId === null) {
            return { kind: "invalid", message: "no video open" };
        }
        const problems = this.draft.violations(this.duration);
        if (this.workflowState === "DONE") {
            return { kind: "wrong-pass", message: "video is DONE; no further passes" };
        }
        if (problems.length) {
            return { kind: "invalid", message: problems[0] };
        }
        try {
            const result = await this.api.submit(this.projectId, this.videoId, {
                author_pass: this.currentPass,
                worker: this.worker,
                segments: this.draft.toDto(),
            }, this.revision, complete);
            this.revision = result.revision;
            this.workflowState = result.workflow_state;
            this.dirty = false;
            return { kind: "ok", revision: result.revision, workflowState: result.workflow_state };
        }
        catch (error) {
            if (error instanceof ApiError && error.code === "revision_conflict") {
                const server = await this.api.annotation(this.projectId, this.videoId);
                return { kind: "conflict", server };
            }
            if (error instanceof ApiError && error.code === "wrong_pass") {
                return { kind: "wrong-pass", message: error.message };
            }
            if (error instanceof ApiError && error.code === "validation_error") {
                return { kind: "invalid", message: error.message };
            }
            throw error;
        }
    }
    /**
     * Poll the server's view of this video. Workflow state and revision are
     * only adopted while there are no unsaved local edits, so polling can never
     * eat a draft.
     */
    async refresh() {
        if (this.videoId === null) {
            return null;
        }
        const state = await this.api.annotation(this.projectId, this.videoId);
        if (!this.dirty) {
            this.adoptServerState(state);
        }
        else {
            this.workflowState = state.workflow_state;
        }
        return state;
    }
}
