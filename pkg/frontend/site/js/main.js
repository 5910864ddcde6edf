// App shell: project browser, the two editing modes, submit/conflict flow.
import { ApiClient, ApiError } from "./api.js";
import { clickFrame, pageCount, renderFrameGrid } from "./frameGrid.js";
import { UiSession } from "./session.js";
import { renderTimeline, stepColor } from "./timelineView.js";
const POLL_INTERVAL_MS = 3000;
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
class App {
    constructor() {
        this.api = new ApiClient("");
        this.lexicon = null;
        this.videos = [];
        this.frames = [];
        this.page = 0;
        this.selection = { anchor: null };
        this.pickedStep = null;
        this.status = "";
        this.pollTimer = null;
        this.root = document.getElementById("app");
        const params = new URLSearchParams(location.search);
        this.projectId = params.get("project") ?? "demo";
        this.worker = params.get("worker") ?? `worker-${Math.floor(Math.random() * 1000)}`;
        this.session = new UiSession(this.api, this.projectId, this.worker);
    }
    async start() {
        try {
            [this.videos, this.lexicon] = await Promise.all([
                this.api.listVideos(this.projectId),
                this.api.lexicon(this.projectId),
            ]);
        }
        catch (error) {
            this.root.textContent = `cannot load project '${this.projectId}': ${String(error)}`;
            return;
        }
        this.render();
        this.pollTimer = window.setInterval(() => void this.poll(), POLL_INTERVAL_MS);
    }
    taskSteps() {
        if (!this.lexicon || this.session.taskId === null)
            return [];
        return this.lexicon.steps.filter((s) => s.task_id === this.session.taskId);
    }
    async openVideo(video) {
        await this.session.openVideo(video);
        this.frames = await this.api.frames(this.projectId, video.video_id, this.session.fps);
        this.page = 0;
        this.selection = { anchor: null };
        const first = this.taskSteps()[0];
        this.pickedStep = first ? first.id : null;
        this.status = "";
        this.render();
    }
    async poll() {
        try {
            this.videos = await this.api.listVideos(this.projectId);
            if (this.session.videoId) {
                await this.session.refresh();
            }
            this.render();
        }
        catch {
            // transient poll errors are invisible; the next tick retries
        }
    }
    handleFrameClick(index) {
        const outcome = clickFrame(this.selection, index);
        this.selection = outcome.selection;
        if (outcome.kind === "rejected") {
            this.status = "end frame must come after the start frame";
        }
        else if (outcome.kind === "range") {
            if (this.pickedStep === null) {
                this.status = "pick a step label first";
            }
            else {
                const added = this.session.draft.addFromFrames(outcome.startFrame, outcome.endFrame, this.session.fps, this.pickedStep);
                if (added.ok) {
                    this.session.markEdited();
                    this.status = "";
                }
                else {
                    this.status =
                        added.reason === "overlap"
                            ? "selection overlaps an existing segment"
                            : "end frame must come after the start frame";
                }
            }
        }
        else {
            this.status = `start frame ${index} anchored; click the end frame`;
        }
        this.render();
    }
    async changeFps(fps) {
        this.session.setFps(fps);
        if (this.session.videoId) {
            try {
                this.frames = await this.api.frames(this.projectId, this.session.videoId, fps);
                this.page = 0;
                this.status = "";
            }
            catch (error) {
                this.status = error instanceof ApiError ? error.message : String(error);
            }
        }
        this.render();
    }
    async submit(complete) {
        const outcome = await this.session.submitPass(complete);
        if (outcome.kind === "ok") {
            this.status = `saved revision ${outcome.revision}; state ${outcome.workflowState}`;
            this.videos = await this.api.listVideos(this.projectId);
        }
        else if (outcome.kind === "conflict") {
            this.renderConflict(outcome.server);
            return;
        }
        else {
            this.status = outcome.message;
        }
        this.render();
    }
    renderConflict(server) {
        const dialog = el("div", "conflict-dialog");
        dialog.append(el("h3", undefined, "someone else saved first"), el("p", undefined, `server is at revision ${server.revision}; your unsaved edits are keeping the editor open.`));
        const serverList = el("ul", "server-copy");
        for (const s of server.draft?.segments ?? []) {
            serverList.append(el("li", undefined, `[${s.start.toFixed(1)}, ${s.end.toFixed(1)}) step ${s.step_id}`));
        }
        dialog.append(el("p", undefined, "server copy:"), serverList);
        const adopt = el("button", undefined, "discard mine, take server copy");
        adopt.addEventListener("click", () => {
            this.session.adoptServerState({
                video_id: this.session.videoId,
                revision: server.revision,
                workflow_state: this.session.workflowState,
                task_id: this.session.taskId,
                draft: server.draft
                    ? { author_pass: 0, worker: "", segments: server.draft.segments }
                    : null,
            });
            dialog.remove();
            this.render();
        });
        const keep = el("button", undefined, "keep editing mine");
        keep.addEventListener("click", () => {
            this.session.revision = server.revision; // rebase; next submit wins or re-conflicts
            dialog.remove();
            this.render();
        });
        dialog.append(adopt, keep);
        this.root.append(dialog);
    }
    render() {
        this.root.textContent = "";
        const header = el("header");
        header.append(el("h1", undefined, "step annotation"), el("span", "meta", `project ${this.projectId} · ${this.worker}`));
        this.root.append(header);
        const layout = el("div", "layout");
        layout.append(this.renderVideoList(), this.renderEditor());
        this.root.append(layout);
        if (this.status) {
            this.root.append(el("div", "status", this.status));
        }
    }
    renderVideoList() {
        const panel = el("nav", "video-list");
        for (const video of this.videos) {
            const row = el("div", "video-row");
            if (video.video_id === this.session.videoId)
                row.classList.add("open");
            const badge = el("span", `badge ${video.workflow_state.toLowerCase()}`, video.workflow_state);
            const name = el("span", "video-name", video.video_id);
            row.append(name, badge);
            row.addEventListener("click", () => void this.openVideo(video));
            panel.append(row);
        }
        const exportLink = el("a", "export-link", "export annotations");
        exportLink.setAttribute("href", `/api/projects/${this.projectId}/export`);
        panel.append(exportLink);
        return panel;
    }
    renderEditor() {
        const panel = el("section", "editor");
        if (!this.session.videoId) {
            panel.append(el("p", undefined, "pick a video on the left"));
            return panel;
        }
        const toolbar = el("div", "toolbar");
        for (const mode of ["FRAME", "VIDEO"]) {
            const tab = el("button", this.session.mode === mode ? "tab active" : "tab", mode);
            tab.addEventListener("click", () => {
                this.session.setMode(mode); // draft survives mode switches
                this.render();
            });
            toolbar.append(tab);
        }
        toolbar.append(el("span", "meta", `${this.session.videoId} · pass ${this.session.currentPass || "-"} · rev ${this.session.revision} · ${this.session.workflowState}`));
        panel.append(toolbar);
        panel.append(this.renderStepPicker());
        if (this.session.mode === "FRAME") {
            panel.append(this.renderFrameMode());
        }
        else {
            panel.append(this.renderVideoMode());
        }
        panel.append(this.renderDraftList(), this.renderSubmitBar());
        return panel;
    }
    renderStepPicker() {
        const wrap = el("div", "step-picker");
        wrap.append(el("span", undefined, "step: "));
        const select = el("select");
        for (const step of this.taskSteps()) {
            const option = el("option", undefined, `${step.id}: ${step.phrase}`);
            option.value = String(step.id);
            if (step.id === this.pickedStep)
                option.selected = true;
            select.append(option);
        }
        select.addEventListener("change", () => {
            this.pickedStep = Number(select.value);
        });
        wrap.append(select);
        const fpsSelect = el("select");
        for (const rate of [1, 2, 5, 10]) {
            const option = el("option", undefined, `${rate} fps`);
            option.value = String(rate);
            if (rate === this.session.fps)
                option.selected = true;
            fpsSelect.append(option);
        }
        fpsSelect.addEventListener("change", () => void this.changeFps(Number(fpsSelect.value)));
        wrap.append(el("span", undefined, " grid rate: "), fpsSelect);
        return wrap;
    }
    renderFrameMode() {
        const wrap = el("div", "frame-mode");
        const grid = el("div", "frame-grid");
        const highlights = this.session.draft.segments.map((s) => ({
            startFrame: Math.round(s.start * this.session.fps),
            endFrame: Math.round(s.end * this.session.fps) - 1,
            color: stepColor(s.stepId),
        }));
        renderFrameGrid(grid, this.frames, this.page, this.selection, highlights, (index) => this.handleFrameClick(index));
        const pager = el("div", "pager");
        const pages = pageCount(this.frames.length);
        for (let p = 0; p < pages; p++) {
            const button = el("button", p === this.page ? "active" : "", String(p + 1));
            button.addEventListener("click", () => {
                this.page = p;
                this.render();
            });
            pager.append(button);
        }
        wrap.append(grid, pager);
        return wrap;
    }
    renderVideoMode() {
        const wrap = el("div", "video-mode");
        const video = el("video");
        video.controls = true;
        video.src = this.api.mediaUrl(this.projectId, this.session.videoId);
        video.addEventListener("error", () => {
            video.replaceWith(el("p", "meta", "original video unavailable; adjust on the timeline below"));
        });
        const timeline = el("div", "timeline");
        renderTimeline(timeline, this.session.draft, this.session.duration, {
            onChanged: () => {
                this.session.markEdited();
                this.render();
            },
            onSelect: () => undefined,
        });
        wrap.append(video, timeline);
        return wrap;
    }
    renderDraftList() {
        const list = el("ul", "draft-list");
        this.session.draft.segments.forEach((segment, index) => {
            const item = el("li", undefined, `[${segment.start.toFixed(1)}, ${segment.end.toFixed(1)}) step ${segment.stepId} `);
            const remove = el("button", "remove", "x");
            remove.addEventListener("click", () => {
                this.session.draft.removeSegment(index);
                this.session.markEdited();
                this.render();
            });
            item.append(remove);
            list.append(item);
        });
        return list;
    }
    renderSubmitBar() {
        const bar = el("div", "submit-bar");
        const save = el("button", undefined, "save draft");
        save.disabled = !this.session.canSubmit();
        save.addEventListener("click", () => void this.submit(false));
        const complete = el("button", "primary", `complete pass ${this.session.currentPass || "-"}`);
        complete.disabled = !this.session.canSubmit();
        complete.addEventListener("click", () => void this.submit(true));
        bar.append(save, complete);
        return bar;
    }
}
new App().start();
