// Thin fetch wrapper around the annotation service; the only way the client
// touches the backend.
export class ApiError extends Error {
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
        this.name = "ApiError";
    }
}
export class ApiClient {
    constructor(base = "", fetchImpl = (...args) => fetch(...args)) {
        this.base = base;
        this.fetchImpl = fetchImpl;
    }
    async request(path, init) {
        const response = await this.fetchImpl(this.base + path, init);
        const text = await response.text();
        let body = null;
        try {
            body = text ? JSON.parse(text) : null;
        }
        catch {
            body = null;
        }
        if (!response.ok) {
            const err = (body ?? {});
            throw new ApiError(response.status, err.code ?? "http_error", err.message ?? text);
        }
        return body;
    }
    health() {
        return this.request("/healthz");
    }
    async listVideos(project) {
        const doc = await this.request(`/api/projects/${encodeURIComponent(project)}/videos`);
        return doc.videos;
    }
    lexicon(project) {
        return this.request(`/api/projects/${encodeURIComponent(project)}/lexicon`);
    }
    async frames(project, videoId, fps) {
        const doc = await this.request(`/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/frames?fps=${fps}`);
        return doc.frames;
    }
    annotation(project, videoId) {
        return this.request(`/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/annotation`);
    }
    submit(project, videoId, draft, expectedRevision, complete) {
        return this.request(`/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/annotation`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ draft, expected_revision: expectedRevision, complete }),
        });
    }
    advance(project, videoId, expectedRevision) {
        return this.request(`/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/advance`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ expected_revision: expectedRevision }),
        });
    }
    async exportAnnotations(project) {
        const response = await this.fetchImpl(`${this.base}/api/projects/${encodeURIComponent(project)}/export`);
        const text = await response.text();
        if (!response.ok) {
            let code = "http_error";
            let message = text;
            try {
                const doc = JSON.parse(text);
                code = doc.code ?? code;
                message = doc.message ?? message;
            }
            catch {
                // not JSON; keep raw text
            }
            throw new ApiError(response.status, code, message);
        }
        return text;
    }
    mediaUrl(project, videoId) {
        return `${this.base}/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/media`;
    }
}
