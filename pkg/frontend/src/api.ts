// Thin fetch wrapper around the annotation service; the only way the client
// touches the backend.

import type {
  AnnotationState,
  DraftDto,
  FrameRef,
  LexiconDto,
  VideoSummary,
  WorkflowState,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

export interface SubmitResponse {
  revision: number;
  workflow_state: WorkflowState;
}

export class ApiClient {
  constructor(
    readonly base: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const text = await response.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!response.ok) {
      const err = (body ?? {}) as { code?: string; message?: string };
      throw new ApiError(response.status, err.code ?? "http_error", err.message ?? text);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  async listVideos(project: string): Promise<VideoSummary[]> {
    const doc = await this.request<{ videos: VideoSummary[] }>(
      `/api/projects/${encodeURIComponent(project)}/videos`,
    );
    return doc.videos;
  }

  lexicon(project: string): Promise<LexiconDto> {
    return this.request(`/api/projects/${encodeURIComponent(project)}/lexicon`);
  }

  async frames(project: string, videoId: string, fps: number): Promise<FrameRef[]> {
    const doc = await this.request<{ frames: FrameRef[] }>(
      `/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/frames?fps=${fps}`,
    );
    return doc.frames;
  }

  annotation(project: string, videoId: string): Promise<AnnotationState> {
    return this.request(
      `/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/annotation`,
    );
  }

  submit(
    project: string,
    videoId: string,
    draft: DraftDto,
    expectedRevision: number,
    complete: boolean,
  ): Promise<SubmitResponse> {
    return this.request(
      `/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/annotation`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ draft, expected_revision: expectedRevision, complete }),
      },
    );
  }

  advance(project: string, videoId: string, expectedRevision: number): Promise<SubmitResponse> {
    return this.request(
      `/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/advance`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ expected_revision: expectedRevision }),
      },
    );
  }

  async exportAnnotations(project: string): Promise<string> {
    const response = await this.fetchImpl(
      `${this.base}/api/projects/${encodeURIComponent(project)}/export`,
    );
    const text = await response.text();
    if (!response.ok) {
      let code = "http_error";
      let message = text;
      try {
        const doc = JSON.parse(text) as { code?: string; message?: string };
        code = doc.code ?? code;
        message = doc.message ?? message;
      } catch {
        // not JSON; keep raw text
      }
      throw new ApiError(response.status, code, message);
    }
    return text;
  }

  mediaUrl(project: string, videoId: string): string {
    return `${this.base}/api/projects/${encodeURIComponent(project)}/videos/${encodeURIComponent(videoId)}/media`;
  }
}
