import type {
  CreateSessionRequest,
  CreateSessionResponse,
  PendingBatch,
  SessionMetrics,
  SubmitAck,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** Thin typed client over the session endpoints. */
export class SessionApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: unknown };
        if (typeof payload.detail === "string") detail = payload.detail;
        else if (payload.detail !== undefined) detail = JSON.stringify(payload.detail);
      } catch {
        // keep the status text when the body is not JSON
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(request: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request<CreateSessionResponse>("POST", "/sessions", request);
  }

  getQuery(sessionId: string): Promise<PendingBatch> {
    return this.request<PendingBatch>("GET", `/sessions/${sessionId}/query`);
  }

  submitLabels(sessionId: string, labels: [number, number][]): Promise<SubmitAck> {
    return this.request<SubmitAck>("POST", `/sessions/${sessionId}/labels`, { labels });
  }

  getMetrics(sessionId: string): Promise<SessionMetrics> {
    return this.request<SessionMetrics>("GET", `/sessions/${sessionId}/metrics`);
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }
}
