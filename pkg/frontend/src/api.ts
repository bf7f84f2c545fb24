import type {
  EventResponse,
  SessionState,
  StreamEvent,
  TablePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

async function parseError(resp: Response): Promise<ApiError> {
  let code = "internal";
  let message = resp.statusText;
  try {
    const body = await resp.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    } else if (body?.detail) {
      code = "validation";
      message = JSON.stringify(body.detail);
    }
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(resp.status, code, message);
}

/**
 * Thin client for the solspace HTTP service. Tracks the next event sequence
 * number per session; a conflict response triggers one resync-and-retry.
 * At most one event post is in flight at a time (single-writer contract).
 */
export class ApiClient {
  private nextSeq = new Map<string, number>();
  private inflight: Promise<unknown> = Promise.resolve();

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : {},
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async createSpace(
    datasetPath: string,
    descriptorPairs = 2048,
  ): Promise<{ space_id: string; n: number; channels: string[] }> {
    return this.request("POST", "/spaces", {
      dataset_path: datasetPath,
      descriptor_pairs: descriptorPairs,
    });
  }

  async createSession(
    spaceId: string,
    config: Record<string, unknown> = {},
  ): Promise<string> {
    const r = await this.request<{ session_id: string }>("POST", "/sessions", {
      space_id: spaceId,
      config,
    });
    this.nextSeq.set(r.session_id, 1); // create_session consumed seq 0
    return r.session_id;
  }

  async getState(sessionId: string): Promise<SessionState> {
    const state = await this.request<SessionState>(
      "GET",
      `/sessions/${sessionId}/state`,
    );
    return state;
  }

  async getTable(sessionId: string, solutionId: string): Promise<TablePayload> {
    return this.request("GET", `/sessions/${sessionId}/table/${solutionId}`);
  }

  async getMesh(spaceId: string, solutionId: string): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/spaces/${spaceId}/solutions/${solutionId}/mesh`,
    );
    if (!resp.ok) throw await parseError(resp);
    return resp.arrayBuffer();
  }

  /**
   * Post one session event. The next sequence number equals the server's
   * state version, so on a conflict we refetch state and retry exactly once.
   */
  async postEvent(
    sessionId: string,
    type: string,
    payload: Record<string, unknown> = {},
  ): Promise<EventResponse> {
    const run = async (): Promise<EventResponse> => {
      const attempt = (): Promise<EventResponse> =>
        this.request<EventResponse>("POST", `/sessions/${sessionId}/events`, {
          seq: this.nextSeq.get(sessionId) ?? 1,
          type,
          payload,
          ts: Date.now() / 1000,
        });
      let result: EventResponse;
      try {
        result = await attempt();
      } catch (err) {
        if (!(err instanceof ApiError) || err.code !== "conflict") throw err;
        const state = await this.getState(sessionId);
        this.nextSeq.set(sessionId, state.version);
        result = await attempt();
      }
      this.nextSeq.set(sessionId, result.sequence + 1);
      return result;
    };
    const chained = this.inflight.then(run, run);
    this.inflight = chained.catch(() => undefined);
    return chained;
  }

  /**
   * Subscribe to the session's server-sent event stream. Returns an abort
   * function. Parses `data:` lines; ignores keepalive comments.
   */
  streamEvents(
    sessionId: string,
    onEvent: (ev: StreamEvent) => void,
  ): () => void {
    const controller = new AbortController();
    void (async () => {
      try {
        const resp = await this.fetchImpl(
          `${this.baseUrl}/sessions/${sessionId}/stream`,
          { signal: controller.signal },
        );
        if (!resp.ok || !resp.body) throw await parseError(resp);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let idx;
          while ((idx = buffer.indexOf("\n\n")) >= 0) {
            const chunk = buffer.slice(0, idx);
            buffer = buffer.slice(idx + 2);
            for (const line of chunk.split("\n")) {
              if (line.startsWith("data: ")) {
                onEvent(JSON.parse(line.slice(6)) as StreamEvent);
              }
            }
          }
        }
      } catch (err) {
        if (!controller.signal.aborted) {
          onEvent({ type: "error", message: String(err) });
        }
      }
    })();
    return () => controller.abort();
  }
}
