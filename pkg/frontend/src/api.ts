import type {
  AnnotateResponseDoc,
  CallResponseDoc,
  CatalogDoc,
  CreateSessionDoc,
  InjectResponseDoc,
  NetworkStateDoc,
  SessionStateDoc,
} from "./types.js";

/** Structured service rejection, distinct from transport failures. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client over the gym service endpoints. The console never
 * touches session state except through these calls.
 */
export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(
    public readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    // bind to globalThis so jsdom and browsers agree on the receiver
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (body && body.detail !== undefined) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.request(path);
    return (await resp.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await resp.json()) as T;
  }

  createSession(body: {
    seed?: number;
    initial_state?: NetworkStateDoc;
    task_id?: string;
    intent_text?: string;
  }): Promise<CreateSessionDoc> {
    return this.postJson("/sessions", body);
  }

  sessionState(sessionId: string): Promise<SessionStateDoc> {
    return this.getJson(`/sessions/${sessionId}/state`);
  }

  call(sessionId: string, tool: string, args: unknown[]): Promise<CallResponseDoc> {
    return this.postJson(`/sessions/${sessionId}/call`, { tool, args });
  }

  injectDegradation(
    sessionId: string,
    body: {
      kind: string;
      onset_step?: number;
      duration_steps?: number;
      severity?: number;
    },
  ): Promise<InjectResponseDoc> {
    return this.postJson(`/sessions/${sessionId}/degradation`, body);
  }

  async trajectory(sessionId: string): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/trajectory`);
    return resp.text();
  }

  catalog(): Promise<CatalogDoc> {
    return this.getJson("/catalog");
  }

  annotate(traceCsv: string): Promise<AnnotateResponseDoc> {
    return this.postJson("/annotate", { trace_csv: traceCsv });
  }
}
