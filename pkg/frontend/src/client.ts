// Thin protocol client. All numbers shown in the console come from these
// response bodies untouched; the console never derives a wear value itself.

import { SessionEvent, SessionStateBody } from "./types.js";

export interface HttpResponse {
  status: number;
  body: any;
  text?: string;
}

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<HttpResponse>;
  // Optional server-push channel. Returning a stop function; absent on
  // transports that cannot stream (the client then falls back to polling).
  openEventStream?(
    path: string,
    onEvent: (event: SessionEvent) => void,
    onError: (err: unknown) => void,
  ): () => void;
}

export class FetchTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  async request(method: string, path: string, body?: unknown): Promise<HttpResponse> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    const type = resp.headers.get("content-type") ?? "";
    const parsed = type.includes("json") && text ? JSON.parse(text) : undefined;
    return { status: resp.status, body: parsed, text };
  }

  openEventStream(
    path: string,
    onEvent: (event: SessionEvent) => void,
    onError: (err: unknown) => void,
  ): () => void {
    const source = new EventSource(this.baseUrl + path);
    source.onmessage = (msg) => onEvent(JSON.parse(msg.data));
    source.onerror = (err) => onError(err);
    return () => source.close();
  }
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function unwrap(resp: HttpResponse): any {
  if (resp.status >= 400) {
    const err = resp.body?.error ?? { code: "http-error", message: `status ${resp.status}` };
    throw new ServiceError(resp.status, err.code, err.message);
  }
  return resp.body;
}

export class ServiceClient {
  constructor(readonly transport: Transport) {}

  async createSession(body: Record<string, unknown>): Promise<SessionStateBody> {
    return unwrap(await this.transport.request("POST", "/v1/sessions", body));
  }

  async getState(sessionId: string): Promise<SessionStateBody> {
    return unwrap(await this.transport.request("GET", `/v1/sessions/${sessionId}`));
  }

  async complete(sessionId: string, action: string, worker: string): Promise<SessionStateBody> {
    return unwrap(
      await this.transport.request("POST", `/v1/sessions/${sessionId}/complete`, {
        v: 1,
        action,
        worker,
      }),
    );
  }

  async override(sessionId: string, action: string, worker: string): Promise<SessionStateBody> {
    return unwrap(
      await this.transport.request("POST", `/v1/sessions/${sessionId}/override`, {
        v: 1,
        action,
        worker,
      }),
    );
  }

  async getLogEvents(sessionId: string): Promise<SessionEvent[]> {
    const resp = await this.transport.request("GET", `/v1/sessions/${sessionId}/log`);
    unwrap(resp);
    const text = resp.text ?? "";
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as SessionEvent);
  }

  // Stream-first subscription with polling fallback: when the transport has
  // no stream (or it errors), `poll` is invoked on an interval instead.
  subscribe(
    sessionId: string,
    onEvent: (event: SessionEvent) => void,
    poll: () => void,
    pollIntervalMs = 2000,
    timer: { set: typeof setInterval; clear: typeof clearInterval } = {
      set: setInterval,
      clear: clearInterval,
    },
  ): { stop: () => void; streaming: boolean } {
    if (this.transport.openEventStream) {
      let fellBack = false;
      let stopPolling: (() => void) | null = null;
      const close = this.transport.openEventStream(
        `/v1/sessions/${sessionId}/events`,
        onEvent,
        () => {
          if (!fellBack) {
            fellBack = true;
            const handle = timer.set(poll, pollIntervalMs);
            stopPolling = () => timer.clear(handle);
          }
        },
      );
      return {
        streaming: true,
        stop: () => {
          close();
          if (stopPolling) stopPolling();
        },
      };
    }
    const handle = timer.set(poll, pollIntervalMs);
    return { streaming: false, stop: () => timer.clear(handle) };
  }
}
