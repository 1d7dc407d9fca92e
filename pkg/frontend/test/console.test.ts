import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { ConsoleApp } from "../src/app.js";
import { HttpResponse, ServiceClient, Transport } from "../src/client.js";
import { bandOf, gaugeModel, progressTree, timelineModel } from "../src/model.js";
import { JOINTS, SessionEvent, SessionStateBody } from "../src/types.js";

interface Exchange {
  label: string;
  request: { method: string; path: string; body: any };
  response: { status: number; body: any };
}

const TRACE: Exchange[] = JSON.parse(
  readFileSync(new URL("../../fixtures/protocol_trace.json", import.meta.url), "utf-8"),
);

// Replays the recorded protocol exchanges in order and serves side-channel
// GETs (state, log) from configurable routes; every request is recorded.
class StubTransport implements Transport {
  requests: { method: string; path: string; body?: unknown }[] = [];
  private queue: Exchange[];
  private listeners: ((event: SessionEvent) => void)[] = [];

  constructor(
    queue: Exchange[],
    private routes: Record<string, HttpResponse> = {},
    private streamCapable = true,
  ) {
    this.queue = [...queue];
  }

  async request(method: string, path: string, body?: unknown): Promise<HttpResponse> {
    this.requests.push({ method, path, body });
    const route = this.routes[`${method} ${path}`];
    if (route) return route;
    const expected = this.queue.shift();
    if (!expected) throw new Error(`unexpected request ${method} ${path}`);
    expect(`${method} ${path}`).toBe(`${expected.request.method} ${expected.request.path}`);
    expect(body).toEqual(expected.request.body);
    return { status: expected.response.status, body: expected.response.body };
  }

  openEventStream = undefined as Transport["openEventStream"];

  enableStream(): void {
    if (!this.streamCapable) return;
    this.openEventStream = (_path, onEvent) => {
      this.listeners.push(onEvent);
      return () => {};
    };
  }

  emit(event: SessionEvent): void {
    for (const listener of this.listeners) listener(event);
  }
}

function emptyLogRoutes(sessionId: string): Record<string, HttpResponse> {
  return {
    [`GET /v1/sessions/${sessionId}/log`]: { status: 200, body: undefined, text: "" },
  };
}

function makeApp(
  queue: Exchange[],
  routes: Record<string, HttpResponse> = emptyLogRoutes("corner-joint-demo"),
): { app: ConsoleApp; stub: StubTransport } {
  const stub = new StubTransport(queue, routes);
  stub.enableStream();
  return { app: new ConsoleApp(new ServiceClient(stub)), stub };
}

describe("fixture replay through the console", () => {
  it("displays the recorded suggestion sequence H, R, H, H, R", async () => {
    const { app } = makeApp(TRACE);
    await app.create(TRACE[0].request.body);
    while (app.state && !app.state.complete) {
      await app.accept();
    }
    expect(app.displayedSuggestions).toEqual([
      { action: "a1", worker: "human" },
      { action: "a2", worker: "robot" },
      { action: "a3", worker: "human" },
      { action: "a4", worker: "human" },
      { action: "a5", worker: "robot" },
    ]);
    expect(app.state!.complete).toBe(true);
    expect(app.state!.suggestion).toBeNull();
    app.close();
  });

  it("sends exactly one protocol request per operator action, byte-equal to the trace", async () => {
    const { app, stub } = makeApp(TRACE);
    await app.create(TRACE[0].request.body);
    for (let step = 1; step < TRACE.length; step++) {
      const before = stub.requests.filter((r) => r.method === "POST").length;
      await app.accept();
      const after = stub.requests.filter((r) => r.method === "POST").length;
      expect(after - before).toBe(1);
    }
    // the StubTransport already asserted each body equals the recorded one
    expect(stub.requests.filter((r) => r.method === "POST").length).toBe(TRACE.length);
    app.close();
  });

  it("renders every wear number verbatim as served (no client-side recomputation)", async () => {
    const { app } = makeApp(TRACE);
    await app.create(TRACE[0].request.body);
    for (let step = 0; step < TRACE.length; step++) {
      if (step > 0) await app.accept();
      const served = TRACE[step].response.body.wear as Record<string, number>;
      const html = app.render();
      for (const joint of JOINTS) {
        expect(app.state!.wear[joint]).toBe(served[joint]);
        expect(html).toContain(`data-value="${String(served[joint])}"`);
      }
    }
    app.close();
  });
});

describe("wear gauges", () => {
  const state = TRACE[0].response.body as SessionStateBody;

  it("takes band thresholds from the session config, not constants", () => {
    for (const gauge of gaugeModel(state)) {
      expect(gauge.th1).toBe(state.config.v_th1);
      expect(gauge.th2).toBe(state.config.v_th2);
    }
    const custom = structuredClone(state);
    custom.config.v_th1 = 0.3;
    custom.config.v_th2 = 0.6;
    custom.wear.shoulder = 0.29;
    const byJoint = Object.fromEntries(gaugeModel(custom).map((g) => [g.joint, g]));
    expect(byJoint.shoulder.band).toBe("low"); // medium under the default 0.25
    expect(byJoint.neck.band).toBe("medium"); // 0.5 < 0.6
    expect(byJoint.shoulder.th1).toBe(0.3);
  });

  it("applies the server's boundary semantics", () => {
    expect(bandOf(0.25, 0.25, 0.75)).toBe("low");
    expect(bandOf(0.75, 0.25, 0.75)).toBe("high");
    expect(bandOf(0.5, 0.25, 0.75)).toBe("medium");
    expect(bandOf(0.0, 0.25, 0.75)).toBe("low");
  });

  it("renders the reference initial wear into the expected bands", () => {
    const bands = Object.fromEntries(gaugeModel(state).map((g) => [g.joint, g.band]));
    expect(bands).toEqual({
      shoulder: "medium",
      elbow: "low",
      wrist: "low",
      trunk: "medium",
      neck: "medium",
    });
  });
});

describe("timeline", () => {
  const workers = (TRACE[0].response.body as SessionStateBody).workers;
  const events: SessionEvent[] = [
    { v: 1, t: 0, kind: "start", payload: { initial_wear: { values: [0.3, 0.1, 0.1, 0.45, 0.5], t: 0 } } },
    { v: 1, t: 25, kind: "completion", payload: { action: "a1", worker: "human", duration_s: 25 } },
    { v: 1, t: 25, kind: "wear", payload: { values: [0.37, 0.19, 0.19, 0.483, 0.53], t: 25 } },
    { v: 1, t: 85, kind: "completion", payload: { action: "a2", worker: "robot", duration_s: 60 } },
    { v: 1, t: 85, kind: "wear", payload: { values: [0.107, 0.055, 0.055, 0.14, 0.153], t: 85 } },
  ];

  it("shades human intervals as charge and robot intervals as decay", () => {
    const view = timelineModel(events, workers);
    expect(view.intervals).toEqual([
      { t0: 0, t1: 25, action: "a1", worker: "human", mode: "charge" },
      { t0: 25, t1: 85, action: "a2", worker: "robot", mode: "decay" },
    ]);
    expect(view.tEnd).toBe(85);
    for (const joint of JOINTS) {
      expect(view.series[joint].length).toBe(3);
      expect(view.series[joint][0].t).toBe(0);
    }
    expect(view.series.shoulder.map((p) => p.value)).toEqual([0.3, 0.37, 0.107]);
  });
});

describe("progress tree", () => {
  it("lists solved sub-assemblies expanding to their pieces", () => {
    const final = TRACE[TRACE.length - 1].response.body as SessionStateBody;
    const tree = progressTree(final);
    expect(tree.length).toBe(1); // everything merged into the root
    expect(tree[0].children.map((c) => c.id).sort()).toEqual(
      ["bench", "cj", "leg", "out", "s1", "s2"],
    );
    const fresh = progressTree(TRACE[0].response.body as SessionStateBody);
    expect(fresh.length).toBe(6); // all leaves
  });
});

describe("error handling and recovery", () => {
  it("surfaces a conflict and resyncs from the server", async () => {
    const createExchange = TRACE[0];
    const sid = "corner-joint-demo";
    const stub = new StubTransport(
      [
        createExchange,
        {
          label: "stale-complete",
          request: { method: "POST", path: `/v1/sessions/${sid}/complete`, body: { v: 1, action: "a1", worker: "human" } },
          response: { status: 409, body: { error: { code: "not-enabled", message: "action 'a1' by 'human' is not enabled" } } },
        },
      ],
      {
        [`GET /v1/sessions/${sid}`]: { status: 200, body: TRACE[1].response.body },
        [`GET /v1/sessions/${sid}/log`]: { status: 200, body: undefined, text: "" },
      },
    );
    stub.enableStream();
    const app = new ConsoleApp(new ServiceClient(stub));
    await app.create(createExchange.request.body);
    await app.accept();
    expect(app.lastError).toContain("conflict");
    expect(app.state!.history.length).toBe(1); // resynced past the stale view
    app.close();
  });

  it("attaching by session id rebuilds everything from the server", async () => {
    const sid = "corner-joint-demo";
    const stub = new StubTransport([], {
      [`GET /v1/sessions/${sid}`]: { status: 200, body: TRACE[TRACE.length - 1].response.body },
      [`GET /v1/sessions/${sid}/log`]: { status: 200, body: undefined, text: "" },
    });
    stub.enableStream();
    const app = new ConsoleApp(new ServiceClient(stub));
    await app.attach(sid);
    expect(app.state!.complete).toBe(true);
    expect(app.render()).toContain("Assembly complete");
    app.close();
  });
});

describe("event subscription", () => {
  it("prefers the event stream and appends pushed events", async () => {
    const { app, stub } = makeApp(TRACE.slice(0, 1));
    await app.create(TRACE[0].request.body);
    expect(app.streaming).toBe(true);
    const before = app.events.length;
    stub.emit({ v: 1, t: 1, kind: "suggestion", payload: { action: "a1", worker: "human" } });
    expect(app.events.length).toBe(before + 1);
    app.close();
  });

  it("falls back to polling when the transport cannot stream", async () => {
    const client = new ServiceClient(new StubTransport([], {}, false));
    let polled = 0;
    const fakeTimer = {
      set: ((fn: () => void) => {
        polled += 1;
        fn();
        return 0 as any;
      }) as typeof setInterval,
      clear: (() => {}) as typeof clearInterval,
    };
    const sub = client.subscribe("sid", () => {}, () => {}, 100, fakeTimer);
    expect(sub.streaming).toBe(false);
    expect(polled).toBe(1);
    sub.stop();
  });
});
