// Console controller: holds the latest server state and the event backlog,
// turns them into panels, and maps operator actions onto single protocol
// requests. Nothing here computes wear or cost; the server's numbers are the
// only source of truth, and the only thing worth persisting is a session id.

import { ServiceClient, ServiceError } from "./client.js";
import {
  allocationModel,
  gaugeModel,
  progressTree,
  timelineModel,
} from "./model.js";
import {
  renderAllocation,
  renderError,
  renderGauges,
  renderHistory,
  renderTimeline,
  renderTree,
} from "./render.js";
import { SessionEvent, SessionStateBody, Suggestion } from "./types.js";

export class ConsoleApp {
  state: SessionStateBody | null = null;
  events: SessionEvent[] = [];
  lastError: string | null = null;
  streaming = false;
  // every suggestion the allocation panel has shown, in display order
  readonly displayedSuggestions: Suggestion[] = [];
  private stopSubscription: (() => void) | null = null;

  constructor(private readonly client: ServiceClient) {}

  get sessionId(): string | null {
    return this.state ? this.state.session_id : null;
  }

  private applyState(state: SessionStateBody): void {
    this.state = state;
    const shown = this.displayedSuggestions;
    const s = state.suggestion;
    if (s && (shown.length === 0 || shown[shown.length - 1].action !== s.action
        || shown[shown.length - 1].worker !== s.worker)) {
      shown.push(s);
    }
  }

  async create(body: Record<string, unknown>): Promise<void> {
    this.applyState(await this.client.createSession(body));
    await this.syncEvents();
    this.openSubscription();
  }

  // Attach to an existing session, e.g. after a page reload: the session id
  // is the only client-side state that survives.
  async attach(sessionId: string): Promise<void> {
    this.applyState(await this.client.getState(sessionId));
    await this.syncEvents();
    this.openSubscription();
  }

  private openSubscription(): void {
    if (!this.sessionId) return;
    const sub = this.client.subscribe(
      this.sessionId,
      (event) => this.onEvent(event),
      () => void this.refresh(),
    );
    this.streaming = sub.streaming;
    this.stopSubscription = sub.stop;
  }

  close(): void {
    if (this.stopSubscription) this.stopSubscription();
    this.stopSubscription = null;
  }

  onEvent(event: SessionEvent): void {
    this.events.push(event);
  }

  private async syncEvents(): Promise<void> {
    if (!this.sessionId) return;
    this.events = await this.client.getLogEvents(this.sessionId);
  }

  // Connection-loss or conflict recovery: one state fetch plus a log resync.
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    this.applyState(await this.client.getState(this.sessionId));
    await this.syncEvents();
  }

  // Operator pressed "mark done": exactly one completion request.
  async accept(): Promise<void> {
    if (!this.state || !this.state.suggestion) return;
    const { action, worker } = this.state.suggestion;
    await this.mutate(() => this.client.complete(this.sessionId!, action, worker));
  }

  // Operator chose a different (action, worker): exactly one override request.
  async override(action: string, worker: string): Promise<void> {
    await this.mutate(() => this.client.override(this.sessionId!, action, worker));
  }

  private async mutate(request: () => Promise<SessionStateBody>): Promise<void> {
    try {
      this.lastError = null;
      this.applyState(await request());
      if (!this.streaming) await this.syncEvents();
    } catch (err) {
      if (err instanceof ServiceError && err.status === 409) {
        // stale suggestion: surface the conflict and resync from the server
        this.lastError = `conflict: ${err.message}`;
        await this.refresh();
        return;
      }
      throw err;
    }
  }

  render(): string {
    if (!this.state) {
      return `<main class="console">${renderError(this.lastError)}<p>No session.</p></main>`;
    }
    const { v_th1, v_th2 } = this.state.config;
    return `<main class="console" data-session="${this.state.session_id}">
      ${renderError(this.lastError)}
      ${renderAllocation(allocationModel(this.state))}
      ${renderGauges(gaugeModel(this.state))}
      ${renderTimeline(timelineModel(this.events, this.state.workers), v_th1, v_th2)}
      ${renderTree(progressTree(this.state))}
      ${renderHistory(this.state.history)}
    </main>`;
  }
}
