// HTTP transport plus the ordered, idempotent event queue.

import type {
  AdvanceResult,
  AnalysisView,
  EventAck,
  KeyEventWire,
  PromptView,
  ReplayEntry,
  SessionView,
  SuggestionView,
  Transport,
} from "./types.js";

export class HttpError extends Error {
  constructor(
    public status: number,
    public body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

type FetchLike = typeof fetch;

export class StudyClient implements Transport {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) throw new HttpError(resp.status, text);
    return JSON.parse(text) as T;
  }

  createSession(
    participant: string,
    prompts?: string[],
    policy?: string,
    seed = 0,
  ): Promise<SessionView> {
    return this.request("POST", "/sessions", { participant, prompts, policy, seed });
  }

  getSession(sid: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sid}`);
  }

  currentPrompt(sid: string): Promise<PromptView> {
    return this.request("GET", `/sessions/${sid}/prompt`);
  }

  async suggest(sid: string, context: string): Promise<SuggestionView | null> {
    const doc = await this.request<{ suggestion: SuggestionView | null }>(
      "POST",
      `/sessions/${sid}/suggest`,
      { context },
    );
    return doc.suggestion;
  }

  postEvents(sid: string, events: KeyEventWire[]): Promise<EventAck> {
    return this.request("POST", `/sessions/${sid}/events`, { events });
  }

  advance(sid: string, typed: string): Promise<AdvanceResult> {
    return this.request("POST", `/sessions/${sid}/advance`, { typed });
  }

  analysis(sid: string): Promise<AnalysisView> {
    return this.request("GET", `/sessions/${sid}/analysis`);
  }

  replay(sid: string): Promise<{ prompts: ReplayEntry[] }> {
    return this.request("GET", `/sessions/${sid}/replay`);
  }
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

/**
 * Strictly ordered delivery with client-assigned sequence numbers.
 *
 * Events stay buffered until the service acknowledges them, so a flush that
 * dies mid-way (offline, service restart) simply retries the same batch;
 * the service skips sequence numbers it has already applied.
 */
export class EventQueue {
  private pending: KeyEventWire[] = [];
  private nextSeq: number;
  private flushing: Promise<void> | null = null;
  sendFailures = 0;

  constructor(
    private transport: Transport,
    private sid: string,
    private batchSize = 32,
    private maxRetries = 5,
    private backoffMs = 10,
    startSeq = 0,
  ) {
    this.nextSeq = startSeq;
  }

  get buffered(): number {
    return this.pending.length;
  }

  enqueue(event: Omit<KeyEventWire, "seq">): KeyEventWire {
    const wire: KeyEventWire = { ...event, seq: this.nextSeq++ };
    this.pending.push(wire);
    return wire;
  }

  /** Send everything buffered; resolves once the service has it all. */
  flush(): Promise<void> {
    if (!this.flushing) {
      this.flushing = this.drain().finally(() => {
        this.flushing = null;
      });
    }
    return this.flushing;
  }

  private async drain(): Promise<void> {
    while (this.pending.length > 0) {
      const batch = this.pending.slice(0, this.batchSize);
      let attempt = 0;
      for (;;) {
        try {
          await this.transport.postEvents(this.sid, batch);
          break;
        } catch (err) {
          this.sendFailures += 1;
          attempt += 1;
          if (attempt > this.maxRetries) throw err;
          await sleep(this.backoffMs * attempt);
        }
      }
      this.pending.splice(0, batch.length);
    }
  }
}
