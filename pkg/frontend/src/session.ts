// Session state machine: prompted typing through both study conditions.
//
// Keystroke handling is DOM-free so it can be driven headlessly; dom.ts
// wires it to real keyboard events. All transmitted timestamps come from
// the injected monotonic clock; the client never computes intervals.

import { EventQueue } from "./client.js";
import { GhostState, ghostAfterKey, renderGhost } from "./ghost.js";
import type {
  AnalysisView,
  KeyEventWire,
  SuggestionView,
  Transport,
} from "./types.js";

export type Clock = () => number;

export interface UiSessionState {
  sessionId: string;
  done: boolean;
  condition: "with" | "without";
  prompt: string;
  typed: string;
  ghost: GhostState | null;
  suggestion: SuggestionView | null;
  completed: number;
  total: number;
}

export interface KeyOutcome {
  applied: boolean;
  accepted: boolean;
  promptComplete: boolean;
  sessionComplete: boolean;
  blocked?: string;
}

export interface LocalSummary {
  shown: number;
  accepted: number;
  dismissed: number;
  nonAcceptTabs: number;
  acceptanceRate: number;
}

const NOOP: KeyOutcome = {
  applied: false,
  accepted: false,
  promptComplete: false,
  sessionComplete: false,
};

export class UiSession {
  state: UiSessionState = {
    sessionId: "",
    done: false,
    condition: "without",
    prompt: "",
    typed: "",
    ghost: null,
    suggestion: null,
    completed: 0,
    total: 0,
  };
  queue!: EventQueue;
  /** Everything transmitted, kept for end-of-session cross-checks. */
  sentEvents: KeyEventWire[] = [];
  private shown = 0;
  private accepted = 0;
  private dismissed = 0;
  private nonAcceptTabs = 0;

  constructor(
    private transport: Transport,
    private clock: Clock,
    private batchSize = 32,
  ) {}

  async start(participant: string, prompts?: string[], seed = 0): Promise<void> {
    const session = await this.transport.createSession(participant, prompts, undefined, seed);
    this.state.sessionId = session.id;
    this.state.total = session.progress.total;
    this.queue = new EventQueue(this.transport, session.id, this.batchSize);
    await this.beginPrompt();
  }

  /** Reattach to an existing session (page refresh): the server's cursor,
   * typed buffer, and event sequence are authoritative. */
  async resume(sessionId: string): Promise<void> {
    const session = await this.transport.getSession(sessionId);
    this.state.sessionId = session.id;
    this.state.total = session.progress.total;
    this.state.completed = session.progress.completed;
    this.queue = new EventQueue(
      this.transport,
      session.id,
      this.batchSize,
      5,
      10,
      (session.last_seq ?? -1) + 1,
    );
    await this.beginPrompt();
  }

  private async beginPrompt(): Promise<void> {
    const info = await this.transport.currentPrompt(this.state.sessionId);
    if (info.done) {
      this.state.done = true;
      this.state.ghost = null;
      this.state.suggestion = null;
      return;
    }
    this.state.condition = info.condition!;
    this.state.prompt = info.prompt!;
    this.state.typed = info.typed ?? "";
    await this.refreshSuggestion();
  }

  private async refreshSuggestion(): Promise<void> {
    const { sessionId, condition, typed, prompt } = this.state;
    if (condition !== "with" || typed === prompt) {
      this.state.suggestion = null;
      this.state.ghost = null;
      return;
    }
    const suggestion = await this.transport.suggest(sessionId, typed);
    this.state.suggestion = suggestion;
    this.state.ghost = renderGhost(typed, suggestion);
  }

  private record(key: string, accepted: boolean): void {
    const event = this.queue.enqueue({
      timestamp_ms: this.clock(),
      key,
      context: this.state.typed,
      suggestion: this.state.suggestion,
      accepted,
    });
    this.sentEvents.push(event);
    if (this.state.suggestion) this.shown += 1;
    if (accepted) this.accepted += 1;
  }

  /**
   * One raw key. Tab accepts only while a ghost is visible (otherwise it is
   * a local no-op, flagged but never transmitted); escape dismisses the
   * ghost; printable keys and backspace edit the buffer.
   */
  async handleKey(key: string): Promise<KeyOutcome> {
    if (this.state.done) return { ...NOOP, blocked: "session complete" };
    const { prompt } = this.state;
    if (key === "tab") {
      if (!this.state.ghost) {
        this.nonAcceptTabs += 1;
        return { ...NOOP, blocked: "no ghost to accept" };
      }
      this.record("tab", true);
      this.state.typed += this.state.ghost.text;
      this.state.ghost = null;
      return this.afterEdit(true);
    }
    if (key === "escape") {
      if (!this.state.ghost) return { ...NOOP, blocked: "no ghost to dismiss" };
      this.record("escape", false);
      this.dismissed += 1;
      this.state.ghost = null;
      this.state.suggestion = null;
      return { ...NOOP, applied: true };
    }
    if (key === "backspace") {
      if (this.state.typed.length === 0) return { ...NOOP, blocked: "buffer empty" };
      this.record("backspace", false);
      this.state.typed = this.state.typed.slice(0, -1);
      this.state.ghost = null;
      return this.afterEdit(false);
    }
    if (key.length !== 1) return { ...NOOP, blocked: "unhandled key" };
    if (this.state.typed.length >= prompt.length) {
      return { ...NOOP, blocked: "prompt length reached" };
    }
    this.record(key, false);
    this.state.ghost = ghostAfterKey(this.state.ghost, key);
    this.state.typed += key;
    return this.afterEdit(false);
  }

  private async afterEdit(accepted: boolean): Promise<KeyOutcome> {
    if (this.state.typed === this.state.prompt) {
      await this.queue.flush();
      const result = await this.transport.advance(this.state.sessionId, this.state.typed);
      if (!result.ok) {
        throw new Error(
          `prompt verification failed: got ${result.reconstructed}, wanted ${result.expected}`,
        );
      }
      this.state.completed += 1;
      await this.beginPrompt();
      return {
        applied: true,
        accepted,
        promptComplete: true,
        sessionComplete: this.state.done,
      };
    }
    await this.refreshSuggestion();
    return { ...NOOP, applied: true, accepted };
  }

  localSummary(): LocalSummary {
    return {
      shown: this.shown,
      accepted: this.accepted,
      dismissed: this.dismissed,
      nonAcceptTabs: this.nonAcceptTabs,
      acceptanceRate: this.shown ? this.accepted / this.shown : 0,
    };
  }

  /** The service-side numbers the completion screen displays. */
  serviceSummary(): Promise<AnalysisView> {
    return this.transport.analysis(this.state.sessionId);
  }
}
