// Wire types for the study service JSON protocol.

export interface SuggestionView {
  insertion: string;
  words: string[];
  raw_prob: number;
  correct: boolean;
}

export interface BlockView {
  condition: "with" | "without";
  prompt_indices: number[];
}

export interface SessionView {
  id: string;
  participant: string;
  prompts: string[];
  blocks: BlockView[];
  policy: string;
  seed: number;
  status: "active" | "complete";
  block_idx: number;
  prompt_pos: number;
  progress: { completed: number; total: number };
  /** Highest applied event sequence number (-1 for a fresh session). */
  last_seq?: number;
}

export interface PromptView {
  done: boolean;
  block_index?: number;
  condition?: "with" | "without";
  prompt_index?: number;
  prompt?: string;
  /** Server-side reconstruction of the in-progress prompt (resume support). */
  typed?: string;
}

export interface KeyEventWire {
  seq: number;
  timestamp_ms: number;
  key: string; // single character, "tab", "backspace", or "escape"
  context: string; // typed text at the moment the key was pressed
  suggestion: SuggestionView | null;
  accepted: boolean;
}

export interface EventAck {
  applied: number;
  last_seq: number;
}

export interface AdvanceResult {
  ok: boolean;
  reconstructed?: string;
  expected?: string;
  done?: boolean;
  next?: PromptView;
}

export interface ReplayEntry {
  condition: string;
  prompt: string;
  reconstructed: string;
  ok: boolean;
}

export interface FatigueBucketView {
  bin_start: number;
  rate: number;
  ci95: number;
  n: number;
}

export interface AnalysisView {
  n_sessions: number;
  n_pairs: number;
  suggestions_shown: number;
  acceptance_rate: number;
  mean_load_by_length: Record<string, number>;
  mean_load_by_correctness: { correct?: number; incorrect?: number };
  load: Record<string, number | null> | null;
  fatigue: { all: FatigueBucketView[]; incorrect: FatigueBucketView[] };
}

export interface Transport {
  createSession(
    participant: string,
    prompts?: string[],
    policy?: string,
    seed?: number,
  ): Promise<SessionView>;
  getSession(sid: string): Promise<SessionView>;
  currentPrompt(sid: string): Promise<PromptView>;
  suggest(sid: string, context: string): Promise<SuggestionView | null>;
  postEvents(sid: string, events: KeyEventWire[]): Promise<EventAck>;
  advance(sid: string, typed: string): Promise<AdvanceResult>;
  analysis(sid: string): Promise<AnalysisView>;
  replay(sid: string): Promise<{ prompts: ReplayEntry[] }>;
}
