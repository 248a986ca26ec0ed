// Completion-screen formatting. Timing analysis always comes from the
// service; the client only contributes its own acceptance counters.

import type { AnalysisView } from "./types.js";
import type { LocalSummary } from "./session.js";

export interface DisplayedSummary {
  acceptanceRate: string;
  suggestionsShown: string;
  meanLoadMs: string;
  meanLoadCorrectMs: string;
  meanLoadIncorrectMs: string;
  loadByLength: Record<string, string>;
}

export const RATE_DIGITS = 3;
export const MS_DIGITS = 1;

const ms = (v: number | null | undefined) =>
  v === null || v === undefined ? "n/a" : v.toFixed(MS_DIGITS);

export function formatSummary(analysis: AnalysisView): DisplayedSummary {
  const byLength: Record<string, string> = {};
  for (const [len, value] of Object.entries(analysis.mean_load_by_length)) {
    byLength[len] = ms(value);
  }
  return {
    acceptanceRate: analysis.acceptance_rate.toFixed(RATE_DIGITS),
    suggestionsShown: String(analysis.suggestions_shown),
    meanLoadMs: ms(analysis.load ? (analysis.load["mean_load_ms"] as number) : null),
    meanLoadCorrectMs: ms(analysis.mean_load_by_correctness.correct),
    meanLoadIncorrectMs: ms(analysis.mean_load_by_correctness.incorrect),
    loadByLength: byLength,
  };
}

/** True when the client's own counters agree with the service analysis at
 * the precision the summary screen displays. */
export function summaryConsistent(local: LocalSummary, analysis: AnalysisView): boolean {
  return (
    local.shown === analysis.suggestions_shown &&
    local.acceptanceRate.toFixed(RATE_DIGITS) ===
      analysis.acceptance_rate.toFixed(RATE_DIGITS)
  );
}
