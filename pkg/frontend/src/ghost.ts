// Inline gray ghost-text display logic (pure).

import type { SuggestionView } from "./types.js";

export interface GhostState {
  /** The gray continuation rendered after the caret. */
  text: string;
  /** Caret position the ghost starts at (= typed length). */
  from: number;
  suggestion: SuggestionView;
}

export function renderGhost(
  typed: string,
  suggestion: SuggestionView | null,
): GhostState | null {
  if (!suggestion || suggestion.insertion.length === 0) return null;
  return { text: suggestion.insertion, from: typed.length, suggestion };
}

/**
 * Display-state transition while a fresh suggestion is in flight: typing the
 * character the ghost starts with consumes it, anything else clears it.
 */
export function ghostAfterKey(ghost: GhostState | null, key: string): GhostState | null {
  if (!ghost) return null;
  if (key.length === 1 && ghost.text.startsWith(key)) {
    const rest = ghost.text.slice(1);
    if (rest.length === 0) return null;
    return { text: rest, from: ghost.from + 1, suggestion: ghost.suggestion };
  }
  return null;
}
