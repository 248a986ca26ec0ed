// Browser wiring: renders the prompt, typed text, and gray ghost; maps
// keydown events into the session state machine.

import { UiSession } from "./session.js";
import { formatSummary } from "./summary.js";

export interface Elements {
  prompt: HTMLElement;
  typed: HTMLElement;
  ghost: HTMLElement;
  status: HTMLElement;
  summary: HTMLElement;
}

export function bindElements(root: Document): Elements {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    prompt: get("prompt"),
    typed: get("typed"),
    ghost: get("ghost"),
    status: get("status"),
    summary: get("summary"),
  };
}

export function render(session: UiSession, els: Elements): void {
  const s = session.state;
  els.prompt.textContent = s.prompt;
  els.typed.textContent = s.typed;
  els.ghost.textContent = s.ghost ? s.ghost.text : "";
  els.status.textContent = s.done
    ? "session complete"
    : `${s.completed}/${s.total} prompts (${s.condition} suggestions)`;
}

export async function showSummary(session: UiSession, els: Elements): Promise<void> {
  const summary = formatSummary(await session.serviceSummary());
  const local = session.localSummary();
  els.summary.innerHTML = "";
  const rows: [string, string][] = [
    ["suggestions shown", summary.suggestionsShown],
    ["acceptance rate", summary.acceptanceRate],
    ["mean load (ms)", summary.meanLoadMs],
    ["mean load, correct (ms)", summary.meanLoadCorrectMs],
    ["mean load, incorrect (ms)", summary.meanLoadIncorrectMs],
    ["accepted (this device)", String(local.accepted)],
  ];
  for (const [label, value] of rows) {
    const div = els.summary.ownerDocument.createElement("div");
    div.textContent = `${label}: ${value}`;
    els.summary.appendChild(div);
  }
}

const KEY_MAP: Record<string, string> = {
  Tab: "tab",
  Escape: "escape",
  Backspace: "backspace",
};

export function attachKeyboard(
  session: UiSession,
  els: Elements,
  target: EventTarget,
): void {
  target.addEventListener("keydown", (raw) => {
    const ev = raw as KeyboardEvent;
    const key = KEY_MAP[ev.key] ?? (ev.key.length === 1 ? ev.key.toLowerCase() : null);
    if (key === null) return;
    ev.preventDefault();
    void session.handleKey(key).then(async (outcome) => {
      render(session, els);
      if (outcome.sessionComplete) await showSummary(session, els);
    });
  });
}
