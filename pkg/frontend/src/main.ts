import { StudyClient } from "./client.js";
import { UiSession } from "./session.js";
import { attachKeyboard, bindElements, render } from "./dom.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8000";
const participant = params.get("participant") ?? "anonymous";
const seed = Number(params.get("seed") ?? "0");
const existing = params.get("session");

const client = new StudyClient(base);
const session = new UiSession(client, () => performance.now());
const els = bindElements(document);

(existing ? session.resume(existing) : session.start(participant, undefined, seed))
  .then(() => {
    render(session, els);
    attachKeyboard(session, els, document);
  })
  .catch((err) => {
    els.status.textContent = `failed to start: ${err}`;
  });
