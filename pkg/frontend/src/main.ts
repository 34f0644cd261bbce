/**
 * Browser entry point: owns the WebSocket and the DOM, delegates all
 * protocol handling to SessionConsole and all markup to view.ts.
 */

import { SessionConsole } from "./console.js";
import {
  renderDialogueHtml,
  renderMeasuresHtml,
  renderQuestionHtml,
  renderStatusHtml,
  renderWorldHtml,
} from "./view.js";

const DEFAULT_SERVER = "ws://127.0.0.1:8765/session";

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found;
}

const statusEl = element("status");
const worldEl = element("world");
const dialogueEl = element("dialogue");
const questionEl = element("question");
const measuresEl = element("measures");
const serverInput = element("server-url") as HTMLInputElement;
const connectButton = element("connect") as HTMLButtonElement;

serverInput.value =
  new URLSearchParams(location.search).get("server") ?? DEFAULT_SERVER;

let socket: WebSocket | null = null;
const console_ = new SessionConsole({ send: (data) => socket?.send(data) }, render);

function render(): void {
  const state = console_.state;
  statusEl.innerHTML = renderStatusHtml(state);
  worldEl.innerHTML = renderWorldHtml(state.snapshot);
  dialogueEl.innerHTML = renderDialogueHtml(state.lines);
  dialogueEl.scrollTop = dialogueEl.scrollHeight;
  questionEl.innerHTML = renderQuestionHtml(state.pending);
  measuresEl.innerHTML = renderMeasuresHtml(state.measures);
  wireAnswerControls();
}

function wireAnswerControls(): void {
  const yes = document.getElementById("answer-yes");
  const no = document.getElementById("answer-no");
  const send = document.getElementById("answer-send");
  const text = document.getElementById("answer-text") as
    | HTMLInputElement
    | HTMLTextAreaElement
    | null;
  yes?.addEventListener("click", () => console_.answerYesNo(true));
  no?.addEventListener("click", () => console_.answerYesNo(false));
  if (send && text) {
    const submit = () => console_.answerText(text.value);
    send.addEventListener("click", submit);
    text.addEventListener("keydown", (ev: Event) => {
      const key = (ev as KeyboardEvent).key;
      if (key === "Enter" && !(text instanceof HTMLTextAreaElement)) {
        submit();
      }
    });
    text.focus();
  }
}

function connect(): void {
  socket?.close();
  const url = serverInput.value.trim() || DEFAULT_SERVER;
  socket = new WebSocket(url);
  console_.attach({ send: (data) => socket?.send(data) });
  socket.onopen = () => console_.connectionOpened();
  socket.onmessage = (ev) => console_.handleMessage(String(ev.data));
  socket.onclose = () => console_.connectionClosed();
  socket.onerror = () => console_.connectionClosed();
}

connectButton.addEventListener("click", connect);
window.addEventListener("beforeunload", () => {
  try {
    console_.sayGoodbye();
  } catch {
    // the socket may already be gone; leaving is best-effort
  }
});

connect();
render();
