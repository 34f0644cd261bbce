/**
 * HTML builders for the three panels: world, dialogue, and the pending
 * question. Pure string functions so the rendering is unit-testable
 * without a browser; main.ts assigns the results to the page.
 */

import {
  ConsoleState,
} from "./console.js";
import {
  Measures,
  QuestionFrame,
  SnapshotEntity,
  WorldSnapshot,
  formatPercent,
  formatProb,
} from "./protocol.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function entityLabel(entity: SnapshotEntity): string {
  const closed = (entity.properties ?? []).includes("closed");
  return `${entity.id}${closed ? " (closed)" : ""}`;
}

export function renderWorldHtml(snapshot: WorldSnapshot | null): string {
  if (!snapshot) {
    return `<p class="muted">waiting for the first world snapshot…</p>`;
  }
  const byLocation = new Map<string, SnapshotEntity[]>();
  for (const obj of snapshot.objects) {
    const where = obj.location ?? "";
    if (!byLocation.has(where)) byLocation.set(where, []);
    byLocation.get(where)!.push(obj);
  }
  const parts: string[] = [];
  if (snapshot.gripper) {
    parts.push(
      `<div class="gripper">gripper: ${escapeHtml(snapshot.gripper)}</div>`
    );
  }
  for (const location of snapshot.locations) {
    const contents = byLocation.get(location.id) ?? [];
    const items = contents
      .map((o) => `<li>${escapeHtml(o.id)}</li>`)
      .join("");
    parts.push(
      `<div class="location"><span class="loc-name">` +
        `${escapeHtml(entityLabel(location))}</span>` +
        (items ? `<ul>${items}</ul>` : `<ul class="empty"></ul>`) +
        `</div>`
    );
  }
  return parts.join("\n");
}

export function renderDialogueHtml(lines: string[]): string {
  return lines
    .map((line) => {
      let cls = "line";
      if (line.startsWith("[LM]")) cls += " lm";
      else if (line.startsWith("*")) cls += " action";
      else if (line.startsWith("=>")) cls += " outcome";
      else if (line.startsWith("Instructor:")) cls += " instructor";
      return `<div class="${cls}">${escapeHtml(line)}</div>`;
    })
    .join("\n");
}

export function renderQuestionHtml(pending: QuestionFrame | null): string {
  if (!pending) {
    return `<p class="muted">no question pending</p>`;
  }
  const badge = pending.llm ? `<span class="badge">[LM]</span> ` : "";
  if (pending.form === "yesno") {
    const prob =
      pending.display_prob === undefined
        ? ""
        : ` <span class="prob">p=${formatProb(pending.display_prob)}</span>`;
    return (
      `<div class="card">${badge}` +
      `<span class="candidate">${escapeHtml(pending.candidate)}</span>` +
      `${prob}</div>` +
      `<p class="question">${escapeHtml(pending.question)}</p>` +
      `<button id="answer-yes">Yes</button>` +
      `<button id="answer-no">No</button>`
    );
  }
  const multiline = pending.form === "intro";
  const input = multiline
    ? `<textarea id="answer-text" rows="3" ` +
      `placeholder="one sentence per line"></textarea>`
    : `<input id="answer-text" type="text" />`;
  return (
    `<p class="question">${badge}${escapeHtml(pending.question)}</p>` +
    `${input}<button id="answer-send">Send</button>`
  );
}

export function renderMeasuresHtml(measures: Measures | null): string {
  if (!measures) return "";
  const rows: Array<[string, string]> = [
    ["condition", measures.condition],
    ["completion rate (%)", formatPercent(measures.completion_rate)],
    ["relevant LLM responses (%)", formatPercent(measures.relevance_pct)],
    ["# of instructions", String(measures.n_instructions)],
    ["# of words", String(measures.n_words)],
    ["# yes/no", String(measures.n_yesno)],
  ];
  const body = rows
    .map(
      ([k, v]) =>
        `<tr><td>${escapeHtml(k)}</td><td>${escapeHtml(v)}</td></tr>`
    )
    .join("");
  return `<table class="measures">${body}</table>`;
}

export function renderStatusHtml(state: ConsoleState): string {
  const where =
    state.condition && state.world
      ? ` — ${escapeHtml(state.condition)} on ${escapeHtml(state.world)}`
      : "";
  let status: string = state.status;
  if (state.fault) status = `session error: ${state.fault}`;
  else if (state.measures) status = "session complete";
  const notice = state.notice
    ? `<span class="notice">${escapeHtml(state.notice)}</span>`
    : "";
  return (
    `<span class="status ${state.status}">${escapeHtml(status)}</span>` +
    `${where} ${notice}`
  );
}
