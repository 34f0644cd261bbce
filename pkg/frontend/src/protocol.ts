/**
 * Wire protocol v1 spoken by the live session server.
 *
 * Server -> console frames: hello, world, event, question, rejected,
 * done, error. Console -> server frames: answer (yes/no or text) and
 * bye. Log frames (world/event/done/error) carry a seq number; hello,
 * question, and rejected are transient. The console is a pure view of
 * this stream: it never originates state of its own.
 */

export const PROTOCOL_VERSION = 1;

export type QuestionForm = "intro" | "yesno" | "open";

export interface HelloFrame {
  v: 1;
  kind: "hello";
  condition: string;
  world: string;
  backlog: number;
}

export interface SnapshotEntity {
  id: string;
  category: string;
  affordances?: string[];
  properties?: string[];
  location?: string;
}

export interface WorldSnapshot {
  schema_version?: number;
  room?: { id: string; category: string };
  robot_location?: string;
  locations: SnapshotEntity[];
  objects: SnapshotEntity[];
  gripper?: string;
}

export interface WorldFrame {
  v: 1;
  seq: number;
  kind: "world";
  snapshot: WorldSnapshot;
}

/** One transcript event, verbatim from the session log. */
export interface TranscriptEvent {
  seq: number;
  kind: string;
  [field: string]: unknown;
}

export interface EventFrame {
  v: 1;
  seq: number;
  kind: "event";
  event: TranscriptEvent;
}

export interface QuestionFrame {
  v: 1;
  kind: "question";
  id: string;
  form: QuestionForm;
  purpose: string;
  subtask: string;
  category: string;
  step: number;
  rank: number;
  question: string;
  rendered: string;
  candidate: string;
  llm: boolean;
  display_prob?: number;
}

export interface RejectedFrame {
  v: 1;
  kind: "rejected";
  id: string;
  reason: string;
}

export interface Measures {
  condition: string;
  completion_rate: number;
  relevance_pct: number | null;
  n_instructions: number;
  n_words: number;
  n_yesno: number;
}

export interface DoneFrame {
  v: 1;
  seq: number;
  kind: "done";
  measures: Measures;
}

export interface ErrorFrame {
  v: 1;
  seq: number;
  kind: "error";
  reason: string;
}

export type ServerFrame =
  | HelloFrame
  | WorldFrame
  | EventFrame
  | QuestionFrame
  | RejectedFrame
  | DoneFrame
  | ErrorFrame;

const SERVER_KINDS = new Set([
  "hello",
  "world",
  "event",
  "question",
  "rejected",
  "done",
  "error",
]);

export class ProtocolError extends Error {}

/** Parse one server frame, throwing ProtocolError on anything malformed. */
export function parseServerFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not JSON");
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new ProtocolError("frame is not an object");
  }
  const frame = data as Record<string, unknown>;
  if (frame.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version: ${frame.v}`);
  }
  if (typeof frame.kind !== "string" || !SERVER_KINDS.has(frame.kind)) {
    throw new ProtocolError(`unknown frame kind: ${frame.kind}`);
  }
  return frame as unknown as ServerFrame;
}

export function encodeYesNo(id: string, yes: boolean): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, kind: "answer", id, yes });
}

export function encodeText(id: string, text: string): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, kind: "answer", id, text });
}

export function encodeBye(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, kind: "bye" });
}

/** Candidate probabilities display to three decimals. */
export function formatProb(p: number): string {
  return p.toFixed(3);
}

export function formatPercent(value: number | null): string {
  return value === null ? "--" : value.toFixed(1);
}

/**
 * Dialogue lines for one transcript event; an empty result means the
 * event has no dialogue rendering (llm_query is tallied, not shown).
 */
export function describeEvent(event: TranscriptEvent): string[] {
  switch (event.kind) {
    case "instructor_utterance": {
      const question = String(event.question ?? "");
      const say = `Instructor: ${event.text}`;
      return question ? [`Agent: ${question}`, say] : [say];
    }
    case "instructor_yesno":
      return [
        `Agent: ${event.question}`,
        `Instructor: ${event.answer ? "yes" : "no"}`,
      ];
    case "llm_candidate_shown": {
      const prob = formatProb(Number(event.display_prob ?? 0));
      const rank = Number(event.rank ?? 0) + 1;
      return [`[LM] candidate ${rank} (p=${prob}): ${event.text}`];
    }
    case "action_executed": {
      const note = event.ok ? "" : ` (failed: ${event.error ?? "?"})`;
      return [`* ${event.rendered} [${event.source}]${note}`];
    }
    case "goal_outcome": {
      const verdict = event.achieved ? "achieved" : "not achieved";
      const reason = event.reason ? ` (${event.reason})` : "";
      return [`=> goal for ${event.object_id}: ${verdict}${reason}`];
    }
    default:
      return [];
  }
}
