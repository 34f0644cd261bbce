/**
 * The console's state machine: a pure view over the server's frame
 * stream plus the one thing the instructor may do — answer the single
 * pending question. Socket- and DOM-free so it can be driven by any
 * transport (browser WebSocket, test fake, Node client).
 */

import {
  Measures,
  QuestionFrame,
  ServerFrame,
  TranscriptEvent,
  WorldSnapshot,
  describeEvent,
  encodeBye,
  encodeText,
  encodeYesNo,
  parseServerFrame,
} from "./protocol.js";

/** Anything with a send(string); the browser WebSocket qualifies. */
export interface Outbox {
  send(data: string): void;
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ConsoleState {
  status: ConnectionStatus;
  condition: string;
  world: string;
  snapshot: WorldSnapshot | null;
  /** Dialogue lines derived from transcript events, in seq order. */
  lines: string[];
  llmQueries: number;
  actionCount: number;
  pending: QuestionFrame | null;
  notice: string;
  measures: Measures | null;
  fault: string;
}

export function initialState(): ConsoleState {
  return {
    status: "connecting",
    condition: "",
    world: "",
    snapshot: null,
    lines: [],
    llmQueries: 0,
    actionCount: 0,
    pending: null,
    notice: "",
    measures: null,
    fault: "",
  };
}

export class SessionConsole {
  readonly state: ConsoleState = initialState();
  /** Question ids already answered; duplicates are suppressed here and
   * rejected server-side, so one id can never produce two answers. */
  private readonly answered = new Set<string>();
  private outbox: Outbox;
  private readonly onChange: () => void;

  constructor(outbox: Outbox, onChange: () => void = () => {}) {
    this.outbox = outbox;
    this.onChange = onChange;
  }

  /** Swap the transport after a reconnect; state carries over. */
  attach(outbox: Outbox): void {
    this.outbox = outbox;
    this.state.status = "connecting";
    this.onChange();
  }

  connectionOpened(): void {
    this.state.status = "open";
    this.state.notice = "";
    this.onChange();
  }

  connectionClosed(): void {
    this.state.status = "closed";
    this.state.pending = null;
    this.onChange();
  }

  /** Feed one raw server message through the state machine. */
  handleMessage(raw: string): void {
    let frame: ServerFrame;
    try {
      frame = parseServerFrame(raw);
    } catch (err) {
      this.state.notice = String(err instanceof Error ? err.message : err);
      this.onChange();
      return;
    }
    this.apply(frame);
    this.onChange();
  }

  private apply(frame: ServerFrame): void {
    const state = this.state;
    switch (frame.kind) {
      case "hello":
        // A hello starts a (re)played log from seq 0: reset everything
        // derived from frames, but keep answered ids so a reconnect can
        // never double-answer a question.
        state.condition = frame.condition;
        state.world = frame.world;
        state.snapshot = null;
        state.lines = [];
        state.llmQueries = 0;
        state.actionCount = 0;
        state.pending = null;
        state.measures = null;
        state.fault = "";
        break;
      case "world":
        state.snapshot = frame.snapshot;
        break;
      case "event":
        this.applyEvent(frame.event);
        break;
      case "question":
        if (!this.answered.has(frame.id)) {
          state.pending = frame;
        }
        break;
      case "rejected":
        state.notice = `answer rejected: ${frame.reason}`;
        break;
      case "done":
        state.measures = frame.measures;
        state.pending = null;
        break;
      case "error":
        state.fault = frame.reason;
        state.pending = null;
        break;
    }
  }

  private applyEvent(event: TranscriptEvent): void {
    if (event.kind === "llm_query") {
      this.state.llmQueries += 1;
      return;
    }
    if (event.kind === "action_executed") {
      this.state.actionCount += 1;
    }
    this.state.lines.push(...describeEvent(event));
  }

  /** Answer the pending yes/no question. Returns whether a message was
   * actually sent; duplicates and mismatched forms are suppressed. */
  answerYesNo(yes: boolean): boolean {
    const pending = this.state.pending;
    if (!pending || pending.form !== "yesno" || this.answered.has(pending.id)) {
      return false;
    }
    this.answered.add(pending.id);
    this.state.pending = null;
    this.outbox.send(encodeYesNo(pending.id, yes));
    this.onChange();
    return true;
  }

  /** Answer the pending intro/open question with typed text. */
  answerText(text: string): boolean {
    const pending = this.state.pending;
    if (
      !pending ||
      (pending.form !== "open" && pending.form !== "intro") ||
      this.answered.has(pending.id) ||
      text.trim() === ""
    ) {
      return false;
    }
    this.answered.add(pending.id);
    this.state.pending = null;
    this.outbox.send(encodeText(pending.id, text));
    this.onChange();
    return true;
  }

  sayGoodbye(): void {
    this.outbox.send(encodeBye());
  }
}
