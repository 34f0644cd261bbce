import { beforeEach, describe, expect, it } from "vitest";

import { SessionConsole } from "../src/console";
import { QuestionFrame } from "../src/protocol";

class FakeSocket {
  sent: string[] = [];
  send(data: string): void {
    this.sent.push(data);
  }
}

function frame(payload: object): string {
  return JSON.stringify({ v: 1, ...payload });
}

function question(overrides: Partial<QuestionFrame> = {}): string {
  return frame({
    kind: "question",
    id: "q1",
    form: "yesno",
    purpose: "goal",
    subtask: "clear",
    category: "ceramic-plate",
    step: 0,
    rank: 0,
    question: "For a ceramic-plate on the table is x?",
    rendered: "[LM] For a ceramic-plate on the table is x?",
    candidate: "The goal is that x",
    llm: true,
    display_prob: 0.915,
    ...overrides,
  });
}

describe("SessionConsole", () => {
  let socket: FakeSocket;
  let konsole: SessionConsole;

  beforeEach(() => {
    socket = new FakeSocket();
    konsole = new SessionConsole(socket);
  });

  it("tracks hello, world, and event frames", () => {
    konsole.handleMessage(
      frame({ kind: "hello", condition: "instruction+search2+llm", world: "plate", backlog: 0 })
    );
    expect(konsole.state.condition).toBe("instruction+search2+llm");
    expect(konsole.state.world).toBe("plate");

    konsole.handleMessage(
      frame({
        kind: "world",
        seq: 0,
        snapshot: {
          locations: [{ id: "table", category: "table" }],
          objects: [{ id: "plate-1", category: "ceramic-plate", location: "table" }],
        },
      })
    );
    expect(konsole.state.snapshot?.objects[0]?.id).toBe("plate-1");

    konsole.handleMessage(
      frame({
        kind: "event",
        seq: 1,
        event: {
          seq: 0,
          kind: "instructor_utterance",
          object_id: "",
          question: "",
          text: "The task is to tidy the kitchen.",
          word_count: 7,
        },
      })
    );
    konsole.handleMessage(
      frame({ kind: "event", seq: 2, event: { seq: 1, kind: "llm_query" } })
    );
    expect(konsole.state.lines).toEqual([
      "Instructor: The task is to tidy the kitchen.",
    ]);
    expect(konsole.state.llmQueries).toBe(1);
  });

  it("answers a yes/no question exactly once", () => {
    konsole.handleMessage(question());
    expect(konsole.state.pending?.id).toBe("q1");

    expect(konsole.answerYesNo(false)).toBe(true);
    expect(socket.sent).toEqual([
      JSON.stringify({ v: 1, kind: "answer", id: "q1", yes: false }),
    ]);
    // inputs are disabled until the next question: pending is cleared
    expect(konsole.state.pending).toBeNull();

    // a double-click cannot produce a second answer
    expect(konsole.answerYesNo(false)).toBe(false);
    expect(socket.sent).toHaveLength(1);
  });

  it("suppresses answers when nothing is pending or the form differs", () => {
    expect(konsole.answerYesNo(true)).toBe(false);
    expect(konsole.answerText("hi")).toBe(false);

    konsole.handleMessage(question({ id: "q2" }));
    expect(konsole.answerText("not a yes/no")).toBe(false);
    expect(konsole.answerYesNo(true)).toBe(true);
    expect(socket.sent).toHaveLength(1);
  });

  it("sends typed text for open and intro questions, rejecting blanks", () => {
    konsole.handleMessage(
      question({ id: "q3", form: "intro", question: "What is the task?" })
    );
    expect(konsole.answerText("   ")).toBe(false);
    expect(konsole.answerText("Tidy up.\nClear the table.")).toBe(true);
    expect(JSON.parse(socket.sent[0]!)).toEqual({
      v: 1,
      kind: "answer",
      id: "q3",
      text: "Tidy up.\nClear the table.",
    });
  });

  it("ignores a re-presented question that was already answered", () => {
    konsole.handleMessage(question({ id: "q4" }));
    konsole.answerYesNo(true);
    konsole.handleMessage(question({ id: "q4" }));
    expect(konsole.state.pending).toBeNull();
    expect(socket.sent).toHaveLength(1);
  });

  it("keeps duplicate suppression across a reconnect replay", () => {
    konsole.handleMessage(
      frame({ kind: "hello", condition: "c", world: "w", backlog: 0 })
    );
    konsole.handleMessage(question({ id: "q5" }));
    konsole.answerYesNo(true);

    // reconnect: fresh hello resets derived state, log replays from 0
    const rewired = new FakeSocket();
    konsole.attach(rewired);
    konsole.connectionOpened();
    konsole.handleMessage(
      frame({ kind: "hello", condition: "c", world: "w", backlog: 3 })
    );
    expect(konsole.state.lines).toEqual([]);
    konsole.handleMessage(question({ id: "q5" }));
    expect(konsole.state.pending).toBeNull();
    expect(konsole.answerYesNo(true)).toBe(false);
    expect(rewired.sent).toHaveLength(0);
  });

  it("surfaces rejections without dropping the session", () => {
    konsole.handleMessage(
      frame({ kind: "rejected", id: "q9", reason: "duplicate answer" })
    );
    expect(konsole.state.notice).toContain("duplicate answer");
    konsole.handleMessage(question({ id: "q10" }));
    expect(konsole.answerYesNo(true)).toBe(true);
  });

  it("records done measures and error faults, clearing the question", () => {
    konsole.handleMessage(question({ id: "q11" }));
    konsole.handleMessage(
      frame({
        kind: "done",
        seq: 40,
        measures: {
          condition: "instruction+search2+llm",
          completion_rate: 100.0,
          relevance_pct: 40.0,
          n_instructions: 8,
          n_words: 36,
          n_yesno: 5,
        },
      })
    );
    expect(konsole.state.measures?.completion_rate).toBe(100.0);
    expect(konsole.state.pending).toBeNull();

    konsole.handleMessage(frame({ kind: "error", seq: 41, reason: "boom" }));
    expect(konsole.state.fault).toBe("boom");
  });

  it("notes malformed server frames instead of crashing", () => {
    konsole.handleMessage("garbage");
    expect(konsole.state.notice).toContain("not JSON");
  });
});
