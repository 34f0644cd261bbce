"""Live session server: one learning session exposed to a companion console.

The agent runs on a worker thread and blocks inside ``ask`` calls exactly as
it does against a scripted instructor; the server mediates between those
blocking asks and the console's asynchronous messages through a bounded
queue holding at most the one in-flight answer. Exactly one console may be
attached at a time, and a console that reconnects is caught up from the
transcript before the pending question is re-presented.

## Wire protocol, version 1

Messages are JSON objects over a WebSocket at ``/session``. Every message
carries ``"v": 1``. Unknown kinds, other versions, or non-JSON frames are
protocol violations: the server sends an ``error`` message and closes the
connection (the underlying agent session keeps running and a console may
reconnect).

Server -> console:

    {"v", "kind": "hello", "condition", "world", "backlog"}
        Sent once per connection. ``backlog`` is the number of logged
        messages about to be replayed (0 on a fresh session).
    {"v", "seq", "kind": "world", "snapshot"}
        Full world fixture snapshot; sent at start and after every action.
    {"v", "seq", "kind": "event", "event"}
        One transcript event verbatim (llm_query, llm_candidate_shown,
        instructor_yesno, instructor_utterance, action_executed,
        goal_outcome). Candidate lists and dialogue turns are rendered
        from these.
    {"v", "kind": "question", "id", "form", ...}
        The single in-flight question. ``form`` is one of:
          "intro"  open text; reply with the task description, one
                   sentence per line in a single ``text`` answer;
          "yesno"  candidate confirmation; fields ``purpose``, ``subtask``,
                   ``category``, ``step``, ``rank``, ``question``,
                   ``rendered`` (with any [LM] tag), ``candidate``,
                   ``llm``, and ``display_prob`` when LLM-sourced;
          "open"   free-text fallback; same fields minus the candidate.
        Re-sent on reconnect if still unanswered.
    {"v", "kind": "rejected", "id", "reason"}
        The answer was not accepted (duplicate, stale, or wrong shape).
        The session continues; a pending question stays pending.
    {"v", "seq", "kind": "done", "measures"}
        Session complete; the server closes the socket normally.
    {"v", "seq", "kind": "error", "reason"}
        Session failed (cassette mismatch, answer timeout, ...).

``seq`` orders the replayable log (world/event/done/error); hello,
question, and rejected frames are connection-level and unnumbered.

Console -> server:

    {"v": 1, "kind": "answer", "id", "yes": true|false}   yes/no answer
    {"v": 1, "kind": "answer", "id", "text": "..."}       typed utterance
    {"v": 1, "kind": "bye"}                               detach politely

Each question id accepts exactly one answer; later answers to the same id
are rejected. HTTP endpoints: ``GET /health`` (status summary) and
``GET /transcript`` (the transcript JSON accumulated so far).
"""

from __future__ import annotations

import asyncio
import json
import queue
import socket
import sys
import threading
from pathlib import Path

import anyio
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .agent import SessionConfig, learn_task
from .harness import Measures, compute_measures, condition_needs_cassette, report_table
from .instructor import DialogueTurn
from .knowledge import KnowledgeStore
from .llm.client import Cassette, ClientError, LiveClient, LiveConfig, ReplayClient
from .transcript import SCHEMA_VERSION, EpisodeTranscript
from .world import PrimitiveAction, WorldError, apply, dump_world, load_world

PROTOCOL_VERSION = 1

INTRO_QUESTION = "What is the task? Describe it one sentence per line."

_ABORT = object()


class SessionClosed(Exception):
    """The session ended underneath a blocking ask."""


class SessionHub:
    """Thread-safe state shared by the agent thread and the websocket.

    The agent thread writes events and blocks in ``ask``; websocket
    handlers read the log with ``poll`` and feed answers via ``submit``.
    """

    def __init__(self, world, meta: dict, answer_timeout: float | None = None):
        self._lock = threading.Lock()
        self._log: list[dict] = []
        self._listeners: list = []
        self._answers: queue.Queue = queue.Queue(maxsize=1)
        self._pending: dict | None = None
        self._answered: set[str] = set()
        self._question_count = 0
        self._probs: dict[str, float] = {}
        self._world = world
        self._attached = False
        self._shutdown = False
        self.meta = dict(meta)
        self.events: list[dict] = []
        self.done = False
        self.error: str | None = None
        self.final_transcript: EpisodeTranscript | None = None
        self.measures: Measures | None = None
        self.answer_timeout = answer_timeout
        with self._lock:
            self._publish_locked("world", snapshot=dump_world(world))

    # -- log plumbing ---------------------------------------------------------

    def _publish_locked(self, kind: str, **fields) -> dict:
        envelope = {"v": PROTOCOL_VERSION, "seq": len(self._log), "kind": kind}
        envelope.update(fields)
        self._log.append(envelope)
        for listener in list(self._listeners):
            listener()
        return envelope

    def add_listener(self, callback) -> None:
        with self._lock:
            self._listeners.append(callback)

    def remove_listener(self, callback) -> None:
        with self._lock:
            if callback in self._listeners:
                self._listeners.remove(callback)

    def poll(self, cursor: int) -> tuple[list[dict], dict | None, bool, str | None]:
        with self._lock:
            pending = dict(self._pending) if self._pending is not None else None
            return self._log[cursor:], pending, self.done, self.error

    def log_length(self) -> int:
        with self._lock:
            return len(self._log)

    # -- agent-side calls -------------------------------------------------------

    def observe_event(self, event: dict) -> None:
        """Transcript observer: mirror the event and track derived state."""
        with self._lock:
            self.events.append(event)
            if event["kind"] == "llm_candidate_shown":
                self._probs[event["text"]] = event["display_prob"]
            self._publish_locked("event", event=event)
            if (
                event["kind"] == "action_executed"
                and event["ok"]
                and event["verb"] != "approach"
            ):
                try:
                    self._world = apply(
                        self._world,
                        PrimitiveAction(event["verb"], tuple(event["args"])),
                    )
                except WorldError:
                    pass
                else:
                    self._publish_locked("world", snapshot=dump_world(self._world))

    def candidate_prob(self, text: str) -> float | None:
        with self._lock:
            return self._probs.get(text)

    def ask(self, form: str, fields: dict):
        """Present one question and block until its answer arrives."""
        with self._lock:
            if self._shutdown or self.error:
                raise SessionClosed(self.error or "session shut down")
            self._question_count += 1
            question_id = f"q{self._question_count}"
            self._pending = {
                "v": PROTOCOL_VERSION,
                "kind": "question",
                "id": question_id,
                "form": form,
                **fields,
            }
            for listener in list(self._listeners):
                listener()
        try:
            value = self._answers.get(timeout=self.answer_timeout)
        except queue.Empty:
            self.fail("answer timeout")
            raise SessionClosed("answer timeout") from None
        if value is _ABORT:
            raise SessionClosed("session shut down")
        return value

    def complete(self, transcript: EpisodeTranscript, measures: Measures) -> None:
        with self._lock:
            self.final_transcript = transcript
            self.measures = measures
            self.done = True
            self._publish_locked("done", measures=measures.to_dict())

    def fail(self, reason: str) -> None:
        with self._lock:
            if self.done or self.error:
                return
            self.error = reason
            self._pending = None
            self._publish_locked("error", reason=reason)

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True
            self._pending = None
        try:
            self._answers.put_nowait(_ABORT)
        except queue.Full:
            pass

    # -- console-side calls -------------------------------------------------------

    def try_attach(self) -> bool:
        with self._lock:
            if self._attached:
                return False
            self._attached = True
            return True

    def detach(self) -> None:
        with self._lock:
            self._attached = False

    def is_attached(self) -> bool:
        with self._lock:
            return self._attached

    def submit(self, question_id: str, value) -> str | None:
        """Accept one answer; returns a rejection reason or None."""
        with self._lock:
            if self.done or self.error:
                return "session is over"
            pending = self._pending
            if pending is None or pending["id"] != question_id:
                if question_id in self._answered:
                    return "duplicate answer: question already answered"
                return "no such pending question"
            expects_text = pending["form"] in ("open", "intro")
            if expects_text and not isinstance(value, str):
                return "this question expects a text answer"
            if not expects_text and not isinstance(value, bool):
                return "this question expects a yes/no answer"
            self._answered.add(question_id)
            self._pending = None
        self._answers.put(value)
        return None

    def transcript_dict(self) -> dict:
        with self._lock:
            if self.final_transcript is not None:
                return self.final_transcript.to_dict()
            return {
                "schema_version": SCHEMA_VERSION,
                "meta": {"planner_calls": 0, **self.meta},
                "events": list(self.events),
            }


class LiveInstructor:
    """Instructor whose answers come from the attached console."""

    def __init__(self, hub: SessionHub):
        self._hub = hub

    def task_intro(self) -> list[str]:
        while True:
            text = self._hub.ask(
                "intro", {"question": INTRO_QUESTION, "rendered": INTRO_QUESTION}
            )
            lines = [line.strip() for line in str(text).splitlines() if line.strip()]
            if lines:
                return lines

    def ask_yesno(self, turn: DialogueTurn) -> bool:
        return bool(self._hub.ask("yesno", self._turn_fields(turn)))

    def ask_open(self, turn: DialogueTurn) -> str:
        return str(self._hub.ask("open", self._turn_fields(turn)))

    def _turn_fields(self, turn: DialogueTurn) -> dict:
        fields = {
            "purpose": turn.purpose,
            "subtask": turn.subtask,
            "category": turn.category,
            "step": turn.step,
            "rank": turn.rank,
            "question": turn.text,
            "rendered": turn.render(),
            "candidate": turn.candidate,
            "llm": turn.llm_sourced,
        }
        if turn.llm_sourced and turn.candidate:
            prob = self._hub.candidate_prob(turn.candidate)
            if prob is not None:
                fields["display_prob"] = prob
        return fields


def _run_agent(hub, world, config, instructor, client, knowledge, meta, assertions):
    try:
        transcript = learn_task(
            world,
            config,
            instructor,
            client,
            knowledge,
            assertions=assertions,
            meta=meta,
            observers=[hub.observe_event],
        )
    except SessionClosed:
        return
    except Exception as exc:  # surfaced to the console as an error frame
        hub.fail(f"{type(exc).__name__}: {exc}")
        return
    hub.complete(transcript, compute_measures(transcript))


def create_app(
    world_path: str | Path,
    condition: str,
    cassette_path: str | Path | None = None,
    *,
    answer_timeout: float | None = None,
    live_config_path: str | Path | None = None,
) -> FastAPI:
    """Build the session app; the agent thread starts with the app lifespan."""
    raw = json.loads(Path(world_path).read_text())
    world = load_world(raw)
    config = SessionConfig.from_condition(condition)
    client = None
    if condition_needs_cassette(condition):
        if cassette_path is not None:
            client = ReplayClient(Cassette.load(cassette_path))
        else:
            client = LiveClient(LiveConfig.load(live_config_path))
    meta = {
        "condition": condition,
        "world": Path(world_path).name,
        "script": "",
        "cassette": Path(cassette_path).name if cassette_path else "",
    }
    hub = SessionHub(world, meta, answer_timeout)
    thread = threading.Thread(
        target=_run_agent,
        args=(
            hub,
            world,
            config,
            LiveInstructor(hub),
            client,
            KnowledgeStore(),
            meta,
            raw.get("truth"),
        ),
        daemon=True,
        name="tidyagent-session",
    )

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app):
        thread.start()
        try:
            yield
        finally:
            hub.shutdown()
            thread.join(timeout=5)

    app = FastAPI(title="tidyagent live session", lifespan=lifespan)
    app.state.hub = hub

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "condition": condition,
            "world": meta["world"],
            "attached": hub.is_attached(),
            "done": hub.done,
            "error": hub.error,
        }

    @app.get("/transcript")
    def transcript() -> dict:
        return hub.transcript_dict()

    @app.websocket("/session")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        if not hub.try_attach():
            await ws.send_json(
                {
                    "v": PROTOCOL_VERSION,
                    "kind": "error",
                    "reason": "another console is attached",
                }
            )
            await ws.close(code=1008)
            return
        loop = asyncio.get_running_loop()
        wake = asyncio.Event()

        def listener() -> None:
            loop.call_soon_threadsafe(wake.set)

        hub.add_listener(listener)
        try:
            await ws.send_json(
                {
                    "v": PROTOCOL_VERSION,
                    "kind": "hello",
                    "condition": condition,
                    "world": meta["world"],
                    "backlog": hub.log_length(),
                }
            )
            async with anyio.create_task_group() as tg:

                async def pump(work) -> None:
                    # A socket torn down mid-send surfaces as a disconnect
                    # or a send-after-close RuntimeError; either way this
                    # half is finished, and the other half must stop too.
                    try:
                        await work
                    except (WebSocketDisconnect, RuntimeError):
                        pass
                    finally:
                        tg.cancel_scope.cancel()

                tg.start_soon(pump, _send_loop(ws, hub, wake))
                tg.start_soon(pump, _receive_loop(ws, hub))
        finally:
            hub.remove_listener(listener)
            hub.detach()

    return app


async def _send_loop(ws: WebSocket, hub: SessionHub, wake: asyncio.Event) -> None:
    cursor = 0
    sent_question: str | None = None
    while True:
        entries, pending, done, error = hub.poll(cursor)
        for envelope in entries:
            await ws.send_json(envelope)
        cursor += len(entries)
        if pending is not None and pending["id"] != sent_question:
            await ws.send_json(pending)
            sent_question = pending["id"]
        if (done or error) and cursor == hub.log_length():
            await ws.close(code=1000 if done else 1011)
            return
        await wake.wait()
        wake.clear()


async def _violation(ws: WebSocket, reason: str) -> None:
    await ws.send_json(
        {"v": PROTOCOL_VERSION, "kind": "error", "reason": reason}
    )
    await ws.close(code=1002)


async def _receive_loop(ws: WebSocket, hub: SessionHub) -> None:
    while True:
        raw = await ws.receive_text()
        try:
            message = json.loads(raw)
        except json.JSONDecodeError:
            return await _violation(ws, "message is not valid JSON")
        if not isinstance(message, dict):
            return await _violation(ws, "message must be a JSON object")
        if message.get("v") != PROTOCOL_VERSION:
            return await _violation(
                ws, f"unsupported protocol version: {message.get('v')!r}"
            )
        kind = message.get("kind")
        if kind == "bye":
            await ws.close(code=1000)
            return
        if kind != "answer":
            return await _violation(ws, f"unknown message kind: {kind!r}")
        question_id = message.get("id")
        if not isinstance(question_id, str):
            return await _violation(ws, "answer needs a string question id")
        has_yes = "yes" in message
        has_text = "text" in message
        if has_yes == has_text:
            return await _violation(
                ws, "answer carries exactly one of 'yes' or 'text'"
            )
        value = message["yes"] if has_yes else message["text"]
        if has_yes and not isinstance(value, bool):
            return await _violation(ws, "'yes' must be a boolean")
        if has_text and not isinstance(value, str):
            return await _violation(ws, "'text' must be a string")
        rejection = hub.submit(question_id, value)
        if rejection is not None:
            await ws.send_json(
                {
                    "v": PROTOCOL_VERSION,
                    "kind": "rejected",
                    "id": question_id,
                    "reason": rejection,
                }
            )


# -- terminal mode ------------------------------------------------------------------


class TerminalInstructor:
    """Blocking stdin/stdout instructor for headless interactive sessions."""

    def __init__(self, input_fn=input, print_fn=print):
        self._input = input_fn
        self._print = print_fn

    def task_intro(self) -> list[str]:
        self._print("Describe the task, one sentence per line; finish with an empty line.")
        lines: list[str] = []
        while True:
            line = self._input("task> ").strip()
            if not line:
                if lines:
                    return lines
                continue
            lines.append(line)

    def ask_yesno(self, turn: DialogueTurn) -> bool:
        while True:
            raw = self._input(f"{turn.render()} [y/n] ").strip().lower()
            if raw in ("y", "yes"):
                return True
            if raw in ("n", "no"):
                return False
            self._print("please answer y or n")

    def ask_open(self, turn: DialogueTurn) -> str:
        while True:
            text = self._input(f"{turn.render()} > ").strip()
            if text:
                return text


def _terminal_narration(print_fn):
    def on_event(event: dict) -> None:
        if event["kind"] == "action_executed":
            mark = "*" if event["ok"] else "!"
            print_fn(f"  {mark} {event['rendered']} [{event['source']}]")
        elif event["kind"] == "goal_outcome":
            status = "achieved" if event["achieved"] else "NOT achieved"
            reason = event.get("reason")
            suffix = f" ({reason})" if reason and not event["achieved"] else ""
            print_fn(f"  => goal for {event['object_id']}: {status}{suffix}")

    return on_event


def _serve_terminal(
    world_path: str | Path,
    condition: str,
    cassette_path: str | Path | None,
    input_fn=input,
    print_fn=print,
) -> int:
    raw = json.loads(Path(world_path).read_text())
    world = load_world(raw)
    config = SessionConfig.from_condition(condition)
    client = None
    if condition_needs_cassette(condition):
        if cassette_path is not None:
            client = ReplayClient(Cassette.load(cassette_path))
        else:
            client = LiveClient(LiveConfig.load())
    meta = {
        "condition": condition,
        "world": Path(world_path).name,
        "script": "",
        "cassette": Path(cassette_path).name if cassette_path else "",
    }
    transcript = learn_task(
        world,
        config,
        TerminalInstructor(input_fn, print_fn),
        client,
        KnowledgeStore(),
        assertions=raw.get("truth"),
        meta=meta,
        observers=[_terminal_narration(print_fn)],
    )
    print_fn("")
    print_fn(report_table([compute_measures(transcript)]).rstrip("\n"))
    return 0


def serve(
    world_path: str | Path,
    condition: str,
    cassette_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8765,
    terminal: bool = False,
    *,
    answer_timeout: float | None = None,
    input_fn=input,
    print_fn=print,
) -> int:
    """Run a live session: WebSocket server by default, or plain terminal."""
    if terminal:
        return _serve_terminal(world_path, condition, cassette_path, input_fn, print_fn)
    app = create_app(
        world_path, condition, cassette_path, answer_timeout=answer_timeout
    )
    try:
        probe = socket.socket()
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        print(f"cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return 1
    import uvicorn

    print(f"session server on ws://{host}:{port}/session ({condition})", file=sys.stderr)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


__all__ = [
    "INTRO_QUESTION",
    "LiveInstructor",
    "PROTOCOL_VERSION",
    "SessionClosed",
    "SessionHub",
    "TerminalInstructor",
    "create_app",
    "serve",
]
