"""Live session server: wire protocol, resume, and golden-episode parity."""

import json

import pytest
from starlette.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from helpers import PLATE_GOAL_SENTENCE
from tidyagent.resources import data_path
from tidyagent.session import PROTOCOL_VERSION, TerminalInstructor, create_app

PLATE_WORLD = data_path("worlds/plate.json")
PLATE_CASSETTE = data_path("cassettes/plate_instruction_search2_llm.jsonl")
GOLDEN = data_path("golden/plate_transcript.json")

INTRO_TEXT = "The task is to tidy the kitchen.\nClear all the objects on the table."


def plate_app(**kwargs):
    return create_app(
        PLATE_WORLD, "instruction+search2+llm", PLATE_CASSETTE, **kwargs
    )


def answer_for(question: dict):
    """The scripted-instructor-equivalent answer to one live question."""
    if question["form"] == "intro":
        return INTRO_TEXT
    if question["form"] == "open":
        assert question["purpose"] == "goal"
        return PLATE_GOAL_SENTENCE
    assert question["form"] == "yesno"
    return question["purpose"] == "action"  # reject all goals, accept actions


def send_answer(ws, question: dict, value) -> None:
    key = "text" if isinstance(value, str) else "yes"
    ws.send_json(
        {"v": PROTOCOL_VERSION, "kind": "answer", "id": question["id"], key: value}
    )


def drive_to_completion(ws, seen):
    """Answer every question like the plate script until the session is done."""
    while True:
        message = ws.receive_json()
        seen.append(message)
        if message["kind"] == "question":
            send_answer(ws, message, answer_for(message))
        elif message["kind"] == "done":
            return message
        elif message["kind"] == "error":
            raise AssertionError(f"session failed: {message['reason']}")


def golden_events() -> list[dict]:
    return json.loads(GOLDEN.read_text())["events"]


def test_live_plate_session_matches_scripted_golden():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            hello = ws.receive_json()
            assert hello["kind"] == "hello"
            assert hello["condition"] == "instruction+search2+llm"
            assert hello["world"] == "plate.json"
            seen: list[dict] = []
            done = drive_to_completion(ws, seen)
        assert done["measures"]["completion_rate"] == 100.0
        assert done["measures"]["relevance_pct"] == 40.0
        assert done["measures"]["n_instructions"] == 8

        questions = [m for m in seen if m["kind"] == "question"]
        forms = [q["form"] for q in questions]
        assert forms == ["intro", "yesno", "yesno", "yesno", "open", "yesno", "yesno"]
        # LLM-sourced yes/no questions carry the [LM] tag and a probability
        for q in questions:
            if q["form"] == "yesno":
                assert q["rendered"].startswith("[LM] ")
                assert 0.0 < q["display_prob"] <= 1.0

        # an initial world snapshot, then one more per executed action
        worlds = [m for m in seen if m["kind"] == "world"]
        actions = [
            m
            for m in seen
            if m["kind"] == "event" and m["event"]["kind"] == "action_executed"
        ]
        assert len(worlds) == len(actions) + 1
        final_locations = {
            o["id"]: o.get("location") for o in worlds[-1]["snapshot"]["objects"]
        }
        assert final_locations["plate-1"] == "dishwasher"

        # the server-side transcript is event-identical to the scripted golden
        transcript = client.get("/transcript").json()
        assert transcript["events"] == golden_events()

        health = client.get("/health").json()
        assert health["status"] == "ok"
        assert health["done"] is True
        assert health["error"] is None


def test_reconnect_resumes_transcript_and_pending_question():
    app = plate_app()
    with TestClient(app) as client:
        first_events = []
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            pending_before = None
            answered = 0
            while True:
                message = ws.receive_json()
                if message["kind"] == "event":
                    first_events.append(message["event"])
                if message["kind"] == "question":
                    if answered < 2:  # intro, then first goal reject
                        send_answer(ws, message, answer_for(message))
                        answered += 1
                    else:
                        pending_before = message  # leave unanswered, drop link
                        break
            assert pending_before["form"] == "yesno"
        # disconnected mid-question; reconnect and resume
        with client.websocket_connect("/session") as ws:
            hello = ws.receive_json()
            assert hello["kind"] == "hello"
            assert hello["backlog"] > 0
            replayed = []
            represented = None
            while represented is None:
                message = ws.receive_json()
                if message["kind"] == "event":
                    replayed.append(message["event"])
                if message["kind"] == "question":
                    represented = message
            # the backlog replays every event the first console saw
            assert replayed[: len(first_events)] == first_events
            # and the same unanswered question is re-presented verbatim
            assert represented["id"] == pending_before["id"]
            assert represented["candidate"] == pending_before["candidate"]
            seen: list[dict] = []
            send_answer(ws, represented, answer_for(represented))
            drive_to_completion(ws, seen)
        transcript = client.get("/transcript").json()
        assert transcript["events"] == golden_events()


def test_duplicate_answer_is_rejected_server_side():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            question = None
            while question is None:
                message = ws.receive_json()
                if message["kind"] == "question":
                    question = message
            send_answer(ws, question, INTRO_TEXT)
            send_answer(ws, question, INTRO_TEXT)  # duplicate
            rejected = None
            while rejected is None:
                message = ws.receive_json()
                if message["kind"] == "rejected":
                    rejected = message
            assert rejected["id"] == question["id"]
            assert "duplicate" in rejected["reason"]
            ws.send_json({"v": PROTOCOL_VERSION, "kind": "bye"})
        # the duplicate neither crashed the session nor re-answered anything
        assert client.get("/health").json()["error"] is None


def test_answer_to_unknown_question_is_rejected():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            ws.send_json(
                {"v": PROTOCOL_VERSION, "kind": "answer", "id": "q999", "yes": True}
            )
            rejected = None
            while rejected is None:
                message = ws.receive_json()
                if message["kind"] == "rejected":
                    rejected = message
            assert rejected["id"] == "q999"
            assert "no such pending question" in rejected["reason"]


def test_wrong_answer_shape_is_rejected_not_fatal():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            question = None
            while question is None:
                message = ws.receive_json()
                if message["kind"] == "question":
                    question = message
            assert question["form"] == "intro"
            send_answer(ws, question, True)  # yes/no to a text question
            rejected = None
            while rejected is None:
                message = ws.receive_json()
                if message["kind"] == "rejected":
                    rejected = message
            assert "text" in rejected["reason"]
            # the question is still pending and still answerable
            send_answer(ws, question, INTRO_TEXT)
            saw_intro_utterance = False
            for _ in range(20):
                message = ws.receive_json()
                if (
                    message["kind"] == "event"
                    and message["event"]["kind"] == "instructor_utterance"
                ):
                    saw_intro_utterance = True
                    break
            assert saw_intro_utterance


def test_second_console_is_refused():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as first:
            assert first.receive_json()["kind"] == "hello"
            with client.websocket_connect("/session") as second:
                refusal = second.receive_json()
                assert refusal["kind"] == "error"
                assert "another console" in refusal["reason"]
                with pytest.raises(WebSocketDisconnect) as info:
                    second.receive_json()
                assert info.value.code == 1008
        # after the first console leaves, a new one may attach
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"


@pytest.mark.parametrize(
    "frame, expected",
    [
        ("not json", "not valid JSON"),
        (json.dumps([1, 2]), "JSON object"),
        (json.dumps({"v": 2, "kind": "answer", "id": "q1", "yes": True}), "version"),
        (json.dumps({"v": 1, "kind": "dance"}), "unknown message kind"),
        (json.dumps({"v": 1, "kind": "answer", "id": 7, "yes": True}), "string"),
        (
            json.dumps({"v": 1, "kind": "answer", "id": "q1", "yes": True, "text": "x"}),
            "exactly one",
        ),
        (json.dumps({"v": 1, "kind": "answer", "id": "q1", "yes": "yep"}), "boolean"),
    ],
)
def test_protocol_violation_closes_cleanly(frame, expected):
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            ws.send_text(frame)
            error = None
            with pytest.raises(WebSocketDisconnect) as info:
                for _ in range(50):
                    message = ws.receive_json()
                    if message["kind"] == "error":
                        error = message
            assert error is not None and expected in error["reason"]
            assert info.value.code == 1002
        # the session survives the violation: reconnect and finish normally
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            drive_to_completion(ws, [])
        assert client.get("/transcript").json()["events"] == golden_events()


def test_bye_detaches_without_ending_session():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            ws.send_json({"v": PROTOCOL_VERSION, "kind": "bye"})
            with pytest.raises(WebSocketDisconnect) as info:
                for _ in range(50):
                    ws.receive_json()
            assert info.value.code == 1000
        assert client.get("/health").json()["done"] is False
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            drive_to_completion(ws, [])


def test_answer_timeout_fails_session():
    app = plate_app(answer_timeout=0.2)
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            error = None
            with pytest.raises(WebSocketDisconnect) as info:
                for _ in range(50):
                    message = ws.receive_json()
                    if message["kind"] == "error":
                        error = message
            assert error is not None and "timeout" in error["reason"]
            assert info.value.code == 1011
        assert client.get("/health").json()["error"] is not None


def test_transcript_endpoint_streams_partial_events():
    app = plate_app()
    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            assert ws.receive_json()["kind"] == "hello"
            question = None
            while question is None:
                message = ws.receive_json()
                if message["kind"] == "question":
                    question = message
            send_answer(ws, question, INTRO_TEXT)
            # wait until both intro utterances have been mirrored
            mirrored = 0
            while mirrored < 2:
                message = ws.receive_json()
                if (
                    message["kind"] == "event"
                    and message["event"]["kind"] == "instructor_utterance"
                ):
                    mirrored += 1
            partial = client.get("/transcript").json()
            kinds = [e["kind"] for e in partial["events"]]
            assert kinds[:2] == ["instructor_utterance", "instructor_utterance"]
            assert partial["meta"]["condition"] == "instruction+search2+llm"
            ws.send_json({"v": PROTOCOL_VERSION, "kind": "bye"})


def test_terminal_instructor_answers():
    feeds = iter(
        [
            "The task is to tidy the kitchen.",
            "Clear all the objects on the table.",
            "",
            "maybe",
            "y",
            "N",
            "",
            "Pick up the ceramic-plate",
        ]
    )
    printed: list[str] = []
    terminal = TerminalInstructor(lambda prompt: next(feeds), printed.append)
    assert terminal.task_intro() == [
        "The task is to tidy the kitchen.",
        "Clear all the objects on the table.",
    ]
    from tidyagent.instructor import DialogueTurn

    turn = DialogueTurn(
        purpose="action", subtask="clear", category="ceramic-plate", text="ok?"
    )
    assert terminal.ask_yesno(turn) is True  # "maybe" re-prompts, then "y"
    assert any("please answer" in line for line in printed)
    assert terminal.ask_yesno(turn) is False
    assert terminal.ask_open(turn) == "Pick up the ceramic-plate"


def test_terminal_session_runs_plate_episode():
    answers = iter(
        [
            "The task is to tidy the kitchen.",
            "Clear all the objects on the table.",
            "",
            "n",
            "n",
            "n",
            PLATE_GOAL_SENTENCE,
            "y",
            "y",
        ]
    )
    lines: list[str] = []
    from tidyagent.session import _serve_terminal

    code = _serve_terminal(
        PLATE_WORLD,
        "instruction+search2+llm",
        PLATE_CASSETTE,
        input_fn=lambda prompt: next(answers),
        print_fn=lines.append,
    )
    assert code == 0
    output = "\n".join(lines)
    assert "* Open dishwasher [llm]" in output
    assert "achieved" in output
    assert "100.0" in output and "40.0" in output
