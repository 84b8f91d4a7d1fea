import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curricullm.envs import env_description, get_env
from curricullm.errors import (
    CurriculumTooLong,
    FixtureExhausted,
    FixtureKeyMissing,
    IndexOutOfRange,
    MissingContextField,
    MissingField,
    NoDecisionFound,
    NonSuccessStatus,
    NoTasksFound,
    ResponseParseError,
    TransportError,
)
from curricullm.llm import (
    CURRICULUM,
    DSL_GRAMMAR_CARD,
    EVALUATION,
    TASK_CODE,
    ChatRequest,
    Curriculum,
    Gateway,
    HistoryItem,
    LiveBackend,
    ReplayBackend,
    ScriptedBackend,
    TaskSpec,
    parse_backend_spec,
    parse_curriculum,
    parse_decision,
    render_curriculum,
    render_prompt,
)

DATA = Path(__file__).parent / "data"
MAZE = get_env("point_maze")


# --- parsers -------------------------------------------------------------------------------------


def test_curriculum_from_reference_transcript():
    cur = parse_curriculum((DATA / "reference_curriculum.txt").read_text())
    assert [t.name for t in cur] == [
        "Basic Locomotion", "Advanced Locomotion", "Full Speed and Agility Training", "Original task",
    ]
    assert [t.index for t in cur] == [1, 2, 3, 4]
    assert all(t.description and t.reason for t in cur)


def test_decision_from_reference_transcript():
    decision = parse_decision((DATA / "reference_decision.txt").read_text(), 4)
    assert decision.agent_index == 1
    assert decision.reason


@pytest.mark.parametrize("text,index", [
    ("Decision: Agent [2]\nReason: fast", 2),
    ("decision: agent 0", 0),
    ("**Decision:** Agent 3\nReason: x", 3),
    ("Some preamble.\nDecision: Agent[1]", 1),
])
def test_decision_formats(text, index):
    assert parse_decision(text, 4).agent_index == index


def test_decision_errors():
    with pytest.raises(NoDecisionFound):
        parse_decision("I like the second one.", 4)
    with pytest.raises(IndexOutOfRange):
        parse_decision("Decision: Agent 9", 4)
    with pytest.raises(IndexOutOfRange):
        parse_decision("Decision: Agent 99999999999999999999", 4)


def test_curriculum_errors():
    with pytest.raises(NoTasksFound):
        parse_curriculum("No tasks here.")
    with pytest.raises(MissingField):
        parse_curriculum("Task 1\nName: a\nDescription: b\n")
    many = "\n".join(f"Task {i}\nName: n{i}\nDescription: d\nReason: r" for i in range(1, 10))
    with pytest.raises(CurriculumTooLong):
        parse_curriculum(many)


def test_curriculum_markdown_and_continuation_lines():
    text = "## Task 1:\n**Name:** Walk\n- Description: step\n  forward\nReason: basics\n\nTask 2\nName: Run\nDescription: d\nReason: r"
    cur = parse_curriculum(text)
    assert cur[0].name == "Walk" and cur[0].description == "step forward"
    assert cur.target.name == "Run"


_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyz ", min_size=1, max_size=20).map(str.strip).filter(bool)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(_word, _word, _word), min_size=1, max_size=8))
def test_render_parse_round_trip(triples):
    cur = Curriculum(tuple(TaskSpec(i, " ".join(n.split()), " ".join(d.split()), " ".join(r.split()))
                           for i, (n, d, r) in enumerate(triples, start=1)))
    assert parse_curriculum(render_curriculum(cur)) == cur


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=300))
def test_parsers_never_crash(text):
    for call in (lambda: parse_curriculum(text), lambda: parse_decision(text, 3)):
        try:
            call()
        except ResponseParseError:
            pass


# --- prompts ----------------------------------------------------------------------------------------


TASK = TaskSpec(2, "Turn the corner", "Reach goals up to 3 cells away.", "Builds on task 1.")
PRIOR = TaskSpec(1, "Reach nearby goals", "Goals within one cell.", "Basic control.")


def test_curriculum_prompt_mentions_every_variable():
    req = render_prompt(CURRICULUM, {"environment": env_description(MAZE), "target": MAZE.target_description})
    user = req.messages[1][1]
    for v in MAZE.variables:
        assert v.name in user
    assert "Original task" in user
    assert req == render_prompt(CURRICULUM, {"environment": env_description(MAZE),
                                             "target": MAZE.target_description})


def test_task_code_prompt_history():
    ctx = {"task": TASK, "environment": env_description(MAZE), "grammar": DSL_GRAMMAR_CARD, "history": []}
    first = render_prompt(TASK_CODE, ctx).messages[1][1]
    assert "Previously learned tasks" not in first
    assert "Task Name: Turn the corner" in first
    ctx["history"] = [HistoryItem(PRIOR, "```reward\nreturn -dist_to_goal\n```")]
    later = render_prompt(TASK_CODE, ctx).messages[1][1]
    assert "Previously learned tasks (most recent first):" in later
    assert "return -dist_to_goal" in later
    assert render_prompt(TASK_CODE, ctx) == render_prompt(TASK_CODE, dict(ctx))


def test_history_budget_drops_oldest_first():
    items = [HistoryItem(TaskSpec(i, f"task{i}", "d", "r"), "x" * 200) for i in range(1, 6)]
    ctx = {"task": TASK, "environment": "env", "grammar": "g", "history": items, "history_char_budget": 600}
    user = render_prompt(TASK_CODE, ctx).messages[1][1]
    assert "task5" in user and "task4" in user
    assert "task1" not in user
    assert user.index("task5") < user.index("task4")


def test_placeholders_in_values_are_not_expanded():
    odd = TaskSpec(1, "<<Task_Reason>>", "d", "secret")
    user = render_prompt(EVALUATION, {"task": odd, "history": [], "summaries": "Agent 0:\n"}).messages[1][1]
    assert "Task Name: <<Task_Reason>>" in user


def test_missing_context_field():
    with pytest.raises(MissingContextField):
        render_prompt(TASK_CODE, {"task": TASK})
    with pytest.raises(ValueError):
        render_prompt("bogus", {})


def test_evaluation_prompt_temperature_zero():
    req = render_prompt(EVALUATION, {"task": TASK, "history": [HistoryItem(PRIOR, "c")],
                                     "summaries": "Agent 0:\nsuccess_rate: 1.000"})
    assert req.temperature == 0.0
    user = req.messages[1][1]
    assert "Decision: Agent [number]" in user and "Reach nearby goals" in user


# --- backends -----------------------------------------------------------------------------------


REQ = ChatRequest("m", (("system", "s"), ("user", "u")))


def test_live_backend_wire_format(monkeypatch):
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": "hi"}}]})

    monkeypatch.setenv("CURRICULLM_API_KEY", "tok")
    backend = LiveBackend("http://llm.test/v1", model="served", transport=httpx.MockTransport(handler))
    assert backend.complete(REQ, ("curriculum", 0, 0)) == ["hi"]
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer tok"
    assert seen["body"] == {"model": "served", "messages": [{"role": "system", "content": "s"},
                                                            {"role": "user", "content": "u"}],
                            "temperature": 1.0, "n": 1}


def test_live_backend_malformed_body():
    backend = LiveBackend("http://llm.test", transport=httpx.MockTransport(lambda r: httpx.Response(200, json={})))
    with pytest.raises(TransportError):
        backend.complete(REQ, ("curriculum", 0, 0))


class _Deny(BaseHTTPRequestHandler):
    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        body = b'{"error": "bad key"}'
        self.send_response(401)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def test_live_backend_real_socket_non_success():
    server = HTTPServer(("127.0.0.1", 0), _Deny)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        backend = LiveBackend(f"http://127.0.0.1:{server.server_port}", api_key="x")
        with pytest.raises(NonSuccessStatus) as info:
            backend.complete(REQ, ("curriculum", 0, 0))
        assert info.value.code == 401
    finally:
        server.shutdown()


def test_live_backend_connection_refused():
    server = HTTPServer(("127.0.0.1", 0), _Deny)
    port = server.server_port
    server.server_close()
    with pytest.raises(TransportError):
        LiveBackend(f"http://127.0.0.1:{port}", timeout=2).complete(REQ, ("curriculum", 0, 0))


def test_scripted_backend_and_gateway_attempts():
    backend = ScriptedBackend({"task_code/1": ["a", "b"], "curriculum/0": "c"})
    gw = Gateway(backend)
    assert gw.complete(REQ, "task_code", 1) == "a"
    assert gw.complete(REQ, "task_code", 1) == "b"
    assert gw.complete(REQ, "curriculum", 0) == "c"
    with pytest.raises(FixtureExhausted):
        gw.complete(REQ, "task_code", 1)
    with pytest.raises(FixtureKeyMissing) as info:
        gw.complete(REQ, "evaluation", 1)
    assert "evaluation stage, subtask 1" in str(info.value)
    assert gw.calls == 5


def test_replay_records_then_serves(tmp_path):
    inner = ScriptedBackend({"task_code/1": ["a", "b"]})
    first = Gateway(ReplayBackend(tmp_path, inner))
    assert [first.complete(REQ, "task_code", 1) for _ in range(2)] == ["a", "b"]
    assert inner.calls == 2
    replay = ReplayBackend(tmp_path, inner)
    second = Gateway(replay)
    assert [second.complete(REQ, "task_code", 1) for _ in range(2)] == ["a", "b"]
    assert inner.calls == 2 and replay.calls == 0
    record = json.loads((tmp_path / "task_code_01_00.json").read_text())
    assert record["key"] == ["task_code", 1, 0] and record["response"] == ["a"]
    with pytest.raises(FixtureKeyMissing):
        ReplayBackend(tmp_path).complete(REQ, ("task_code", 1, 2))


def test_parse_backend_spec(tmp_path):
    fixture = tmp_path / "f.json"
    fixture.write_text(json.dumps({"responses": {"curriculum/0": ["x"]}}))
    assert isinstance(parse_backend_spec(f"scripted:{fixture}"), ScriptedBackend)
    live = parse_backend_spec("live:http://h:1/v1,my-model")
    assert isinstance(live, LiveBackend) and live.model == "my-model" and live.url == "http://h:1/v1/chat/completions"
    replay = parse_backend_spec(f"replay:{tmp_path},http://h:1,m")
    assert isinstance(replay, ReplayBackend) and isinstance(replay.inner, LiveBackend)
    for bad in ("nope", "scripted:", "ftp:x"):
        with pytest.raises(ValueError):
            parse_backend_spec(bad)


def test_chat_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", ())
    with pytest.raises(ValueError):
        ChatRequest("m", (("assistant", "x"),))
    with pytest.raises(ValueError):
        ChatRequest("m", (("user", "x"),), temperature=-1)
