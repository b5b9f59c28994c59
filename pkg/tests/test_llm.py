import os

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugisolate.llm import (
    ApiError,
    Conversation,
    HttpGateway,
    LlmReply,
    MissingFixture,
    MockGateway,
    ModelConfig,
    Timeout,
    TransportError,
    extract_program,
    prompt_hash,
)
from bugisolate.program import parse

OK_BODY = {"choices": [{"message": {"role": "assistant", "content": "hello"}}], "usage": {"prompt_tokens": 3, "completion_tokens": 1}}


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

    def sleep(self, s):
        self.now += s


def gateway(handler, clock=None):
    clock = clock or FakeClock()
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpGateway(client, sleep=clock.sleep, clock=clock), clock


def convo(text="hi"):
    return Conversation().user(text)


class TestConfig:
    def test_defaults(self):
        assert ModelConfig().temperature == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            ModelConfig(timeout=0)
        with pytest.raises(ValueError):
            ModelConfig(temperature=-1)


class TestConversation:
    def test_alternation_enforced(self):
        c = Conversation().system("s").user("u")
        with pytest.raises(ValueError):
            c.user("again")
        c.assistant("a").user("u2")
        assert [m.role for m in c.messages] == ["system", "user", "assistant", "user"]

    def test_window_keeps_system_and_starts_on_user(self):
        c = Conversation().system("s")
        for i in range(5):
            c.user(f"u{i}").assistant(f"a{i}")
        c.user("last")
        w = c.window(6)
        assert w.messages[0].role == "system"
        assert w.messages[1].role == "user"
        assert len(w.messages) <= 7
        assert w.messages[-1].content == "last"


class TestHttpGateway:
    def test_success_and_request_shape(self, monkeypatch):
        monkeypatch.setenv("TEST_KEY", "sekrit")
        seen = {}

        def handler(request):
            seen["url"] = str(request.url)
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = request.read()
            return httpx.Response(200, json=OK_BODY)

        gw, _ = gateway(handler)
        reply = gw.complete(convo(), ModelConfig(endpoint="http://x/v1", api_key_env="TEST_KEY"))
        assert reply.text == "hello" and reply.prompt_tokens == 3
        assert seen["url"] == "http://x/v1/chat/completions"
        assert seen["auth"] == "Bearer sekrit"
        assert b'"temperature":1.0' in seen["body"].replace(b" ", b"")

    def test_unreachable_raises_transport_error_after_retries(self):
        calls = []

        def handler(request):
            calls.append(1)
            raise httpx.ConnectError("refused", request=request)

        gw, _ = gateway(handler)
        with pytest.raises(TransportError):
            gw.complete(convo(), ModelConfig(endpoint="http://x", max_retries=2))
        assert len(calls) == 3

    def test_server_error_is_retried(self):
        statuses = iter([503, 200])

        def handler(request):
            code = next(statuses)
            return httpx.Response(code, json=OK_BODY if code == 200 else {"error": "busy"})

        gw, clock = gateway(handler)
        assert gw.complete(convo(), ModelConfig(endpoint="http://x", backoff=2.0)).text == "hello"
        assert clock.now == 2.0

    def test_client_error_is_not_retried(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(401, text="bad key")

        gw, _ = gateway(handler)
        with pytest.raises(ApiError) as err:
            gw.complete(convo(), ModelConfig(endpoint="http://x"))
        assert err.value.status == 401 and len(calls) == 1

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.5, 30), st.integers(0, 5), st.floats(0.1, 20))
    def test_never_blocks_past_deadline(self, timeout, retries, backoff):
        clock = FakeClock()

        def handler(request):
            clock.now += request.extensions["timeout"]["read"]
            raise httpx.ReadTimeout("slow", request=request)

        gw, _ = gateway(handler, clock)
        with pytest.raises(Timeout):
            gw.complete(convo(), ModelConfig(endpoint="http://x", timeout=timeout, max_retries=retries, backoff=backoff))
        assert clock.now <= timeout * (retries + 1) + 1e-9

    @pytest.mark.skipif("BUGISOLATE_LIVE_ENDPOINT" not in os.environ, reason="no live endpoint configured")
    def test_live_endpoint(self):
        cfg = ModelConfig(endpoint=os.environ["BUGISOLATE_LIVE_ENDPOINT"], model=os.environ.get("BUGISOLATE_LIVE_MODEL", "gpt-3.5-turbo"))
        assert HttpGateway().complete(convo("Say hi."), cfg).text


class TestMockGateway:
    def test_replay_by_hash(self, tmp_path):
        (tmp_path / f"{prompt_hash('p1')}.txt").write_text("first")
        (tmp_path / f"{prompt_hash('p1')}.1.txt").write_text("second")
        gw = MockGateway(tmp_path)
        assert [gw.complete(convo("p1")).text for _ in range(3)] == ["first", "second", "first"]
        again = MockGateway(tmp_path)
        assert [again.complete(convo("p1")).text for _ in range(3)] == ["first", "second", "first"]

    def test_default_and_missing(self, tmp_path):
        gw = MockGateway(tmp_path)
        with pytest.raises(MissingFixture):
            gw.complete(convo("unknown"))
        (tmp_path / "_default.txt").write_text("fallback")
        assert gw.complete(convo("unknown")).text == "fallback"


class TestExtract:
    def test_fenced(self):
        reply = "Here you go:\n```c\nint main() { return 1; }\n```\nEnjoy."
        assert extract_program(LlmReply(reply)).text == "int main() { return 1; }\n"

    def test_prose_only(self):
        reply = "You can replace the binary operator `||` with the logical operator `&&`."
        assert extract_program(LlmReply(reply)) is None

    def test_first_of_two_blocks(self):
        reply = "```c\nint a;\n```\nor\n```c\nint b;\n```"
        assert extract_program(reply).text == "int a;\n"

    def test_unparseable_fence(self):
        assert extract_program("```c\nint main( {\n```") is None

    def test_unfenced_code_region(self):
        reply = "Sure, here is the program\nint a;\nint main() {\n  a = 1;\n  return a;\n}\nHope it helps."
        assert extract_program(reply).text == "int a;\nint main() {\n  a = 1;\n  return a;\n}\n"


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("int main(){};=x1\n`c ")), max_size=80))
def test_extracted_programs_always_parse(text):
    prog = extract_program(text)
    if prog is not None:
        parse(prog)
