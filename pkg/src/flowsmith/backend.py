"""Chat-completion backends: an OpenAI-compatible HTTP client and a scripted
stand-in that replays canned responses for offline runs and tests.

Requests carry a ``step`` tag naming the pipeline step that issued them
("generate", "refine", one of the critique steps).  The HTTP backend ignores
it; the scripted backend uses it to pick which canned conversation to replay.

Script files are plain text.  A record starts with a header line

    %% <step> [usage=<input>,<output>,<reasoning>]

and runs until the next header.  Records with the same step tag are consumed
in file order, one per call; running past the end of a tag's records is an
error, never a silent repeat.
"""
from __future__ import annotations

import os
import re
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import requests

STEP_GENERATE = "generate"
STEP_REFINE = "refine"
STEP_CRITIQUE_STRUCTURAL = "critique-structural"
STEP_CRITIQUE_ALIGNMENT = "critique-alignment"
STEP_CRITIQUE_COMBINED = "critique-combined"

PROFILE_INSTRUCTION = "instruction"
PROFILE_REASONING = "reasoning"


class BackendError(RuntimeError):
    def __init__(self, message: str, attempts: int = 1):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class ScriptExhaustedError(BackendError):
    def __init__(self, step: str, used: int):
        self.step = step
        RuntimeError.__init__(
            self, f"script exhausted: no response left for step '{step}' "
            f"(consumed {used})"
        )
        self.attempts = 1


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0
    reasoning_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
            self.reasoning_tokens + other.reasoning_tokens,
        )


@dataclass(frozen=True)
class ChatRequest:
    role_definition: str
    body: str
    step: str = STEP_GENERATE
    temperature: float | None = None
    max_output: int | None = None

    def __post_init__(self):
        if not self.body:
            raise ValueError("chat request body must be nonempty")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Usage
    usage_warning: bool = False


class LlmBackend(ABC):
    @abstractmethod
    def complete(self, request: ChatRequest) -> ChatResponse:
        ...


@dataclass
class HttpBackendConfig:
    url: str
    model: str
    auth_env: str = "LLM_API_TOKEN"
    profile: str = PROFILE_INSTRUCTION
    temperature: float = 0.0
    retries: int = 3
    backoff: float = 0.5
    timeout: float = 120.0


class HttpBackend(LlmBackend):
    """Client for OpenAI-compatible chat-completions endpoints.

    Instruction-following profiles pin the temperature (0.0 by default);
    reasoning profiles omit it entirely and leave the provider default in
    place.  Transient failures are retried with exponential backoff; usage is
    recorded verbatim from the response, zeroed with a warning when absent or
    malformed.
    """

    def __init__(self, config: HttpBackendConfig):
        self.config = config

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload: dict = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.role_definition},
                {"role": "user", "content": request.body},
            ],
        }
        if self.config.profile == PROFILE_INSTRUCTION:
            temperature = request.temperature
            payload["temperature"] = (
                self.config.temperature if temperature is None else temperature
            )
        if request.max_output is not None:
            payload["max_tokens"] = request.max_output

        headers = {}
        token = os.environ.get(self.config.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"

        last_error = "chat request failed"
        attempts = 0
        for attempt in range(self.config.retries + 1):
            attempts = attempt + 1
            if attempt:
                time.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                response = requests.post(
                    self.config.url,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = f"chat transport failure: {exc}"
                continue
            if response.status_code != 200:
                last_error = f"chat endpoint returned HTTP {response.status_code}"
                continue
            try:
                data = response.json()
                text = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                last_error = f"malformed chat response: {exc}"
                continue
            if not isinstance(text, str):
                last_error = "chat response content is not text"
                continue
            usage, warning = _extract_usage(data.get("usage"))
            return ChatResponse(text, usage, warning)
        raise BackendError(last_error, attempts)


def _extract_usage(raw) -> tuple[Usage, bool]:
    if not isinstance(raw, dict):
        return Usage(), True
    try:
        details = raw.get("completion_tokens_details") or {}
        reasoning = details.get("reasoning_tokens", raw.get("reasoning_tokens", 0))
        usage = Usage(
            int(raw["prompt_tokens"]),
            int(raw["completion_tokens"]),
            int(reasoning or 0),
        )
    except (KeyError, TypeError, ValueError):
        return Usage(), True
    if min(usage.input_tokens, usage.output_tokens, usage.reasoning_tokens) < 0:
        return Usage(), True
    return usage, False


@dataclass(frozen=True)
class ScriptEntry:
    text: str
    usage: Usage | None = None


@dataclass
class ScriptedBackend(LlmBackend):
    """Replays canned responses keyed by (step, per-step invocation index)."""

    script: dict[str, list[ScriptEntry]]
    calls: list[str] = field(default_factory=list)
    requests: list[ChatRequest] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> ChatResponse:
        entries = self.script.get(request.step, [])
        used = sum(1 for step in self.calls if step == request.step)
        if used >= len(entries):
            raise ScriptExhaustedError(request.step, used)
        self.calls.append(request.step)
        self.requests.append(request)
        entry = entries[used]
        usage = entry.usage
        if usage is None:
            usage = Usage(
                (len(request.role_definition) + len(request.body)) // 4,
                len(entry.text) // 4,
                0,
            )
        return ChatResponse(entry.text, usage)

    def calls_for(self, step: str) -> int:
        return sum(1 for s in self.calls if s == step)


_HEADER = re.compile(
    r"^%%\s*(?P<step>[a-z-]+)\s*(?:usage=(?P<u>\d+)\s*,\s*(?P<o>\d+)\s*,\s*(?P<r>\d+))?\s*$"
)


def parse_script(text: str) -> dict[str, list[ScriptEntry]]:
    script: dict[str, list[ScriptEntry]] = {}
    step: str | None = None
    usage: Usage | None = None
    lines: list[str] = []

    def flush():
        if step is not None:
            body = "\n".join(lines).strip("\n")
            script.setdefault(step, []).append(ScriptEntry(body, usage))

    for line in text.splitlines():
        header = _HEADER.match(line.strip())
        if header:
            flush()
            step = header.group("step")
            usage = None
            if header.group("u") is not None:
                usage = Usage(
                    int(header.group("u")),
                    int(header.group("o")),
                    int(header.group("r")),
                )
            lines = []
        elif step is not None:
            lines.append(line)
        elif line.strip():
            raise ValueError("script content before first '%% <step>' header")
    flush()
    return script


def load_script(path: str | Path) -> ScriptedBackend:
    return ScriptedBackend(parse_script(Path(path).read_text(encoding="utf-8")))


# -- response post-processing -------------------------------------------------

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_csv_candidates(text: str) -> list[str]:
    """Plausible CSV payloads from a chat response, most likely first.

    Preference order: fenced blocks tagged csv, any fenced block, the longest
    contiguous run of ';'-terminated lines, then the whole text.  The caller
    tries to parse them in turn.
    """
    candidates: list[str] = []
    tagged = re.findall(r"```csv[^\n]*\n(.*?)```", text, re.DOTALL | re.IGNORECASE)
    candidates.extend(block.strip() for block in tagged)
    candidates.extend(block.strip() for block in _FENCE.findall(text))

    runs: list[list[str]] = [[]]
    for line in text.splitlines():
        if line.strip().endswith(";"):
            runs[-1].append(line)
        elif runs[-1]:
            runs.append([])
    best_run = max(runs, key=len)
    if best_run:
        candidates.append("\n".join(best_run).strip())

    candidates.append(text.strip())
    seen: set[str] = set()
    unique = []
    for candidate in candidates:
        if candidate and candidate not in seen:
            seen.add(candidate)
            unique.append(candidate)
    return unique
