"""Adapters over the student and reflection language models.

Two backends: a deterministic mock (rule table keyed on request substrings,
plus named reflection behaviors) for tests and offline runs, and a remote
HTTP chat-completion backend for real models.  Credentials come from an
environment variable named in the config and are never written to disk.
"""

from __future__ import annotations

import json
import os
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import requests

from .errors import BackendError, EmptyReflectionError, ExtractionError
from .pragma import PRAGMA_PREFIX

BACKEND_MOCK = "mock"
BACKEND_REMOTE = "remote"


class ModelRole(Enum):
    STUDENT = "student"  # generates pragma lines
    REFLECTION = "reflection"  # generates new prompt instruction text


@dataclass
class ModelConfig:
    backend: str = BACKEND_MOCK
    endpoint: str = ""
    model_name: str = ""
    temperature: float = 0.7
    max_output_tokens: int = 512
    timeout: float = 60.0
    retries: int = 2
    credential_env: str = "GEPACC_API_KEY"
    extra_headers: dict = field(default_factory=dict)
    # Mock-only knobs.  Rules are (matcher substring, canned output) pairs,
    # first match wins; reflection/merge are named behaviors or callables.
    mock_rules: tuple[tuple[str, str], ...] = ()
    mock_default: str | None = None
    mock_reflection: str | Callable = "echo"
    mock_merge: str | Callable = "concat"
    mock_recorder: list | None = None


@dataclass(frozen=True)
class Completion:
    text: str
    input_tokens: int = 0
    output_tokens: int = 0
    latency: float = 0.0


# One trace shown to the reflection model: task excerpt, predicted pragma,
# gold pragma, rendered feedback.
Trace = tuple[str, str, str, str]

REFLECTION_INSTRUCTION = (
    "You optimize the instruction prompt of a model that writes OpenACC pragma "
    "lines. Below are the current prompt and rollout traces: for each task, a "
    "source excerpt, the model's predicted pragma, the gold pragma, and a "
    "feedback report listing clause- and parameter-level mismatches. Write an "
    "improved replacement prompt that fixes the recurring mistakes. Output only "
    "the new prompt text."
)

MERGE_INSTRUCTION = (
    "You combine two instruction prompts for a model that writes OpenACC pragma "
    "lines. Each prompt captures rules that work on different tasks. Write one "
    "merged prompt containing the complementary rules of both. Output only the "
    "merged prompt text."
)


def mock_script(
    rules: Sequence[tuple[str, str]], default: str | None = None, **overrides
) -> ModelConfig:
    """Build a mock config answering by rule table, first match wins."""
    if not rules and default is None:
        raise ValueError("mock_script needs rules or a default output")
    return ModelConfig(
        backend=BACKEND_MOCK, mock_rules=tuple(rules), mock_default=default, **overrides
    )


def _mock_lookup(cfg: ModelConfig, match_text: str) -> str:
    for matcher, output in cfg.mock_rules:
        if matcher in match_text:
            return output
    if cfg.mock_default is not None:
        return cfg.mock_default
    raise BackendError("mock backend has no matching rule and no default")


def _remote_complete(cfg: ModelConfig, system: str, user: str) -> Completion:
    if not cfg.endpoint:
        raise BackendError("remote backend requires an endpoint")
    headers = {"Content-Type": "application/json", **cfg.extra_headers}
    credential = os.environ.get(cfg.credential_env, "")
    if credential:
        headers.setdefault("Authorization", f"Bearer {credential}")
    payload = {
        "model": cfg.model_name,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
    }
    last_error: Exception | None = None
    started = time.perf_counter()
    for attempt in range(cfg.retries + 1):
        try:
            response = requests.post(
                cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout
            )
            response.raise_for_status()
            data = response.json()
            text = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
            return Completion(
                text=text,
                input_tokens=int(usage.get("prompt_tokens", 0)),
                output_tokens=int(usage.get("completion_tokens", 0)),
                latency=time.perf_counter() - started,
            )
        except (requests.RequestException, KeyError, ValueError, json.JSONDecodeError) as exc:
            last_error = exc
            if attempt < cfg.retries:
                time.sleep(min(2**attempt * 0.1 + random.uniform(0, 0.05), 5.0))
    raise BackendError(f"remote completion failed after {cfg.retries + 1} attempts: {last_error}")


def complete(cfg: ModelConfig, system: str, user: str, match_text: str = "") -> Completion:
    """Run one completion; ``match_text`` feeds the mock rule table."""
    if cfg.mock_recorder is not None:
        cfg.mock_recorder.append((system, user))
    if cfg.backend == BACKEND_MOCK:
        text = _mock_lookup(cfg, match_text or f"{system}\n{user}")
        return Completion(text=text)
    if cfg.backend == BACKEND_REMOTE:
        return _remote_complete(cfg, system, user)
    raise BackendError(f"unknown backend {cfg.backend!r}")


def extract_pragma_line(completion_text: str) -> str:
    """First line starting with '#pragma acc', fences and whitespace stripped."""
    for line in completion_text.splitlines():
        candidate = line.strip()
        if candidate.startswith("```"):
            continue
        if candidate.startswith(PRAGMA_PREFIX):
            return candidate
    raise ExtractionError(f"no {PRAGMA_PREFIX!r} line in completion: {completion_text[:120]!r}")


def generate_pragma(cfg: ModelConfig, prompt: str, tagged_source: str, task_id: str = "") -> str:
    """Ask the student model for the pragma line of a tagged source."""
    if not prompt.strip():
        raise ValueError("prompt must be non-empty")
    match_text = "\n".join(filter(None, [task_id, prompt, tagged_source]))
    completion = complete(cfg, prompt, tagged_source, match_text=match_text)
    return extract_pragma_line(completion.text)


def _render_traces(traces: Sequence[Trace]) -> str:
    blocks = []
    for i, (excerpt, predicted, gold, feedback_text) in enumerate(traces, start=1):
        blocks.append(
            f"### Trace {i}\n"
            f"Source excerpt:\n{excerpt}\n"
            f"Predicted: {predicted}\n"
            f"Gold: {gold}\n"
            f"Feedback:\n{feedback_text}"
        )
    return "\n\n".join(blocks)


def _actions_from_feedback(feedback_text: str) -> list[str]:
    actions = []
    for line in feedback_text.splitlines():
        if line.startswith("- [") and " | " in line:
            actions.append(line.rsplit(" | ", 1)[1])
    return actions


def reflect(cfg: ModelConfig, current_prompt: str, traces: Sequence[Trace]) -> str:
    """Propose a whole replacement prompt from rollout traces."""
    if not traces:
        raise ValueError("reflect requires at least one trace")
    user = f"Current prompt:\n{current_prompt}\n\n{_render_traces(traces)}"
    if cfg.mock_recorder is not None:
        cfg.mock_recorder.append((REFLECTION_INSTRUCTION, user))
    if cfg.backend == BACKEND_MOCK:
        behavior = cfg.mock_reflection
        if callable(behavior):
            proposal = behavior(current_prompt, list(traces))
        elif behavior == "echo":
            proposal = current_prompt
        elif behavior == "append_actions":
            actions: list[str] = []
            for *_rest, feedback_text in traces:
                for action in _actions_from_feedback(feedback_text):
                    if action not in actions:
                        actions.append(action)
            proposal = "\n".join([current_prompt, *actions]) if actions else current_prompt
        else:
            raise BackendError(f"unknown mock reflection behavior {behavior!r}")
    else:
        proposal = _remote_complete(cfg, REFLECTION_INSTRUCTION, user).text
    if not proposal.strip():
        raise EmptyReflectionError("reflection proposed a blank prompt")
    return proposal


def merge_prompts(cfg: ModelConfig, prompt_a: str, prompt_b: str) -> str:
    """Ask the reflection model to combine two prompts' complementary rules."""
    user = f"Prompt A:\n{prompt_a}\n\nPrompt B:\n{prompt_b}"
    if cfg.mock_recorder is not None:
        cfg.mock_recorder.append((MERGE_INSTRUCTION, user))
    if cfg.backend == BACKEND_MOCK:
        behavior = cfg.mock_merge
        if callable(behavior):
            proposal = behavior(prompt_a, prompt_b)
        elif behavior == "concat":
            proposal = f"{prompt_a}\n\n{prompt_b}"
        elif behavior == "echo":
            proposal = prompt_a
        else:
            raise BackendError(f"unknown mock merge behavior {behavior!r}")
    else:
        proposal = _remote_complete(cfg, MERGE_INSTRUCTION, user).text
    if not proposal.strip():
        raise EmptyReflectionError("merge proposed a blank prompt")
    return proposal
