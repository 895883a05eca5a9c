"""Chat-completion backends: a deterministic offline stub and a live HTTP client.

The stub matches keyword rules against the prompt text (which embeds the
requirement) and answers with schema-valid constraint JSON. It recognizes the
scope markers the default prompt templates emit ("Dimension under review:" /
"Dimensions under review:") to decide which rule entries apply.
"""

from __future__ import annotations

import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence, Tuple, Union


class BackendUnavailableError(Exception):
    """The backend cannot be reached or is not configured."""


class ChatBackend(Protocol):
    def complete(self, prompt: str) -> str: ...


_INTRA_MARKER = re.compile(r"^Dimension under review: (.+)$", re.MULTILINE)
_CROSS_MARKER = re.compile(r"^Dimensions under review: (.+)$", re.MULTILINE)
_REQUIREMENT_LINE = re.compile(r"^Client requirement: \"(.*)\"$", re.MULTILINE)


def _entry_dimensions(entry: Mapping) -> frozenset:
    if "cells" in entry:
        return frozenset(c.get("dimension") for c in entry["cells"])
    return frozenset({entry.get("dimension")})


@dataclass(frozen=True)
class StubRule:
    """Emit the given constraint records whenever all keywords appear in the prompt."""

    keywords: Tuple[str, ...]
    hard: Tuple[Mapping, ...] = ()
    soft: Tuple[Mapping, ...] = ()

    def matches(self, prompt_lower: str) -> bool:
        return all(kw.lower() in prompt_lower for kw in self.keywords)


class StubBackend:
    """Pure, deterministic backend: the same prompt always yields the same reply.

    Per-dimension prompts receive only the matching rules' single-dimension
    entries for that dimension; the cross prompt receives the entries that
    span two or more dimensions.
    """

    def __init__(self, rules: Sequence[StubRule] = ()):
        self.rules = tuple(rules)

    def complete(self, prompt: str) -> str:
        # Keywords are matched against the embedded requirement when the
        # default templates carry one, so element listings cannot trigger
        # rules by accident; otherwise the whole prompt is searched.
        requirement = _REQUIREMENT_LINE.search(prompt)
        prompt_lower = (requirement.group(1) if requirement else prompt).lower()
        intra = _INTRA_MARKER.search(prompt)
        scope_dim = intra.group(1).strip() if intra else None
        is_cross = scope_dim is None and _CROSS_MARKER.search(prompt) is not None
        hard: list = []
        soft: list = []
        if scope_dim is not None or is_cross:
            for rule in self.rules:
                if not rule.matches(prompt_lower):
                    continue
                for bucket, entries in ((hard, rule.hard), (soft, rule.soft)):
                    for entry in entries:
                        dims = _entry_dimensions(entry)
                        if scope_dim is not None:
                            if dims == {scope_dim}:
                                bucket.append(dict(entry))
                        elif len(dims) >= 2:
                            bucket.append(dict(entry))
        return json.dumps({"hard": hard, "soft": soft}, ensure_ascii=False)


def stub_backend(rules: Union[Mapping, Iterable[StubRule], None] = None) -> StubBackend:
    """Build a StubBackend from a rules document, StubRule list, or nothing."""
    if rules is None:
        return StubBackend()
    if isinstance(rules, Mapping):
        return StubBackend(_rules_from_doc(rules))
    return StubBackend(tuple(rules))


def _rules_from_doc(doc: Mapping) -> Tuple[StubRule, ...]:
    out = []
    for k, raw in enumerate(doc.get("rules", [])):
        if not isinstance(raw, Mapping) or "keywords" not in raw:
            raise ValueError(f"rules[{k}]: each stub rule needs a keywords list")
        out.append(
            StubRule(
                keywords=tuple(raw["keywords"]),
                hard=tuple(raw.get("hard", [])),
                soft=tuple(raw.get("soft", [])),
            )
        )
    return tuple(out)


def load_stub_rules(path: Union[str, Path]) -> Tuple[StubRule, ...]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return _rules_from_doc(doc)


API_KEY_ENV = "CODS_API_KEY"


@dataclass(frozen=True)
class LlmSettings:
    """Connection settings for a chat-completions style HTTP endpoint."""

    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 1


class HttpChatBackend:
    """Minimal client for a chat-completions JSON protocol.

    Requires an API key (from the CODS_API_KEY environment variable unless
    passed explicitly) and a configured endpoint URL.
    """

    def __init__(self, settings: LlmSettings, api_key: str | None = None):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not key:
            raise BackendUnavailableError(
                f"live backend requires an API key; set {API_KEY_ENV} or pass api_key"
            )
        if not settings.endpoint:
            raise BackendUnavailableError("live backend requires llm.endpoint to be configured")
        self.settings = settings
        self._api_key = key

    def complete(self, prompt: str) -> str:
        payload = json.dumps(
            {
                "model": self.settings.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.settings.temperature,
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self.settings.endpoint,
            data=payload,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._api_key}",
            },
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.settings.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendUnavailableError(f"chat endpoint unreachable: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BackendUnavailableError(f"chat endpoint returned non-JSON: {exc}") from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailableError(f"unexpected chat response shape: {exc}") from exc
