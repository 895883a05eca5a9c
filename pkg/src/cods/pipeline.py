"""Constraint-generation pipeline: one prompt per dimension, then one across.

The pipeline issues N per-dimension prompts, collects the surviving elements
and within-dimension constraints, then issues a single cross-dimension prompt
over the survivors. Malformed replies are retried once (configurable) with a
corrective suffix. Every completion is recorded in the transcript.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from .backends import ChatBackend
from .constraints import (
    Kind,
    RequirementInput,
    SOFT_KINDS,
    SymbolicConstraint,
    constraint_from_doc,
    ConstraintError,
)
from .prompts import (
    CrossScope,
    DimensionScope,
    PromptDocument,
    PromptTemplates,
    ReferralExample,
    build_cross_prompt,
    build_dimension_prompt,
    load_templates,
)
from .space import DesignSpace, UnknownElementError


class ResponseParseError(Exception):
    """A reply could not be turned into constraints; safe to retry."""


class NoJsonFoundError(ResponseParseError):
    pass


class SchemaViolationError(ResponseParseError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class RetriesExhaustedError(Exception):
    def __init__(self, last_error: Exception):
        super().__init__(f"retries exhausted; last error: {last_error}")
        self.last_error = last_error


RETRYABLE = (ResponseParseError, UnknownElementError)

_FENCE = re.compile(r"```(?:json)?\s*\n?(.*?)\n?\s*```", re.DOTALL)


def _first_json_value(text: str):
    """Extract the first JSON value in a reply, tolerating prose and fences."""
    if not text or not text.strip():
        raise NoJsonFoundError("empty response")
    stripped = text.strip()
    try:
        return json.loads(stripped)
    except json.JSONDecodeError:
        pass
    fenced = _FENCE.search(stripped)
    if fenced:
        try:
            return json.loads(fenced.group(1).strip())
        except json.JSONDecodeError:
            pass
    start = stripped.find("{")
    if start != -1:
        depth = 0
        for pos in range(start, len(stripped)):
            if stripped[pos] == "{":
                depth += 1
            elif stripped[pos] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(stripped[start : pos + 1])
                    except json.JSONDecodeError:
                        break
    raise NoJsonFoundError("no JSON value found in response")


def parse_constraint_response(text: str, space: DesignSpace) -> List[SymbolicConstraint]:
    """Validate a reply against the constraint schema and the space's names.

    Hallucinated dimension or element names are collected and reported all at
    once; they can never reach the resulting constraint list.
    """
    doc = _first_json_value(text)
    if not isinstance(doc, Mapping):
        raise SchemaViolationError("$", "expected a JSON object with hard/soft arrays")
    constraints: List[SymbolicConstraint] = []
    unknown: List[str] = []
    for bucket, expect_soft in (("hard", False), ("soft", True)):
        entries = doc.get(bucket, [])
        if not isinstance(entries, list):
            raise SchemaViolationError(bucket, "expected an array")
        for k, entry in enumerate(entries):
            where = f"{bucket}[{k}]"
            try:
                constraint = constraint_from_doc(entry, index_path=where)
            except ConstraintError as exc:
                raise SchemaViolationError(where, str(exc)) from None
            if expect_soft != (constraint.kind in SOFT_KINDS):
                raise SchemaViolationError(
                    f"{where}.kind", f"{constraint.kind.value} does not belong in the {bucket} list"
                )
            try:
                constraint.resolve_cells(space)
            except UnknownElementError as exc:
                unknown.extend(exc.names)
                continue
            except ConstraintError as exc:
                raise SchemaViolationError(where, str(exc)) from None
            constraints.append(constraint)
    if unknown:
        raise UnknownElementError(sorted(set(unknown)))
    return constraints


@dataclass(frozen=True)
class PipelineConfig:
    max_retries: int = 1
    referral_examples: Tuple[ReferralExample, ...] = ()
    templates: Optional[PromptTemplates] = None
    skip_cross_when_single_dimension: bool = True


@dataclass(frozen=True)
class TranscriptEntry:
    scope: Union[DimensionScope, CrossScope]
    prompt: str
    response: str
    outcome: str  # "ok" or the error class name
    attempt: int

    def to_doc(self, space: DesignSpace) -> dict:
        if isinstance(self.scope, DimensionScope):
            scope_doc = {"kind": "dimension", "dimension": space.dimensions[self.scope.index].name}
        else:
            scope_doc = {"kind": "cross", "dimensions": [space.dimensions[i].name for i in self.scope.indices]}
        return {
            "scope": scope_doc,
            "prompt": self.prompt,
            "response": self.response,
            "outcome": self.outcome,
            "attempt": self.attempt,
        }


@dataclass(frozen=True)
class GenerationRecord:
    transcript: Tuple[TranscriptEntry, ...]
    hard_constraints: Tuple[SymbolicConstraint, ...]
    soft_constraints: Tuple[SymbolicConstraint, ...]
    survivors: Mapping[str, Tuple[str, ...]]
    cross_skipped: bool = False

    @property
    def constraints(self) -> Tuple[SymbolicConstraint, ...]:
        return self.hard_constraints + self.soft_constraints

    @property
    def retries_used(self) -> int:
        return sum(1 for e in self.transcript if e.attempt > 0)

    def to_doc(self, space: DesignSpace) -> dict:
        return {
            "transcript": [e.to_doc(space) for e in self.transcript],
            "hard_constraints": [c.to_doc(space) for c in self.hard_constraints],
            "soft_constraints": [c.to_doc(space) for c in self.soft_constraints],
            "survivors": {k: list(v) for k, v in self.survivors.items()},
            "cross_skipped": self.cross_skipped,
        }


_CORRECTIVE_SUFFIX = (
    "\n\nYour previous reply could not be used ({error}). "
    "Answer again with a single valid JSON object in the required format, "
    "using only dimension and element names listed above, with no surrounding text."
)

_KIND_ORDER = {k: rank for rank, k in enumerate(Kind)}


def _canonical_order(space: DesignSpace, constraints: Sequence[SymbolicConstraint]) -> List[SymbolicConstraint]:
    def key(c: SymbolicConstraint):
        cells = tuple(sorted(c.resolve_cells(space)))
        return (cells[0][0], _KIND_ORDER[c.kind], cells)

    return sorted(constraints, key=key)


def _complete_with_retry(
    backend: ChatBackend,
    document: PromptDocument,
    space: DesignSpace,
    config: PipelineConfig,
) -> Tuple[List[SymbolicConstraint], List[TranscriptEntry]]:
    entries: List[TranscriptEntry] = []
    prompt = document.text
    last_error: Optional[Exception] = None
    for attempt in range(config.max_retries + 1):
        response = backend.complete(prompt)
        try:
            parsed = parse_constraint_response(response, space)
        except RETRYABLE as exc:
            entries.append(
                TranscriptEntry(
                    scope=document.scope,
                    prompt=prompt,
                    response=response,
                    outcome=type(exc).__name__,
                    attempt=attempt,
                )
            )
            last_error = exc
            prompt = document.text + _CORRECTIVE_SUFFIX.format(error=exc)
            continue
        entries.append(
            TranscriptEntry(
                scope=document.scope, prompt=prompt, response=response, outcome="ok", attempt=attempt
            )
        )
        return parsed, entries
    assert last_error is not None
    raise RetriesExhaustedError(last_error)


def _survivors_for(space: DesignSpace, dim_index: int, parsed: Sequence[SymbolicConstraint]) -> Tuple[str, ...]:
    """Elements positively referenced (require/prefer) in this dimension;
    all elements when nothing was referenced."""
    dim = space.dimensions[dim_index]
    positive = set()
    for c in parsed:
        if c.kind not in (Kind.REQUIRE_ONE_OF, Kind.PREFER):
            continue
        for i, j in c.resolve_cells(space):
            if i == dim_index:
                positive.add(dim.elements[j])
    if not positive:
        return dim.elements
    return tuple(e for e in dim.elements if e in positive)


def run_pipeline(
    space: DesignSpace,
    req: RequirementInput,
    backend: ChatBackend,
    config: Optional[PipelineConfig] = None,
) -> GenerationRecord:
    """Execute the N+1 prompt sequence and merge the parsed constraints.

    Exactly one successful completion is recorded per dimension plus one for
    the cross prompt; failed attempts add transcript entries on top. Merged
    constraints are canonically ordered (dimension index, kind, element
    indices) so the result never depends on completion order.
    """
    cfg = config or PipelineConfig()
    templates = cfg.templates or load_templates()
    transcript: List[TranscriptEntry] = []
    collected: List[SymbolicConstraint] = []
    survivors: dict = {}

    for i, dim in enumerate(space.dimensions):
        document = build_dimension_prompt(space, req, i, cfg.referral_examples, templates)
        parsed, entries = _complete_with_retry(backend, document, space, cfg)
        transcript.extend(entries)
        collected.extend(parsed)
        survivors[dim.name] = _survivors_for(space, i, parsed)

    cross_skipped = False
    if space.n == 1 and cfg.skip_cross_when_single_dimension:
        cross_skipped = True
    else:
        document = build_cross_prompt(space, req, survivors, cfg.referral_examples, templates)
        parsed, entries = _complete_with_retry(backend, document, space, cfg)
        transcript.extend(entries)
        collected.extend(parsed)

    ordered = _canonical_order(space, collected)
    hard = tuple(c for c in ordered if c.is_hard)
    soft = tuple(c for c in ordered if c.is_soft)
    return GenerationRecord(
        transcript=tuple(transcript),
        hard_constraints=hard,
        soft_constraints=soft,
        survivors=survivors,
        cross_skipped=cross_skipped,
    )
