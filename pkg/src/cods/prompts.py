"""Six-segment prompt construction for constraint generation.

Every prompt carries the same six labeled segments in a fixed order:
role_setting, task_briefing, design_space_description, constraint_reasoning,
output_regulation, referral_examples. Per-dimension prompts describe one
dimension; the cross-dimension prompt describes the surviving elements of
every dimension. Segment texts come from plain-text template files that can
be swapped out via configuration.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

from .constraints import RequirementInput
from .space import DesignSpace

SEGMENT_LABELS = (
    "role_setting",
    "task_briefing",
    "design_space_description",
    "constraint_reasoning",
    "output_regulation",
    "referral_examples",
)

NO_EXAMPLES_SENTINEL = "No referral examples are provided for this task."

DEFAULT_AUDIENCE = "designer"

_TEMPLATE_FILES = (
    "role_setting",
    "task_briefing",
    "space_description_intra",
    "space_description_cross",
    "reasoning_intra",
    "reasoning_cross",
    "output_regulation",
    "referral_examples",
)

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class DimensionScope:
    index: int


@dataclass(frozen=True)
class CrossScope:
    indices: Tuple[int, ...]


@dataclass(frozen=True)
class ReferralExample:
    """One few-shot pair: a requirement and the constraint JSON answering it."""

    requirement: str
    response: str


def referral_examples_from_doc(doc) -> Tuple[ReferralExample, ...]:
    """Parse a JSON list of {"requirement", "response"} pairs; response objects
    are re-serialized compactly for embedding."""
    out = []
    for entry in doc:
        response = entry["response"]
        if not isinstance(response, str):
            response = json.dumps(response, ensure_ascii=False)
        out.append(ReferralExample(requirement=entry["requirement"], response=response))
    return tuple(out)


def load_referral_examples(path: Union[str, Path]) -> Tuple[ReferralExample, ...]:
    return referral_examples_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class PromptDocument:
    segments: Tuple[Tuple[str, str], ...]
    scope: Union[DimensionScope, CrossScope]

    def __post_init__(self):
        labels = tuple(label for label, _ in self.segments)
        if labels != SEGMENT_LABELS:
            raise ValueError(f"prompt segments must be {SEGMENT_LABELS}, got {labels}")

    @property
    def text(self) -> str:
        return "\n\n".join(body for _, body in self.segments)

    def segment(self, label: str) -> str:
        for seg_label, body in self.segments:
            if seg_label == label:
                return body
        raise KeyError(label)


@dataclass(frozen=True)
class PromptTemplates:
    role_setting: str
    task_briefing: str
    space_description_intra: str
    space_description_cross: str
    reasoning_intra: str
    reasoning_cross: str
    output_regulation: str
    referral_examples: str


def load_templates(directory: Optional[Union[str, Path]] = None) -> PromptTemplates:
    """Read the segment templates, from a directory or the packaged defaults."""
    texts = {}
    for name in _TEMPLATE_FILES:
        if directory is not None:
            texts[name] = (Path(directory) / f"{name}.txt").read_text(encoding="utf-8").strip()
        else:
            ref = resources.files("cods").joinpath("templates", f"{name}.txt")
            texts[name] = ref.read_text(encoding="utf-8").strip()
    return PromptTemplates(**texts)


def _render(template: str, values: Mapping[str, str]) -> str:
    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise KeyError(f"template placeholder {{{key}}} has no value")
        return values[key]

    return _PLACEHOLDER.sub(sub, template)


def _element_lines(space: DesignSpace, dim_index: int, only: Optional[Sequence[str]] = None) -> str:
    dim = space.dimensions[dim_index]
    descriptions = space.meta.element_descriptions.get(dim.name, {})
    names = list(dim.elements) if only is None else [e for e in dim.elements if e in set(only)]
    lines = []
    for name in names:
        desc = descriptions.get(name)
        lines.append(f"- {name}: {desc}" if desc else f"- {name}")
    return "\n".join(lines)


def _examples_block(examples: Sequence[ReferralExample]) -> str:
    if not examples:
        return NO_EXAMPLES_SENTINEL
    parts = []
    for k, ex in enumerate(examples, start=1):
        parts.append(f"Case {k} requirement: \"{ex.requirement}\"\nCase {k} constraints: {ex.response}")
    return "\n\n".join(parts)


def _common_values(space: DesignSpace, req: RequirementInput) -> dict:
    return {
        "audience": space.meta.audience or DEFAULT_AUDIENCE,
        "space_name": space.name,
        "requirement": req.text,
    }


def build_dimension_prompt(
    space: DesignSpace,
    req: RequirementInput,
    dim: int,
    examples: Sequence[ReferralExample] = (),
    templates: Optional[PromptTemplates] = None,
) -> PromptDocument:
    """Prompt asking for constraints within one dimension."""
    if not 0 <= dim < space.n:
        raise ValueError(f"dimension index {dim} out of range")
    t = templates or load_templates()
    dimension = space.dimensions[dim]
    values = _common_values(space, req) | {
        "dimension_name": dimension.name,
        "dimension_description": space.meta.dimension_descriptions.get(dimension.name, "(no description)"),
        "elements_block": _element_lines(space, dim),
        "examples_block": _examples_block(examples),
    }
    segments = (
        ("role_setting", _render(t.role_setting, values)),
        ("task_briefing", _render(t.task_briefing, values)),
        ("design_space_description", _render(t.space_description_intra, values)),
        ("constraint_reasoning", _render(t.reasoning_intra, values)),
        ("output_regulation", _render(t.output_regulation, values)),
        ("referral_examples", _render(t.referral_examples, values)),
    )
    return PromptDocument(segments=segments, scope=DimensionScope(index=dim))


def build_cross_prompt(
    space: DesignSpace,
    req: RequirementInput,
    surviving: Mapping[str, Sequence[str]],
    examples: Sequence[ReferralExample] = (),
    templates: Optional[PromptTemplates] = None,
) -> PromptDocument:
    """Prompt asking for constraints across dimensions, over surviving elements."""
    if space.n < 2:
        raise ValueError("cross-dimension prompt needs at least two dimensions")
    t = templates or load_templates()
    blocks = []
    for i, dim in enumerate(space.dimensions):
        kept = surviving.get(dim.name, dim.elements)
        kept = [e for e in dim.elements if e in set(kept)]
        if not kept:
            raise ValueError(f"dimension '{dim.name}' has no surviving elements")
        desc = space.meta.dimension_descriptions.get(dim.name, "")
        header = f"{dim.name}" + (f" ({desc})" if desc else "")
        blocks.append(header + ":\n" + _element_lines(space, i, only=kept))
    values = _common_values(space, req) | {
        "dimension_names": ", ".join(d.name for d in space.dimensions),
        "dimensions_block": "\n\n".join(blocks),
        "examples_block": _examples_block(examples),
    }
    segments = (
        ("role_setting", _render(t.role_setting, values)),
        ("task_briefing", _render(t.task_briefing, values)),
        ("design_space_description", _render(t.space_description_cross, values)),
        ("constraint_reasoning", _render(t.reasoning_cross, values)),
        ("output_regulation", _render(t.output_regulation, values)),
        ("referral_examples", _render(t.referral_examples, values)),
    )
    return PromptDocument(segments=segments, scope=CrossScope(indices=tuple(range(space.n))))
