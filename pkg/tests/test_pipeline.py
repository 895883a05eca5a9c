import json

import pytest

from cods import (
    Kind,
    NoJsonFoundError,
    PipelineConfig,
    RequirementInput,
    RetriesExhaustedError,
    SchemaViolationError,
    StubBackend,
    UnknownElementError,
    build_vis_space,
    compile_constraints,
    infer_schema,
    parse_constraint_response,
    run_pipeline,
    stub_backend,
)
from test_constraints import EXPECTED_H1, EXPECTED_H2, EXPECTED_S1, EXPECTED_S2

FEMALE_HEADS = ["woman bangs black", "woman short black", "woman bun black"]


# --- response parsing ---


def test_parse_single_hard_constraint(peeps_space):
    text = '{"hard":[{"kind":"require_one_of","dimension":"facial-hair","elements":["none"]}],"soft":[]}'
    parsed = parse_constraint_response(text, peeps_space)
    assert len(parsed) == 1
    assert parsed[0].kind is Kind.REQUIRE_ONE_OF
    assert parsed[0].cells[0].dimension == "facial-hair"


def test_parse_fenced_empty_document(peeps_space):
    assert parse_constraint_response('```json {"hard":[],"soft":[]} ```', peeps_space) == []


def test_parse_tolerates_surrounding_prose(peeps_space):
    text = 'Here are my constraints:\n{"hard": [], "soft": [{"kind": "prefer", "dimension": "face", "elements": ["calm"]}]}\nHope that helps!'
    parsed = parse_constraint_response(text, peeps_space)
    assert len(parsed) == 1 and parsed[0].weight == 1.0


def test_parse_reports_every_unknown_element(peeps_space):
    text = json.dumps(
        {
            "hard": [{"kind": "forbid", "dimension": "accessories", "elements": ["top hat"]}],
            "soft": [{"kind": "prefer", "dimension": "face", "elements": ["grimace"]}],
        }
    )
    with pytest.raises(UnknownElementError) as err:
        parse_constraint_response(text, peeps_space)
    assert set(err.value.names) == {"top hat", "grimace"}


def test_parse_no_json(peeps_space):
    with pytest.raises(NoJsonFoundError):
        parse_constraint_response("I cannot answer that.", peeps_space)
    with pytest.raises(NoJsonFoundError):
        parse_constraint_response("", peeps_space)


def test_parse_schema_violations_carry_paths(peeps_space):
    with pytest.raises(SchemaViolationError) as err:
        parse_constraint_response('{"hard":[{"kind":"sparkle","dimension":"face","elements":["calm"]}],"soft":[]}', peeps_space)
    assert "hard[0]" in str(err.value)
    with pytest.raises(SchemaViolationError):
        parse_constraint_response('{"hard":[{"kind":"prefer","dimension":"face","elements":["calm"]}],"soft":[]}', peeps_space)
    with pytest.raises(SchemaViolationError):
        parse_constraint_response('{"hard":[],"soft":[{"kind":"prefer","dimension":"face","elements":["calm"],"weight":0}]}', peeps_space)
    with pytest.raises(SchemaViolationError):
        parse_constraint_response('[1, 2, 3]', peeps_space)


def test_parse_accepts_explicit_cells(peeps_space):
    text = json.dumps(
        {
            "hard": [
                {
                    "kind": "together",
                    "cells": [
                        {"dimension": "accessories", "element": "sunglasses"},
                        {"dimension": "body", "element": "sporty tee"},
                    ],
                }
            ],
            "soft": [],
        }
    )
    parsed = parse_constraint_response(text, peeps_space)
    assert parsed[0].kind is Kind.TOGETHER


# --- pipeline runs ---


def test_pipeline_records_six_prompts(peeps_space, peeps_stub_rules, girl_requirement):
    record = run_pipeline(peeps_space, RequirementInput(girl_requirement), StubBackend(peeps_stub_rules))
    assert len(record.transcript) == 6
    assert all(entry.outcome == "ok" for entry in record.transcript)
    assert record.retries_used == 0
    assert not record.cross_skipped


def test_pipeline_vis_space_records_twelve_prompts(fixtures_dir):
    schema = infer_schema(fixtures_dir / "cars.csv")
    space = build_vis_space(schema)
    assert space.n == 11
    record = run_pipeline(space, RequirementInput("any chart"), stub_backend())
    assert len(record.transcript) == 12


def test_pipeline_constraints_compile_to_golden_matrices(peeps_space, peeps_stub_rules, girl_requirement):
    record = run_pipeline(peeps_space, RequirementInput(girl_requirement), StubBackend(peeps_stub_rules))
    cset = compile_constraints(peeps_space, record.constraints)
    assert cset.hard[0].matrix.tolist() == EXPECTED_H1
    assert cset.hard[1].matrix.tolist() == EXPECTED_H2
    assert [row.matrix.tolist() for row in cset.soft] == [EXPECTED_S1, EXPECTED_S2]


def test_pipeline_survivors_and_cross_prompt_filtering(peeps_space, peeps_stub_rules, girl_requirement):
    record = run_pipeline(peeps_space, RequirementInput(girl_requirement), StubBackend(peeps_stub_rules))
    assert list(record.survivors["head"]) == FEMALE_HEADS
    assert record.survivors["body"] == peeps_space.dimension("body").elements  # fallback: all
    cross_prompt = record.transcript[-1].prompt
    assert "man buzz brown" not in cross_prompt
    assert "man mohawk red" not in cross_prompt
    assert "woman bangs black" in cross_prompt


def test_pipeline_single_dimension_space_skips_cross():
    from cods import load_design_space

    single = load_design_space({"name": "s", "dimensions": [{"name": "d", "elements": ["a", "b"]}]})
    record = run_pipeline(single, RequirementInput("whatever"), stub_backend())
    assert record.cross_skipped
    assert len(record.transcript) == 1


class FlakyBackend:
    """Garbage for the first `bad` completions, then delegates to a stub."""

    def __init__(self, inner, bad=1):
        self.inner = inner
        self.bad = bad
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if self.calls <= self.bad:
            return "no json here at all"
        return self.inner.complete(prompt)


def test_pipeline_retries_once_and_records_it(peeps_space, peeps_stub_rules, girl_requirement):
    backend = FlakyBackend(StubBackend(peeps_stub_rules), bad=1)
    record = run_pipeline(peeps_space, RequirementInput(girl_requirement), backend)
    assert len(record.transcript) == 7  # 6 successes + 1 failed attempt
    assert record.retries_used == 1
    failed = record.transcript[0]
    assert failed.outcome == "NoJsonFoundError" and failed.attempt == 0
    assert "could not be used" in record.transcript[1].prompt


def test_pipeline_exhausts_retries(peeps_space, girl_requirement):
    class GarbageBackend:
        def complete(self, prompt: str) -> str:
            return "still not json"

    with pytest.raises(RetriesExhaustedError) as err:
        run_pipeline(peeps_space, RequirementInput(girl_requirement), GarbageBackend(), PipelineConfig(max_retries=1))
    assert isinstance(err.value.last_error, NoJsonFoundError)


def test_pipeline_is_reproducible(peeps_space, peeps_stub_rules, girl_requirement):
    def one_run():
        record = run_pipeline(peeps_space, RequirementInput(girl_requirement), StubBackend(peeps_stub_rules))
        return json.dumps(record.to_doc(peeps_space), sort_keys=True)

    assert one_run() == one_run()


def test_pipeline_constraints_all_resolve(peeps_space, peeps_stub_rules, girl_requirement):
    record = run_pipeline(peeps_space, RequirementInput(girl_requirement), StubBackend(peeps_stub_rules))
    for constraint in record.constraints:
        constraint.resolve_cells(peeps_space)  # must not raise
