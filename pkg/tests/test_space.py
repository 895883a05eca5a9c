import json
import random

import numpy as np
import pytest

from cods import (
    ElementRef,
    SolutionError,
    SolutionMatrix,
    SpaceValidationError,
    UnknownElementError,
    load_design_space,
    merge_space_document,
    padded_shape,
    serialize_design_space,
    solution_to_tuple,
    space_to_doc,
    tuple_to_solution,
)
from conftest import GOLDEN_SELECTION
from helpers import random_space


def golden_matrix(space):
    cells = np.zeros(space.shape, dtype=np.uint8)
    for i, j in GOLDEN_SELECTION:
        cells[i, j] = 1
    return SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)


def test_load_character_fixture(peeps_space):
    assert padded_shape(peeps_space) == (5, 5)
    assert [d.name for d in peeps_space.dimensions] == ["head", "face", "accessories", "facial-hair", "body"]
    assert peeps_space.dimensions[0].elements[0] == "woman bangs black"
    assert all(d.bounds == (1, 1) for d in peeps_space.dimensions)


def test_load_minimal_space():
    space = load_design_space({"name": "tiny", "dimensions": [{"name": "only", "elements": ["a"]}]})
    assert padded_shape(space) == (1, 1)


def test_duplicate_dimension_names_rejected():
    doc = {
        "name": "dup",
        "dimensions": [
            {"name": "color", "elements": ["red"]},
            {"name": "color", "elements": ["blue"]},
        ],
    }
    with pytest.raises(SpaceValidationError) as err:
        load_design_space(doc)
    assert "color" in str(err.value)


def test_empty_dimension_rejected():
    with pytest.raises(SpaceValidationError):
        load_design_space({"name": "bad", "dimensions": [{"name": "d", "elements": []}]})


def test_duplicate_elements_rejected():
    with pytest.raises(SpaceValidationError):
        load_design_space({"name": "bad", "dimensions": [{"name": "d", "elements": ["a", "a"]}]})


def test_bad_cardinality_rejected():
    doc = {"name": "bad", "dimensions": [{"name": "d", "elements": ["a", "b"], "cardinality": [2, 1]}]}
    with pytest.raises(SpaceValidationError) as err:
        load_design_space(doc)
    assert "cardinality" in str(err.value)


def test_meta_descriptions_must_resolve():
    doc = {
        "name": "bad",
        "meta": {"dimensions": {"ghost": "not real"}},
        "dimensions": [{"name": "d", "elements": ["a"]}],
    }
    with pytest.raises(SpaceValidationError) as err:
        load_design_space(doc)
    assert "ghost" in str(err.value)


def test_padded_shape_takes_widest_dimension():
    doc = {
        "name": "ragged",
        "dimensions": [
            {"name": "a", "elements": ["1", "2", "3"]},
            {"name": "b", "elements": ["1", "2", "3", "4", "5", "6", "7"]},
            {"name": "c", "elements": ["1", "2"]},
        ],
    }
    assert padded_shape(load_design_space(doc)) == (3, 7)
    single = load_design_space({"name": "s", "dimensions": [{"name": "a", "elements": ["1", "2", "3", "4"]}]})
    assert padded_shape(single) == (1, 4)


def test_solution_to_tuple_golden(peeps_space):
    refs = solution_to_tuple(peeps_space, golden_matrix(peeps_space))
    assert [(r.dimension, r.element) for r in refs] == [
        ("head", "woman bangs black"),
        ("face", "calm"),
        ("accessories", "sunglasses"),
        ("facial-hair", "none"),
        ("body", "sporty tee"),
    ]


def test_tuple_to_solution_round_trips_golden(peeps_space):
    matrix = golden_matrix(peeps_space)
    refs = solution_to_tuple(peeps_space, matrix)
    assert tuple_to_solution(peeps_space, refs) == matrix


def test_empty_tuple_gives_all_zero_matrix(peeps_space):
    matrix = tuple_to_solution(peeps_space, [])
    assert not matrix.cells.any()
    zero_card = load_design_space(
        {"name": "z", "dimensions": [{"name": "d", "elements": ["a", "b"], "cardinality": [0, 2]}]}
    )
    assert solution_to_tuple(zero_card, tuple_to_solution(zero_card, [])) == ()


def test_padded_cell_selection_rejected():
    doc = {
        "name": "ragged",
        "dimensions": [
            {"name": "a", "elements": ["1", "2"]},
            {"name": "b", "elements": ["1", "2", "3"]},
        ],
    }
    space = load_design_space(doc)
    cells = np.zeros((2, 3), dtype=np.uint8)
    cells[0, 2] = 1  # beyond dimension a's two elements
    with pytest.raises(SolutionError):
        SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)


def test_unknown_element_reported_by_name(peeps_space):
    with pytest.raises(UnknownElementError) as err:
        tuple_to_solution(peeps_space, [ElementRef("head", "mohawk")])
    assert "mohawk" in err.value.names


def test_duplicate_reference_rejected(peeps_space):
    ref = ElementRef("head", "woman bangs black")
    with pytest.raises(SolutionError):
        tuple_to_solution(peeps_space, [ref, ElementRef(0, 0)])


def test_round_trip_random_solutions():
    rng = random.Random(7)
    for _ in range(100):
        space = random_space(rng)
        cells = np.zeros(space.shape, dtype=np.uint8)
        refs = []
        for i, dim in enumerate(space.dimensions):
            j = rng.randrange(len(dim.elements))
            cells[i, j] = 1
            refs.append(ElementRef(dim.name, dim.elements[j]))
        matrix = SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)
        out = solution_to_tuple(space, matrix)
        assert tuple_to_solution(space, out) == matrix


def test_serialization_is_stable(peeps_doc, peeps_space):
    doc = space_to_doc(peeps_space)
    assert json.dumps(doc, indent=2) == json.dumps(peeps_doc, indent=2)
    once = serialize_design_space(peeps_space)
    again = serialize_design_space(load_design_space(json.loads(once)))
    assert once == again


def test_merge_appends_elements_preserving_order(peeps_space):
    merged = merge_space_document(peeps_space, {"dimensions": [{"name": "body", "elements": ["raincoat"]}]})
    body = merged.dimension("body")
    assert body.elements[:-1] == peeps_space.dimension("body").elements
    assert body.elements[-1] == "raincoat"
    assert merged.n == peeps_space.n
