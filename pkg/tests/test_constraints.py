import random

import pytest

from cods import (
    ConstraintError,
    ElementRef,
    UnknownElementError,
    avoid_each,
    check_feasible,
    compile_constraints,
    exclusive,
    forbid,
    not_all_of,
    objective_value,
    prefer_each,
    require_one_of,
    satisfies_symbolic,
    together,
    tuple_to_solution,
)
from helpers import random_constraints, random_solution, random_space
from test_space import golden_matrix

FEMALE_HEADS = ["woman bangs black", "woman short black", "woman bun black"]

EXPECTED_H1 = [
    [1, 0, 1, 0, 1],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
]
EXPECTED_H2 = [
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1],
    [0, 0, 0, 0, 0],
]
EXPECTED_S1 = [
    [0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
]
EXPECTED_S2 = [
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1],
    [0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0],
]


def golden_constraints():
    return [
        require_one_of([ElementRef("head", e) for e in FEMALE_HEADS]),
        require_one_of([ElementRef("facial-hair", "none")]),
        prefer_each([ElementRef("face", "calm")], 1),
        prefer_each([ElementRef("accessories", "sunglasses"), ElementRef("body", "sporty tee")], 1),
    ]


def test_compile_golden_matrices(peeps_space):
    cset = compile_constraints(peeps_space, golden_constraints())
    assert cset.hard[0].matrix.tolist() == EXPECTED_H1
    assert (cset.hard[0].sense, cset.hard[0].target) == ("=", 1)
    assert cset.hard[1].matrix.tolist() == EXPECTED_H2
    assert (cset.hard[1].sense, cset.hard[1].target) == ("=", 1)
    assert [row.matrix.tolist() for row in cset.soft] == [EXPECTED_S1, EXPECTED_S2]
    assert [row.weight for row in cset.soft] == [1.0, 1.0]
    # Base rows: one exactly-one row per dimension, no padding row (all widths equal).
    assert len(cset.hard) == 2 + peeps_space.n
    for i, row in enumerate(cset.hard[2:]):
        assert (row.sense, row.target) == ("=", 1)
        assert row.matrix[i].sum() == 5


def test_together_encoding(peeps_space):
    cset = compile_constraints(
        peeps_space, [together(ElementRef("accessories", "sunglasses"), ElementRef("body", "sporty tee"))]
    )
    row = cset.hard[0]
    assert row.matrix[2, 4] == 1 and row.matrix[4, 1] == -1
    assert (row.sense, row.target) == ("=", 0)


def test_exclusive_encoding(peeps_space):
    cset = compile_constraints(
        peeps_space, [exclusive(ElementRef("head", "man mohawk red"), ElementRef("body", "blazer"))]
    )
    row = cset.hard[0]
    assert row.matrix[0, 3] == 1 and row.matrix[4, 2] == 1
    assert (row.sense, row.target) == ("<=", 1)


def test_not_all_of_encoding(peeps_space):
    cells = [ElementRef("head", "man mohawk red"), ElementRef("face", "angry"), ElementRef("body", "blazer")]
    cset = compile_constraints(peeps_space, [not_all_of(cells)])
    row = cset.hard[0]
    assert int(row.matrix.sum()) == 3
    assert (row.sense, row.target) == ("<=", 2)


def test_padding_row_added_for_ragged_spaces():
    from cods import load_design_space

    space = load_design_space(
        {"name": "r", "dimensions": [{"name": "a", "elements": ["1", "2"]}, {"name": "b", "elements": ["1", "2", "3"]}]}
    )
    cset = compile_constraints(space, [])
    pad = cset.hard[-1]
    assert pad.matrix.tolist() == [[0, 0, 1], [0, 0, 0]]
    assert (pad.sense, pad.target) == ("=", 0)


def test_objective_value_golden(peeps_space):
    cset = compile_constraints(peeps_space, golden_constraints())
    assert objective_value(cset, golden_matrix(peeps_space)) == 3.0


def test_objective_value_trivia(peeps_space):
    empty = compile_constraints(peeps_space, [])
    x = golden_matrix(peeps_space)
    assert objective_value(empty, x) == 0.0
    cset = compile_constraints(peeps_space, golden_constraints())
    zero = tuple_to_solution(peeps_space, [])
    assert objective_value(cset, zero) == 0.0


def test_objective_is_homogeneous_in_weights(peeps_space):
    x = golden_matrix(peeps_space)
    base = golden_constraints()
    doubled = [
        require_one_of([ElementRef("head", e) for e in FEMALE_HEADS]),
        require_one_of([ElementRef("facial-hair", "none")]),
        prefer_each([ElementRef("face", "calm")], 2),
        prefer_each([ElementRef("accessories", "sunglasses"), ElementRef("body", "sporty tee")], 2),
    ]
    assert objective_value(compile_constraints(peeps_space, doubled), x) == 2 * objective_value(
        compile_constraints(peeps_space, base), x
    )


def test_check_feasible_golden(peeps_space):
    cset = compile_constraints(peeps_space, golden_constraints())
    report = check_feasible(cset, golden_matrix(peeps_space))
    assert report.feasible
    assert all(r.ok for r in report.rows)


def test_check_feasible_flags_male_head(peeps_space):
    cset = compile_constraints(peeps_space, golden_constraints())
    refs = [
        ElementRef("head", "man buzz brown"),
        ElementRef("face", "calm"),
        ElementRef("accessories", "sunglasses"),
        ElementRef("facial-hair", "none"),
        ElementRef("body", "sporty tee"),
    ]
    report = check_feasible(cset, tuple_to_solution(peeps_space, refs))
    assert not report.feasible
    head_row = report.rows[0]
    assert head_row.achieved == 0 and head_row.target == 1 and not head_row.ok


def test_check_feasible_without_hard_rules(peeps_space):
    cset = compile_constraints(peeps_space, [])
    refs = [ElementRef(i, 0) for i in range(peeps_space.n)]
    assert check_feasible(cset, tuple_to_solution(peeps_space, refs)).feasible


def test_unknown_cells_rejected_at_compile(peeps_space):
    with pytest.raises(UnknownElementError) as err:
        compile_constraints(peeps_space, [forbid([ElementRef("head", "top hat")])])
    assert "top hat" in err.value.names


def test_constraint_construction_rules():
    a, b = ElementRef(0, 0), ElementRef(0, 1)
    with pytest.raises(ConstraintError):
        require_one_of([])
    with pytest.raises(ConstraintError):
        together(a, a)
    with pytest.raises(ConstraintError):
        prefer_each([a], weight=0)
    with pytest.raises(ConstraintError):
        # hard kinds carry no weight
        from cods import Kind, SymbolicConstraint

        SymbolicConstraint(Kind.FORBID, (a,), weight=2)
    with pytest.raises(ConstraintError):
        from cods import Kind, SymbolicConstraint

        SymbolicConstraint(Kind.EXCLUSIVE, (a, b, ElementRef(0, 2)))


def test_compilation_soundness_random():
    rng = random.Random(42)
    agreements = 0
    for _ in range(300):
        space = random_space(rng, max_dims=4, max_elems=4)
        constraints = random_constraints(rng, space, max_hard=5, max_soft=3)
        cset = compile_constraints(space, constraints)
        for _ in range(5):
            x = random_solution(rng, space)
            direct = satisfies_symbolic(space, constraints, x)
            compiled = check_feasible(cset, x).feasible
            assert direct == compiled
            agreements += 1
    assert agreements == 1500
