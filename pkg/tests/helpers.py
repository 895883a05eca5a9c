"""Random instance generators shared by the solver and soundness test suites."""

import random

import numpy as np

from cods import (
    DesignSpace,
    Dimension,
    ElementRef,
    MetaInfo,
    SolutionMatrix,
    SymbolicConstraint,
    Kind,
)


def random_space(rng: random.Random, max_dims: int = 6, max_elems: int = 6) -> DesignSpace:
    n = rng.randint(1, max_dims)
    dims = []
    for i in range(n):
        size = rng.randint(1, max_elems)
        elements = tuple(f"e{i}_{j}" for j in range(size))
        if rng.random() < 0.2:
            lo = rng.randint(0, min(1, size))
            hi = rng.randint(max(lo, 1), min(size, lo + 2))
            cardinality = (lo, hi)
        else:
            cardinality = None
        dims.append(Dimension(name=f"d{i}", elements=elements, cardinality=cardinality))
    return DesignSpace(name="random", meta=MetaInfo(), dimensions=tuple(dims))


def _random_cell(rng: random.Random, space: DesignSpace) -> ElementRef:
    i = rng.randrange(space.n)
    j = rng.randrange(len(space.dimensions[i].elements))
    return ElementRef(i, j)


def _distinct_cells(rng: random.Random, space: DesignSpace, count: int):
    cells = set()
    for _ in range(50):
        cells.add(_random_cell(rng, space).resolve(space))
        if len(cells) >= count:
            break
    return [ElementRef(i, j) for i, j in sorted(cells)][:count]


def random_constraints(
    rng: random.Random,
    space: DesignSpace,
    max_hard: int = 8,
    max_soft: int = 8,
    weights=(-2, -1, 1, 2),
):
    constraints = []
    hard_kinds = [Kind.REQUIRE_ONE_OF, Kind.FORBID, Kind.TOGETHER, Kind.EXCLUSIVE, Kind.NOT_ALL_OF]
    total_cells = sum(len(d.elements) for d in space.dimensions)
    for _ in range(rng.randint(0, max_hard)):
        kind = rng.choice(hard_kinds)
        if kind in (Kind.TOGETHER, Kind.EXCLUSIVE):
            if total_cells < 2:
                continue
            cells = _distinct_cells(rng, space, 2)
            if len(cells) < 2:
                continue
        else:
            want = rng.randint(1, min(4, total_cells))
            cells = _distinct_cells(rng, space, want)
        constraints.append(SymbolicConstraint(kind, tuple(cells)))
    for _ in range(rng.randint(0, max_soft)):
        kind = rng.choice([Kind.PREFER, Kind.AVOID])
        want = rng.randint(1, min(3, total_cells))
        cells = _distinct_cells(rng, space, want)
        constraints.append(SymbolicConstraint(kind, tuple(cells), weight=rng.choice(weights)))
    return constraints


def random_solution(rng: random.Random, space: DesignSpace) -> SolutionMatrix:
    """A structurally valid matrix (binary, padding clear) whose per-dimension
    selection counts may or may not respect the cardinality bounds."""
    cells = np.zeros(space.shape, dtype=np.uint8)
    for i, dim in enumerate(space.dimensions):
        for j in range(len(dim.elements)):
            if rng.random() < 0.35:
                cells[i, j] = 1
    return SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)


def assignment_count(space: DesignSpace) -> int:
    from math import comb

    total = 1
    for dim in space.dimensions:
        lo, hi = dim.bounds
        total *= sum(comb(len(dim.elements), c) for c in range(lo, hi + 1))
    return total
