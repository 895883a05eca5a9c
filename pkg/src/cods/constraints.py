"""Symbolic selection rules and their compilation to weighted matrix form.

Hard rules compile to signed-coefficient rows with a comparison sense and an
integer target that feasible solutions must satisfy exactly. Soft rules
compile to binary reward matrices whose weighted hit counts sum into the
selection objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .space import (
    DesignSpace,
    ElementRef,
    SolutionMatrix,
    UnknownElementError,
)

SENSES = ("=", "<=", ">=")


class ConstraintError(Exception):
    """A symbolic constraint is malformed or cannot be compiled."""


class Kind(str, Enum):
    REQUIRE_ONE_OF = "require_one_of"
    FORBID = "forbid"
    PREFER = "prefer"
    AVOID = "avoid"
    TOGETHER = "together"
    EXCLUSIVE = "exclusive"
    NOT_ALL_OF = "not_all_of"


HARD_KINDS = frozenset({Kind.REQUIRE_ONE_OF, Kind.FORBID, Kind.TOGETHER, Kind.EXCLUSIVE, Kind.NOT_ALL_OF})
SOFT_KINDS = frozenset({Kind.PREFER, Kind.AVOID})
PAIR_KINDS = frozenset({Kind.TOGETHER, Kind.EXCLUSIVE})


@dataclass(frozen=True)
class RequirementInput:
    """A free-text user requirement, optionally tagged with context labels."""

    text: str
    tags: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("requirement text must be non-empty")


@dataclass(frozen=True)
class SymbolicConstraint:
    """One rule over named cells, prior to matrix compilation.

    Soft kinds carry a nonzero weight magnitude (sign is applied by kind at
    compile time: prefer rewards, avoid penalizes). Hard kinds carry none.
    """

    kind: Kind
    cells: Tuple[ElementRef, ...]
    weight: Optional[float] = None
    rationale: Optional[str] = None

    def __post_init__(self):
        if not self.cells:
            raise ConstraintError(f"{self.kind.value}: cells must be non-empty")
        if len(set(self.cells)) != len(self.cells):
            raise ConstraintError(f"{self.kind.value}: duplicate cell in constraint")
        if self.kind in PAIR_KINDS and len(self.cells) != 2:
            raise ConstraintError(f"{self.kind.value}: exactly two cells required")
        if self.kind in SOFT_KINDS:
            w = 1.0 if self.weight is None else float(self.weight)
            if w == 0:
                raise ConstraintError(f"{self.kind.value}: weight must be nonzero")
            object.__setattr__(self, "weight", w)
        elif self.weight is not None:
            raise ConstraintError(f"{self.kind.value}: hard constraints carry no weight")

    @property
    def is_hard(self) -> bool:
        return self.kind in HARD_KINDS

    @property
    def is_soft(self) -> bool:
        return self.kind in SOFT_KINDS

    def resolve_cells(self, space: DesignSpace) -> Tuple[Tuple[int, int], ...]:
        unknown: list = []
        out = []
        for ref in self.cells:
            try:
                out.append(ref.resolve(space))
            except UnknownElementError as exc:
                unknown.extend(exc.names)
        if unknown:
            raise UnknownElementError(unknown)
        if len(set(out)) != len(out):
            raise ConstraintError(f"{self.kind.value}: cells resolve to the same position")
        return tuple(out)

    def to_doc(self, space: DesignSpace) -> dict:
        doc: dict = {"kind": self.kind.value, "cells": [c.to_doc(space) for c in self.cells]}
        if self.is_soft:
            doc["weight"] = self.weight
        if self.rationale:
            doc["rationale"] = self.rationale
        return doc


def require_one_of(cells: Sequence[ElementRef], rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.REQUIRE_ONE_OF, tuple(cells), rationale=rationale)


def forbid(cells: Sequence[ElementRef], rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.FORBID, tuple(cells), rationale=rationale)


def prefer_each(cells: Sequence[ElementRef], weight: float = 1.0, rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.PREFER, tuple(cells), weight=weight, rationale=rationale)


def avoid_each(cells: Sequence[ElementRef], weight: float = 1.0, rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.AVOID, tuple(cells), weight=weight, rationale=rationale)


def together(a: ElementRef, b: ElementRef, rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.TOGETHER, (a, b), rationale=rationale)


def exclusive(a: ElementRef, b: ElementRef, rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.EXCLUSIVE, (a, b), rationale=rationale)


def not_all_of(cells: Sequence[ElementRef], rationale: Optional[str] = None) -> SymbolicConstraint:
    return SymbolicConstraint(Kind.NOT_ALL_OF, tuple(cells), rationale=rationale)


@dataclass(frozen=True, eq=False)
class SoftRow:
    matrix: np.ndarray  # binary n x m
    weight: float

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.int8)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class HardRow:
    matrix: np.ndarray  # n x m with entries in {-1, 0, 1}
    sense: str
    target: int

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ConstraintError(f"unknown sense {self.sense!r}")
        m = np.ascontiguousarray(self.matrix, dtype=np.int8)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def holds(self, achieved: int) -> bool:
        if self.sense == "=":
            return achieved == self.target
        if self.sense == "<=":
            return achieved <= self.target
        return achieved >= self.target


@dataclass(frozen=True)
class CompiledConstraintSet:
    """Matrix form of a rule set against a fixed space shape."""

    shape: Tuple[int, int]
    soft: Tuple[SoftRow, ...]
    hard: Tuple[HardRow, ...]

    def to_doc(self) -> dict:
        return {
            "shape": list(self.shape),
            "soft": [{"weight": row.weight, "matrix": row.matrix.tolist()} for row in self.soft],
            "hard": [
                {"sense": row.sense, "target": row.target, "matrix": row.matrix.tolist()}
                for row in self.hard
            ],
        }


def compile_constraints(
    space: DesignSpace, constraints: Sequence[SymbolicConstraint]
) -> CompiledConstraintSet:
    """Lower symbolic rules plus the space's own selection rules to matrices.

    Row order: user rules first (input order), then per-dimension selection
    count rows, then a single row forbidding all padded cells.
    """
    n, m = space.shape
    soft: list = []
    hard: list = []
    for c in constraints:
        cells = c.resolve_cells(space)
        mat = np.zeros((n, m), dtype=np.int8)
        if c.kind in SOFT_KINDS:
            for i, j in cells:
                mat[i, j] = 1
            w = abs(c.weight) if c.kind is Kind.PREFER else -abs(c.weight)
            soft.append(SoftRow(matrix=mat, weight=w))
        elif c.kind is Kind.REQUIRE_ONE_OF:
            for i, j in cells:
                mat[i, j] = 1
            hard.append(HardRow(matrix=mat, sense="=", target=1))
        elif c.kind is Kind.FORBID:
            for i, j in cells:
                mat[i, j] = 1
            hard.append(HardRow(matrix=mat, sense="=", target=0))
        elif c.kind is Kind.TOGETHER:
            (ia, ja), (ib, jb) = cells
            mat[ia, ja] = 1
            mat[ib, jb] = -1
            hard.append(HardRow(matrix=mat, sense="=", target=0))
        elif c.kind is Kind.EXCLUSIVE:
            for i, j in cells:
                mat[i, j] = 1
            hard.append(HardRow(matrix=mat, sense="<=", target=1))
        elif c.kind is Kind.NOT_ALL_OF:
            for i, j in cells:
                mat[i, j] = 1
            hard.append(HardRow(matrix=mat, sense="<=", target=len(cells) - 1))
        else:  # pragma: no cover - exhaustive over Kind
            raise ConstraintError(f"unhandled kind {c.kind}")

    for i, dim in enumerate(space.dimensions):
        row = np.zeros((n, m), dtype=np.int8)
        row[i, : len(dim.elements)] = 1
        lo, hi = dim.bounds
        if lo == hi:
            hard.append(HardRow(matrix=row, sense="=", target=lo))
        else:
            hard.append(HardRow(matrix=row, sense=">=", target=lo))
            hard.append(HardRow(matrix=row, sense="<=", target=hi))

    pad = np.zeros((n, m), dtype=np.int8)
    for i, dim in enumerate(space.dimensions):
        pad[i, len(dim.elements):] = 1
    if pad.any():
        hard.append(HardRow(matrix=pad, sense="=", target=0))

    return CompiledConstraintSet(shape=(n, m), soft=tuple(soft), hard=tuple(hard))


def objective_value(cset: CompiledConstraintSet, x: SolutionMatrix) -> float:
    """Weighted sum of soft-rule hits over the selected cells."""
    if x.shape != cset.shape:
        raise ValueError(f"solution shape {x.shape} does not match compiled shape {cset.shape}")
    cells = x.cells.astype(np.int64)
    return float(sum(row.weight * int((row.matrix * cells).sum()) for row in cset.soft))


@dataclass(frozen=True)
class RowCheck:
    index: int
    achieved: int
    sense: str
    target: int
    ok: bool

    def to_doc(self) -> dict:
        return {
            "index": self.index,
            "achieved": self.achieved,
            "sense": self.sense,
            "target": self.target,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    rows: Tuple[RowCheck, ...]
    matrix_ok: bool
    notes: Tuple[str, ...] = ()

    def to_doc(self) -> dict:
        return {
            "feasible": self.feasible,
            "matrix_ok": self.matrix_ok,
            "rows": [r.to_doc() for r in self.rows],
            "notes": list(self.notes),
        }


def check_feasible(cset: CompiledConstraintSet, x: SolutionMatrix) -> FeasibilityReport:
    """Report each hard row's achieved value against its sense and target."""
    if x.shape != cset.shape:
        raise ValueError(f"solution shape {x.shape} does not match compiled shape {cset.shape}")
    cells = x.cells.astype(np.int64)
    rows = []
    for k, row in enumerate(cset.hard):
        achieved = int((row.matrix * cells).sum())
        rows.append(RowCheck(index=k, achieved=achieved, sense=row.sense, target=row.target, ok=row.holds(achieved)))
    # Binary domain and zeroed padding are enforced by SolutionMatrix itself.
    matrix_ok = True
    notes: Tuple[str, ...] = ()
    feasible = matrix_ok and all(r.ok for r in rows)
    return FeasibilityReport(feasible=feasible, rows=tuple(rows), matrix_ok=matrix_ok, notes=notes)


def satisfies_symbolic(
    space: DesignSpace, constraints: Sequence[SymbolicConstraint], x: SolutionMatrix
) -> bool:
    """Evaluate the rules' intended meaning directly, without compiling.

    Includes the space's own rules: per-dimension selection counts and no
    padded cells. Used as the independent check that compilation is sound.
    """
    if x.shape != space.shape or x.dim_sizes != space.dim_sizes:
        raise ValueError("solution shape does not match space")
    for i, dim in enumerate(space.dimensions):
        count = int(x.cells[i, : len(dim.elements)].sum())
        lo, hi = dim.bounds
        if not lo <= count <= hi:
            return False
    for c in constraints:
        cells = c.resolve_cells(space)
        picked = sum(int(x.cells[i, j]) for i, j in cells)
        if c.kind is Kind.REQUIRE_ONE_OF and picked != 1:
            return False
        if c.kind is Kind.FORBID and picked != 0:
            return False
        if c.kind is Kind.TOGETHER:
            (ia, ja), (ib, jb) = cells
            if x.cells[ia, ja] != x.cells[ib, jb]:
                return False
        if c.kind is Kind.EXCLUSIVE and picked > 1:
            return False
        if c.kind is Kind.NOT_ALL_OF and picked == len(cells):
            return False
    return True


_KIND_VALUES = {k.value: k for k in Kind}


def constraint_from_doc(entry: Mapping, index_path: str = "") -> SymbolicConstraint:
    """One constraint-document record -> SymbolicConstraint.

    Accepts either an explicit cell list or the single-dimension shorthand
    with ``dimension`` plus ``elements``.
    """
    where = index_path or "constraint"
    if not isinstance(entry, Mapping):
        raise ConstraintError(f"{where}: must be an object")
    kind_name = entry.get("kind")
    if kind_name not in _KIND_VALUES:
        raise ConstraintError(f"{where}.kind: unknown kind {kind_name!r}")
    kind = _KIND_VALUES[kind_name]
    if "cells" in entry:
        raw_cells = entry["cells"]
        if not isinstance(raw_cells, list) or not raw_cells:
            raise ConstraintError(f"{where}.cells: must be a non-empty list")
        cells = []
        for c, raw in enumerate(raw_cells):
            if not isinstance(raw, Mapping) or "dimension" not in raw or "element" not in raw:
                raise ConstraintError(f"{where}.cells[{c}]: need dimension and element")
            cells.append(ElementRef(raw["dimension"], raw["element"]))
    elif "dimension" in entry and "elements" in entry:
        elems = entry["elements"]
        if not isinstance(elems, list) or not elems:
            raise ConstraintError(f"{where}.elements: must be a non-empty list")
        cells = [ElementRef(entry["dimension"], e) for e in elems]
    else:
        raise ConstraintError(f"{where}: need either cells or dimension+elements")
    weight = entry.get("weight")
    if weight is not None and kind not in SOFT_KINDS:
        raise ConstraintError(f"{where}.weight: {kind.value} carries no weight")
    rationale = entry.get("rationale")
    try:
        return SymbolicConstraint(kind, tuple(cells), weight=weight, rationale=rationale)
    except ConstraintError as exc:
        raise ConstraintError(f"{where}: {exc}") from None


def load_constraints_document(path: Union[str, Path], space: DesignSpace) -> Tuple[SymbolicConstraint, ...]:
    """Read a JSON array of constraint records and resolve it against a space."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise ConstraintError("constraint document must be a JSON array")
    out = []
    for k, entry in enumerate(doc):
        c = constraint_from_doc(entry, index_path=f"[{k}]")
        c.resolve_cells(space)  # fail fast on unknown names
        out.append(c)
    return tuple(out)
