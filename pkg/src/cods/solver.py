"""Exact maximization of the weighted selection objective over binary matrices.

``solve`` runs a depth-first branch-and-bound over dimensions in index order,
branching on the per-dimension element choice. ``brute_force_solve`` is the
verification oracle: it enumerates every assignment and must agree with
``solve`` bit for bit under the shared tie-break (lexicographically smallest
selection, dimension-major, among equal-objective optima).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import chain, combinations
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .constraints import CompiledConstraintSet, check_feasible, objective_value
from .space import DesignSpace, SolutionMatrix, solution_to_tuple

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"

DEFAULT_NODE_LIMIT = 10_000_000
DEFAULT_ENUMERATION_CAP = 1_000_000


class ResourceLimitError(Exception):
    """The configured node or enumeration budget was exhausted before an answer."""


@dataclass(frozen=True)
class SolveStats:
    nodes: int
    elapsed_seconds: float

    def to_doc(self) -> dict:
        # Elapsed time is intentionally left out: serialized results must be
        # identical across repeated runs on the same inputs.
        return {"nodes": self.nodes}


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: str
    solution: Optional[SolutionMatrix]
    objective: Optional[float]
    stats: SolveStats

    def to_doc(self, space: DesignSpace, cset: Optional[CompiledConstraintSet] = None) -> dict:
        doc: dict = {"status": self.status}
        if self.status == OPTIMAL:
            assert self.solution is not None
            doc["tuple"] = [ref.to_doc(space) for ref in solution_to_tuple(space, self.solution)]
            doc["objective"] = self.objective
            if cset is not None:
                doc["per_rule"] = explain(self, cset).to_doc()
        doc["stats"] = self.stats.to_doc()
        return doc


def _dimension_choices(space: DesignSpace, limit: int) -> List[List[Tuple[int, ...]]]:
    """Per dimension, the allowed element-index subsets in ascending tuple order."""
    all_choices = []
    for dim in space.dimensions:
        size = len(dim.elements)
        lo, hi = dim.bounds
        count = sum(comb(size, c) for c in range(lo, hi + 1))
        if count > limit:
            raise ResourceLimitError(
                f"dimension '{dim.name}' admits {count} selections, above the cap of {limit}"
            )
        choices = sorted(chain.from_iterable(combinations(range(size), c) for c in range(lo, hi + 1)))
        all_choices.append(choices)
    return all_choices


def _cell_scores(cset: CompiledConstraintSet) -> np.ndarray:
    n, m = cset.shape
    total = np.zeros((n, m), dtype=np.float64)
    for row in cset.soft:
        total += row.weight * row.matrix
    return total


def _choice_tables(
    cset: CompiledConstraintSet, choices: List[List[Tuple[int, ...]]]
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Per dimension: score per choice, and hard-row delta per (choice, row)."""
    cell_score = _cell_scores(cset)
    score_tables = []
    row_tables = []
    n_rows = len(cset.hard)
    for i, dim_choices in enumerate(choices):
        scores = np.array(
            [sum(cell_score[i, j] for j in ch) for ch in dim_choices], dtype=np.float64
        )
        deltas = np.zeros((len(dim_choices), n_rows), dtype=np.int64)
        for k, row in enumerate(cset.hard):
            coeffs = row.matrix[i]
            for c, ch in enumerate(dim_choices):
                deltas[c, k] = sum(int(coeffs[j]) for j in ch)
        score_tables.append(scores)
        row_tables.append(deltas)
    return score_tables, row_tables


def _check_shapes(space: DesignSpace, cset: CompiledConstraintSet) -> None:
    if cset.shape != space.shape:
        raise ValueError(f"compiled shape {cset.shape} does not match space shape {space.shape}")


def _matrix_from_choices(space: DesignSpace, chosen: Sequence[Tuple[int, ...]]) -> SolutionMatrix:
    cells = np.zeros(space.shape, dtype=np.uint8)
    for i, ch in enumerate(chosen):
        for j in ch:
            cells[i, j] = 1
    return SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)


def solve(
    space: DesignSpace,
    cset: CompiledConstraintSet,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> SolveResult:
    """Maximize the soft objective subject to every hard row.

    Returns the lexicographically smallest maximizer among equal-objective
    optima. Raises ResourceLimitError when the node budget runs out, which is
    reported distinctly from infeasibility.
    """
    _check_shapes(space, cset)
    started = time.perf_counter()
    choices = _dimension_choices(space, node_limit)
    score_tables, row_tables = _choice_tables(cset, choices)
    n = space.n
    n_rows = len(cset.hard)
    senses = [row.sense for row in cset.hard]
    targets = [row.target for row in cset.hard]

    # Suffix bounds over dimensions i..n-1: the best achievable score, and the
    # reachable window of every hard row's running sum.
    suffix_best = np.zeros(n + 1)
    suffix_row_max = np.zeros((n + 1, n_rows), dtype=np.int64)
    suffix_row_min = np.zeros((n + 1, n_rows), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        suffix_best[i] = suffix_best[i + 1] + (score_tables[i].max() if len(score_tables[i]) else 0.0)
        if n_rows:
            suffix_row_max[i] = suffix_row_max[i + 1] + row_tables[i].max(axis=0)
            suffix_row_min[i] = suffix_row_min[i + 1] + row_tables[i].min(axis=0)

    best_score: Optional[float] = None
    best_chosen: Optional[Tuple[Tuple[int, ...], ...]] = None
    nodes = 0
    stack: List[Tuple[int, ...]] = []

    def dfs(i: int, score: float, row_sums: List[int]) -> None:
        nonlocal best_score, best_chosen, nodes
        nodes += 1
        if nodes > node_limit:
            raise ResourceLimitError(f"node limit of {node_limit} exceeded")
        if i == n:
            for k in range(n_rows):
                achieved, sense, target = row_sums[k], senses[k], targets[k]
                if sense == "=" and achieved != target:
                    return
                if sense == "<=" and achieved > target:
                    return
                if sense == ">=" and achieved < target:
                    return
            if best_score is None or score > best_score:
                best_score = score
                best_chosen = tuple(stack)
            return
        if best_score is not None and score + suffix_best[i] <= best_score:
            return
        for k in range(n_rows):
            hi = row_sums[k] + suffix_row_max[i][k]
            lo = row_sums[k] + suffix_row_min[i][k]
            sense, target = senses[k], targets[k]
            if sense == "=" and (hi < target or lo > target):
                return
            if sense == "<=" and lo > target:
                return
            if sense == ">=" and hi < target:
                return
        deltas = row_tables[i]
        for c, ch in enumerate(choices[i]):
            stack.append(ch)
            dfs(i + 1, score + float(score_tables[i][c]), [row_sums[k] + int(deltas[c, k]) for k in range(n_rows)])
            stack.pop()

    dfs(0, 0.0, [0] * n_rows)
    elapsed = time.perf_counter() - started
    stats = SolveStats(nodes=nodes, elapsed_seconds=elapsed)
    if best_chosen is None:
        return SolveResult(status=INFEASIBLE, solution=None, objective=None, stats=stats)
    solution = _matrix_from_choices(space, best_chosen)
    return SolveResult(
        status=OPTIMAL,
        solution=solution,
        objective=objective_value(cset, solution),
        stats=stats,
    )


def brute_force_solve(
    space: DesignSpace,
    cset: CompiledConstraintSet,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> SolveResult:
    """Full enumeration with the same contract and tie-break as ``solve``.

    Per-choice contributions are derived directly from the compiled matrices
    (not from the branch-and-bound's precomputed tables) so this stays an
    independent check. The assignment space is laid out in lexicographic
    order, so the first maximizing index is automatically the
    lexicographically smallest optimum.
    """
    _check_shapes(space, cset)
    started = time.perf_counter()
    choices = _dimension_choices(space, enumeration_cap)
    counts = [len(ch) for ch in choices]
    total = 1
    for c in counts:
        total *= c
        if total > enumeration_cap:
            raise ResourceLimitError(f"{total}+ assignments exceed the enumeration cap of {enumeration_cap}")

    totals = np.zeros(1, dtype=np.float64)
    for i, dim_choices in enumerate(choices):
        scores = np.array(
            [
                sum(row.weight * sum(int(row.matrix[i, j]) for j in ch) for row in cset.soft)
                for ch in dim_choices
            ],
            dtype=np.float64,
        )
        totals = (totals[:, None] + scores[None, :]).ravel()

    feasible = np.ones(total, dtype=bool)
    for row in cset.hard:
        sums = np.zeros(1, dtype=np.int64)
        for i, dim_choices in enumerate(choices):
            deltas = np.array(
                [sum(int(row.matrix[i, j]) for j in ch) for ch in dim_choices], dtype=np.int64
            )
            sums = (sums[:, None] + deltas[None, :]).ravel()
        if row.sense == "=":
            feasible &= sums == row.target
        elif row.sense == "<=":
            feasible &= sums <= row.target
        else:
            feasible &= sums >= row.target

    stats = SolveStats(nodes=total, elapsed_seconds=time.perf_counter() - started)
    if not feasible.any():
        return SolveResult(status=INFEASIBLE, solution=None, objective=None, stats=stats)
    masked = np.where(feasible, totals, -np.inf)
    flat = int(np.argmax(masked))
    picked = np.unravel_index(flat, tuple(counts))
    chosen = tuple(choices[i][int(c)] for i, c in enumerate(picked))
    solution = _matrix_from_choices(space, chosen)
    assert check_feasible(cset, solution).feasible
    stats = SolveStats(nodes=total, elapsed_seconds=time.perf_counter() - started)
    return SolveResult(
        status=OPTIMAL,
        solution=solution,
        objective=objective_value(cset, solution),
        stats=stats,
    )


@dataclass(frozen=True)
class SoftContribution:
    index: int
    weight: float
    matched: int
    contribution: float

    def to_doc(self) -> dict:
        return {
            "type": "soft",
            "index": self.index,
            "weight": self.weight,
            "matched": self.matched,
            "contribution": self.contribution,
        }


@dataclass(frozen=True)
class ExplainReport:
    soft: Tuple[SoftContribution, ...]
    hard: Tuple[dict, ...]
    total: float

    def to_doc(self) -> list:
        return [c.to_doc() for c in self.soft] + list(self.hard)


def explain(result: SolveResult, cset: CompiledConstraintSet) -> ExplainReport:
    """Break the objective down per soft rule and report hard-row tightness."""
    if result.status != OPTIMAL or result.solution is None:
        raise ValueError("explain requires an optimal result")
    cells = result.solution.cells.astype(np.int64)
    soft = []
    for k, row in enumerate(cset.soft):
        matched = int((row.matrix * cells).sum())
        soft.append(
            SoftContribution(index=k, weight=row.weight, matched=matched, contribution=row.weight * matched)
        )
    report = check_feasible(cset, result.solution)
    hard = tuple(
        {
            "type": "hard",
            "index": rc.index,
            "achieved": rc.achieved,
            "sense": rc.sense,
            "target": rc.target,
            "binding": rc.achieved == rc.target,
        }
        for rc in report.rows
    )
    total = float(sum(c.contribution for c in soft))
    return ExplainReport(soft=tuple(soft), hard=hard, total=total)
