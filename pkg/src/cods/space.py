"""Design spaces: named grids of selectable elements plus meta-information.

A space is an ordered list of dimensions, each holding an ordered list of
element names. A candidate design selects elements per dimension and is
carried as a binary n-by-m matrix, zero-padded to the widest dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np


class SpaceError(Exception):
    """Base class for design-space failures."""


class SpaceParseError(SpaceError):
    """The document is not valid JSON or not a JSON object."""


class SpaceValidationError(SpaceError):
    """The document is structurally broken; ``path`` locates the offender."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class UnknownElementError(SpaceError):
    """Referenced dimensions or elements that do not exist in the space."""

    def __init__(self, names: Sequence[str]):
        self.names = tuple(names)
        super().__init__("unknown name(s): " + ", ".join(self.names))


class SolutionError(SpaceError):
    """A solution matrix or reference list violates the space's structure."""


@dataclass(frozen=True)
class Dimension:
    """One design factor with its ordered, uniquely named elements.

    ``cardinality`` bounds how many elements a solution may select from this
    dimension; ``None`` means the default of exactly one.
    """

    name: str
    elements: Tuple[str, ...]
    cardinality: Optional[Tuple[int, int]] = None

    @property
    def bounds(self) -> Tuple[int, int]:
        return self.cardinality if self.cardinality is not None else (1, 1)

    def index_of(self, element: str) -> int:
        try:
            return self.elements.index(element)
        except ValueError:
            raise UnknownElementError([element]) from None


@dataclass(frozen=True)
class MetaInfo:
    """Free-text context: intended designer persona and per-item descriptions."""

    audience: str = ""
    dimension_descriptions: Mapping[str, str] = field(default_factory=dict)
    element_descriptions: Mapping[str, Mapping[str, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class DesignSpace:
    """An ordered product of dimensions with lookup tables built on creation."""

    name: str
    meta: MetaInfo
    dimensions: Tuple[Dimension, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "_dim_index", {d.name: i for i, d in enumerate(self.dimensions)}
        )

    @property
    def n(self) -> int:
        return len(self.dimensions)

    @property
    def m(self) -> int:
        return max(len(d.elements) for d in self.dimensions)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n, self.m)

    @property
    def dim_sizes(self) -> Tuple[int, ...]:
        return tuple(len(d.elements) for d in self.dimensions)

    def dimension_index(self, name: str) -> int:
        try:
            return self._dim_index[name]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownElementError([name]) from None

    def dimension(self, ref: Union[int, str]) -> Dimension:
        if isinstance(ref, str):
            return self.dimensions[self.dimension_index(ref)]
        return self.dimensions[ref]


@dataclass(frozen=True)
class ElementRef:
    """Symbolic address of one cell, by index or by name."""

    dimension: Union[int, str]
    element: Union[int, str]

    def resolve(self, space: DesignSpace) -> Tuple[int, int]:
        """Return 0-based (dimension, element) indices, or raise UnknownElementError."""
        if isinstance(self.dimension, str):
            i = space.dimension_index(self.dimension)
        else:
            i = self.dimension
            if not 0 <= i < space.n:
                raise UnknownElementError([f"dimension #{i}"])
        dim = space.dimensions[i]
        if isinstance(self.element, str):
            j = dim.index_of(self.element)
        else:
            j = self.element
            if not 0 <= j < len(dim.elements):
                raise UnknownElementError([f"{dim.name} element #{j}"])
        return i, j

    def to_doc(self, space: DesignSpace) -> dict:
        i, j = self.resolve(space)
        return {"dimension": space.dimensions[i].name, "element": space.dimensions[i].elements[j]}


@dataclass(frozen=True, eq=False)
class SolutionMatrix:
    """Binary selection matrix padded to width m; padded cells are always zero."""

    cells: np.ndarray
    dim_sizes: Tuple[int, ...]

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2 or cells.shape[0] != len(self.dim_sizes):
            raise ValueError(f"expected a {len(self.dim_sizes)}-row matrix, got shape {cells.shape}")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError("solution cells must be 0 or 1")
        mask = self._padding_mask(cells.shape[1], self.dim_sizes)
        if cells[mask].any():
            raise SolutionError("padded cell selected")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @staticmethod
    def _padding_mask(m: int, dim_sizes: Tuple[int, ...]) -> np.ndarray:
        cols = np.arange(m)
        return cols[None, :] >= np.asarray(dim_sizes)[:, None]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.cells.shape

    @property
    def padding_mask(self) -> np.ndarray:
        return self._padding_mask(self.cells.shape[1], self.dim_sizes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SolutionMatrix):
            return NotImplemented
        return self.dim_sizes == other.dim_sizes and np.array_equal(self.cells, other.cells)


def padded_shape(space: DesignSpace) -> Tuple[int, int]:
    """(number of dimensions, widest element count)."""
    return space.shape


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SpaceValidationError(path, message)


def load_design_space(doc: Mapping) -> DesignSpace:
    """Build and validate a DesignSpace from a parsed document.

    Dimension and element order are preserved exactly as given.
    """
    if not isinstance(doc, Mapping):
        raise SpaceParseError("design-space document must be a JSON object")
    name = doc.get("name")
    _require(isinstance(name, str) and name != "", "name", "missing or empty space name")

    raw_dims = doc.get("dimensions")
    _require(isinstance(raw_dims, list) and len(raw_dims) > 0, "dimensions", "at least one dimension required")

    dims = []
    seen = set()
    for k, rd in enumerate(raw_dims):
        path = f"dimensions[{k}]"
        _require(isinstance(rd, Mapping), path, "dimension must be an object")
        dname = rd.get("name")
        _require(isinstance(dname, str) and dname != "", f"{path}.name", "missing or empty dimension name")
        _require(dname not in seen, f"{path}.name", f"duplicate dimension name '{dname}'")
        seen.add(dname)
        elems = rd.get("elements")
        _require(
            isinstance(elems, list) and len(elems) > 0 and all(isinstance(e, str) and e for e in elems),
            f"{path}.elements",
            "elements must be a non-empty list of names",
        )
        _require(len(set(elems)) == len(elems), f"{path}.elements", f"duplicate element in '{dname}'")
        card = rd.get("cardinality")
        if card is not None:
            _require(
                isinstance(card, list) and len(card) == 2 and all(isinstance(c, int) for c in card),
                f"{path}.cardinality",
                "cardinality must be [min, max]",
            )
            lo, hi = card
            _require(0 <= lo <= hi <= len(elems), f"{path}.cardinality", f"need 0 <= min <= max <= {len(elems)}")
            card = (lo, hi)
        dims.append(Dimension(name=dname, elements=tuple(elems), cardinality=card))

    meta_doc = doc.get("meta", {})
    _require(isinstance(meta_doc, Mapping), "meta", "meta must be an object")
    dim_desc = dict(meta_doc.get("dimensions", {}))
    elem_desc = {k: dict(v) for k, v in meta_doc.get("elements", {}).items()}
    by_name = {d.name: d for d in dims}
    for key in dim_desc:
        _require(key in by_name, f"meta.dimensions.{key}", "describes a dimension that does not exist")
    for dkey, emap in elem_desc.items():
        _require(dkey in by_name, f"meta.elements.{dkey}", "describes a dimension that does not exist")
        for ekey in emap:
            _require(
                ekey in by_name[dkey].elements,
                f"meta.elements.{dkey}.{ekey}",
                "describes an element that does not exist",
            )
    meta = MetaInfo(
        audience=str(meta_doc.get("audience", "")),
        dimension_descriptions=dim_desc,
        element_descriptions=elem_desc,
    )
    return DesignSpace(name=name, meta=meta, dimensions=tuple(dims))


def read_design_space(path: Union[str, Path]) -> DesignSpace:
    """Load a design space from a JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpaceParseError(f"{path}: {exc}") from exc
    return load_design_space(doc)


def space_to_doc(space: DesignSpace) -> dict:
    """Inverse of load_design_space; omits defaults so round-trips are stable."""
    doc: dict = {"name": space.name}
    meta: dict = {}
    if space.meta.audience:
        meta["audience"] = space.meta.audience
    if space.meta.dimension_descriptions:
        meta["dimensions"] = dict(space.meta.dimension_descriptions)
    if space.meta.element_descriptions:
        meta["elements"] = {k: dict(v) for k, v in space.meta.element_descriptions.items()}
    if meta:
        doc["meta"] = meta
    dims = []
    for d in space.dimensions:
        dd: dict = {"name": d.name, "elements": list(d.elements)}
        if d.cardinality is not None:
            dd["cardinality"] = list(d.cardinality)
        dims.append(dd)
    doc["dimensions"] = dims
    return doc


def serialize_design_space(space: DesignSpace) -> str:
    return json.dumps(space_to_doc(space), indent=2, ensure_ascii=False) + "\n"


def merge_space_document(space: DesignSpace, doc: Mapping) -> DesignSpace:
    """Extend a space with a partial document: new elements are appended to
    matching dimensions, unknown dimensions are appended whole. Order of
    existing entries is preserved."""
    base = space_to_doc(space)
    extra_dims = doc.get("dimensions", [])
    by_name = {d["name"]: d for d in base["dimensions"]}
    for rd in extra_dims:
        if not isinstance(rd, Mapping) or "name" not in rd:
            raise SpaceValidationError("dimensions", "extension dimension must be an object with a name")
        name = rd["name"]
        if name in by_name:
            existing = by_name[name]
            for e in rd.get("elements", []):
                if e not in existing["elements"]:
                    existing["elements"].append(e)
            if "cardinality" in rd:
                existing["cardinality"] = list(rd["cardinality"])
        else:
            base["dimensions"].append(
                {"name": name, "elements": list(rd.get("elements", []))}
                | ({"cardinality": list(rd["cardinality"])} if "cardinality" in rd else {})
            )
            by_name[name] = base["dimensions"][-1]
    ext_meta = doc.get("meta", {})
    if ext_meta:
        base_meta = base.setdefault("meta", {})
        if "audience" in ext_meta:
            base_meta["audience"] = ext_meta["audience"]
        for key in ("dimensions", "elements"):
            if key in ext_meta:
                merged = base_meta.setdefault(key, {})
                for k, v in ext_meta[key].items():
                    if isinstance(v, Mapping):
                        merged.setdefault(k, {}).update(v)
                    else:
                        merged[k] = v
    return load_design_space(base)


def solution_to_tuple(space: DesignSpace, x: SolutionMatrix) -> Tuple[ElementRef, ...]:
    """List the selected cells in dimension-major, element-index order."""
    if x.shape != space.shape or x.dim_sizes != space.dim_sizes:
        raise ValueError(f"solution shape {x.shape} does not match space shape {space.shape}")
    refs = []
    for i, dim in enumerate(space.dimensions):
        for j in np.flatnonzero(x.cells[i]):
            if j >= len(dim.elements):
                raise SolutionError(f"padded cell selected at ({i}, {int(j)})")
            refs.append(ElementRef(dim.name, dim.elements[int(j)]))
    return tuple(refs)


def tuple_to_solution(space: DesignSpace, refs: Sequence[ElementRef]) -> SolutionMatrix:
    """Build the matrix with exactly the referenced cells set."""
    cells = np.zeros(space.shape, dtype=np.uint8)
    unknown = []
    resolved = []
    for ref in refs:
        try:
            resolved.append(ref.resolve(space))
        except UnknownElementError as exc:
            unknown.extend(exc.names)
    if unknown:
        raise UnknownElementError(unknown)
    for i, j in resolved:
        if cells[i, j]:
            raise SolutionError(
                f"duplicate reference to {space.dimensions[i].name}:{space.dimensions[i].elements[j]}"
            )
        cells[i, j] = 1
    return SolutionMatrix(cells=cells, dim_sizes=space.dim_sizes)
