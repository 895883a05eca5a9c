"""Chart design space built from a dataset, its intrinsic rules, and chart specs.

The space has eleven dimensions: mark type, the x/y/color/size channel
mappings, a categorical grouping field, one aggregation method per measure
channel, a sort field, and the sort direction. Field-valued dimensions are
populated from the ingested dataset. Optional dimensions list "none" first so
that the solver's lexicographic tie-break leaves unconstrained channels unset.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from .constraints import (
    SymbolicConstraint,
    compile_constraints,
    check_feasible,
    exclusive,
    forbid,
    not_all_of,
    together,
)
from .space import DesignSpace, Dimension, ElementRef, MetaInfo, SolutionMatrix

CATEGORICAL = "categorical"
NUMERICAL = "numerical"
TEMPORAL = "temporal"

MARK_TYPES = ("bar", "line", "point", "pie")
AGGREGATION_METHODS = ("average", "sum", "count", "min", "max")
NONE_ELEMENT = "none"

# strptime patterns tried in order during type inference; configurable per call.
DEFAULT_DATE_FORMATS = ("%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y")

CHANNEL_DIMENSIONS = ("x", "y", "color", "size")
AGGREGATION_DIMENSIONS = ("x-aggregation", "y-aggregation", "size-aggregation")


class CsvError(Exception):
    """The CSV input cannot be ingested."""


class TransformError(Exception):
    """A chart spec cannot be applied to the data it references."""


@dataclass(frozen=True)
class Field:
    name: str
    ftype: str


@dataclass(frozen=True)
class DatasetSchema:
    fields: Tuple[Field, ...]
    row_count: int

    def field(self, name: str) -> Field:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def field_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def names_of_type(self, ftype: str) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fields if f.ftype == ftype)


Value = Union[float, date, str, None]


@dataclass(frozen=True, eq=False)
class Table:
    schema: DatasetSchema
    rows: Tuple[Tuple[Value, ...], ...]

    def column(self, name: str) -> Tuple[Value, ...]:
        idx = self.schema.field_names.index(name)
        return tuple(row[idx] for row in self.rows)


def _decode(source: Union[bytes, str, Path, io.IOBase]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _is_missing(raw: str) -> bool:
    return raw.strip() == ""


def _parse_number(raw: str) -> Optional[float]:
    try:
        value = float(raw)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_date(raw: str, formats: Sequence[str]) -> Optional[date]:
    for fmt in formats:
        try:
            return datetime.strptime(raw.strip(), fmt).date()
        except ValueError:
            continue
    return None


def load_table(
    source: Union[bytes, str, Path, io.IOBase],
    date_formats: Sequence[str] = DEFAULT_DATE_FORMATS,
) -> Table:
    """Ingest CSV text (header row required) and infer one type per column.

    A column is numerical when every non-missing value parses as a finite
    number, temporal when every non-missing value matches one of the date
    patterns, and categorical otherwise. Missing cells become None.
    """
    text = _decode(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvError("empty CSV: no header row") from None
    header = [h.strip() for h in header]
    if any(h == "" for h in header):
        raise CsvError("blank column name in header")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise CsvError(f"duplicate header(s): {', '.join(dupes)}")
    raw_rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvError(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
        raw_rows.append(row)

    fields = []
    for col, name in enumerate(header):
        values = [row[col] for row in raw_rows if not _is_missing(row[col])]
        if all(_parse_number(v) is not None for v in values):
            ftype = NUMERICAL
        elif all(_parse_date(v, date_formats) is not None for v in values):
            ftype = TEMPORAL
        else:
            ftype = CATEGORICAL
        fields.append(Field(name=name, ftype=ftype))

    parsed_rows = []
    for row in raw_rows:
        out: List[Value] = []
        for f, raw in zip(fields, row):
            if _is_missing(raw):
                out.append(None)
            elif f.ftype == NUMERICAL:
                out.append(_parse_number(raw))
            elif f.ftype == TEMPORAL:
                out.append(_parse_date(raw, date_formats))
            else:
                out.append(raw)
        parsed_rows.append(tuple(out))

    schema = DatasetSchema(fields=tuple(fields), row_count=len(parsed_rows))
    return Table(schema=schema, rows=tuple(parsed_rows))


def infer_schema(
    source: Union[bytes, str, Path, io.IOBase],
    date_formats: Sequence[str] = DEFAULT_DATE_FORMATS,
) -> DatasetSchema:
    return load_table(source, date_formats).schema


def read_table(path: Union[str, Path]) -> Table:
    return load_table(Path(path))


def build_vis_space(schema: DatasetSchema) -> DesignSpace:
    """The eleven-dimension chart design space for one dataset."""
    if not schema.fields:
        raise ValueError("schema has no fields")
    names = schema.field_names
    if NONE_ELEMENT in names:
        raise CsvError(f"field name {NONE_ELEMENT!r} is reserved")
    cats = schema.names_of_type(CATEGORICAL)
    aggregations = (NONE_ELEMENT, *AGGREGATION_METHODS)
    dims = (
        Dimension("mark-type", MARK_TYPES),
        Dimension("x", names),
        Dimension("y", (NONE_ELEMENT, *names)),
        Dimension("color", (NONE_ELEMENT, *names)),
        Dimension("size", (NONE_ELEMENT, *names)),
        Dimension("group-by", (NONE_ELEMENT, *cats)),
        Dimension("x-aggregation", aggregations),
        Dimension("y-aggregation", aggregations),
        Dimension("size-aggregation", aggregations),
        Dimension("sort", (NONE_ELEMENT, *names)),
        Dimension("order", ("ascending", "descending", NONE_ELEMENT)),
    )
    field_notes = {name: f"data field ({schema.field(name).ftype})" for name in names}
    meta = MetaInfo(
        audience="data visualization designer",
        dimension_descriptions={
            "mark-type": "Graphical primitive used to draw the data; fixes the chart family.",
            "x": "Data field mapped to horizontal position.",
            "y": "Data field mapped to vertical position; none means the y axis carries an aggregated value.",
            "color": "Data field mapped to the color channel; none disables it.",
            "size": "Data field mapped to mark size; none disables it.",
            "group-by": "Categorical field used to group records before aggregation; none disables grouping.",
            "x-aggregation": "How the field on x is summarized when records are grouped.",
            "y-aggregation": "How the field on y is summarized when records are grouped.",
            "size-aggregation": "How the field on size is summarized when records are grouped.",
            "sort": "Field by which output records are ordered; none keeps input order.",
            "order": "Sorting direction; none when no sort field is chosen.",
        },
        element_descriptions={
            "x": dict(field_notes),
            "y": dict(field_notes),
            "color": dict(field_notes),
            "size": dict(field_notes),
        },
    )
    return DesignSpace(name="chart-design", meta=meta, dimensions=dims)


def intrinsic_rules(space: DesignSpace, schema: DatasetSchema) -> List[SymbolicConstraint]:
    """Hard rules every renderable chart must satisfy, independent of the query.

    1. A sort direction is set exactly when a sort field is set.
    2. Aggregating the size channel requires size to be mapped (x is always
       mapped; an aggregated y with no y field is the aggregate-as-value case).
    3. Any aggregation requires a group-by field or a categorical x to group
       on implicitly.
    4. Pie charts need the color channel mapped and a value on y: either a y
       field or a valueless y aggregation.
    5. The size channel only encodes numerical fields.
    6. x is never unset (the x dimension has no none element by construction).
    """
    rules: List[SymbolicConstraint] = []
    cell = ElementRef
    rules.append(
        together(
            cell("sort", NONE_ELEMENT),
            cell("order", NONE_ELEMENT),
            rationale="a sorting direction is meaningful exactly when a sort field is chosen",
        )
    )
    for method in AGGREGATION_METHODS:
        rules.append(
            exclusive(
                cell("size-aggregation", method),
                cell("size", NONE_ELEMENT),
                rationale="cannot aggregate an unmapped size channel",
            )
        )
    non_categorical = [f.name for f in schema.fields if f.ftype != CATEGORICAL]
    for agg_dim in AGGREGATION_DIMENSIONS:
        for method in AGGREGATION_METHODS:
            for fname in non_categorical:
                rules.append(
                    not_all_of(
                        [cell(agg_dim, method), cell("group-by", NONE_ELEMENT), cell("x", fname)],
                        rationale="aggregation needs a grouping field or a categorical x to group on",
                    )
                )
    rules.append(
        exclusive(
            cell("mark-type", "pie"),
            cell("color", NONE_ELEMENT),
            rationale="pie slices are distinguished by color",
        )
    )
    rules.append(
        not_all_of(
            [cell("mark-type", "pie"), cell("y", NONE_ELEMENT), cell("y-aggregation", NONE_ELEMENT)],
            rationale="pie slices need a value: a y field or a valueless y aggregation",
        )
    )
    non_numeric = [f.name for f in schema.fields if f.ftype != NUMERICAL]
    if non_numeric:
        rules.append(
            forbid(
                [cell("size", fname) for fname in non_numeric],
                rationale="mark size can only encode numerical fields",
            )
        )
    return rules


@dataclass(frozen=True)
class ChartSpec:
    """Declarative chart description; unset channels are None."""

    mark: str
    x: str
    y: Optional[str] = None
    color: Optional[str] = None
    size: Optional[str] = None
    group_by: Optional[str] = None
    aggregate_x: Optional[str] = None
    aggregate_y: Optional[str] = None
    aggregate_size: Optional[str] = None
    sort: Optional[str] = None
    order: Optional[str] = None

    def to_doc(self) -> dict:
        doc: dict = {"mark": self.mark, "x": self.x}
        for key, value in (("y", self.y), ("color", self.color), ("size", self.size), ("group_by", self.group_by)):
            if value is not None:
                doc[key] = value
        aggregate = {}
        for key, value in (("x", self.aggregate_x), ("y", self.aggregate_y), ("size", self.aggregate_size)):
            if value is not None:
                aggregate[key] = value
        if aggregate:
            doc["aggregate"] = aggregate
        if self.sort is not None:
            doc["sort"] = self.sort
        if self.order is not None:
            doc["order"] = self.order
        return doc


def chart_spec_json(spec: ChartSpec) -> str:
    return json.dumps(spec.to_doc(), indent=2, ensure_ascii=False) + "\n"


def emit_chart_spec(space: DesignSpace, solution: SolutionMatrix, schema: DatasetSchema) -> ChartSpec:
    """Map an 11-element selection to a ChartSpec; rejects infeasible input."""
    report = check_feasible(compile_constraints(space, intrinsic_rules(space, schema)), solution)
    if not report.feasible:
        raise ValueError("solution violates the intrinsic chart rules")
    selected = {}
    for i, dim in enumerate(space.dimensions):
        idx = [int(j) for j in range(len(dim.elements)) if solution.cells[i, j]]
        if len(idx) != 1:
            raise ValueError(f"dimension '{dim.name}' must select exactly one element")
        selected[dim.name] = dim.elements[idx[0]]

    def opt(dim_name: str) -> Optional[str]:
        value = selected[dim_name]
        return None if value == NONE_ELEMENT else value

    return ChartSpec(
        mark=selected["mark-type"],
        x=selected["x"],
        y=opt("y"),
        color=opt("color"),
        size=opt("size"),
        group_by=opt("group-by"),
        aggregate_x=opt("x-aggregation"),
        aggregate_y=opt("y-aggregation"),
        aggregate_size=opt("size-aggregation"),
        sort=opt("sort"),
        order=opt("order"),
    )


_ALLOWED_KEYS = ("mark", "x", "y", "color", "size", "group_by", "aggregate", "sort", "order")


def validate_chart_spec(doc: Mapping, schema: DatasetSchema) -> List[str]:
    """Return every problem in a chart-spec document; empty list means valid."""
    problems: List[str] = []
    if not isinstance(doc, Mapping):
        return ["chart spec must be a JSON object"]
    for key in doc:
        if key not in _ALLOWED_KEYS:
            problems.append(f"unknown key {key!r}")
    if doc.get("mark") not in MARK_TYPES:
        problems.append(f"mark must be one of {MARK_TYPES}")
    names = set(schema.field_names)
    if "x" not in doc:
        problems.append("x channel is required")
    for key in ("x", "y", "color", "size", "group_by", "sort"):
        if key in doc and doc[key] not in names:
            problems.append(f"{key} references unknown field {doc[key]!r}")
    if "group_by" in doc and doc["group_by"] in names:
        if schema.field(doc["group_by"]).ftype != CATEGORICAL:
            problems.append("group_by must name a categorical field")
    if "size" in doc and doc["size"] in names:
        if schema.field(doc["size"]).ftype != NUMERICAL:
            problems.append("size must name a numerical field")
    aggregate = doc.get("aggregate", {})
    if not isinstance(aggregate, Mapping):
        problems.append("aggregate must be an object")
        aggregate = {}
    for channel, method in aggregate.items():
        if channel not in ("x", "y", "size"):
            problems.append(f"aggregate.{channel}: unknown channel")
            continue
        if method not in AGGREGATION_METHODS:
            problems.append(f"aggregate.{channel}: unknown method {method!r}")
        if channel != "y" and channel not in doc:
            problems.append(f"aggregate.{channel}: channel is not mapped")
    if ("order" in doc) != ("sort" in doc):
        problems.append("order must be present exactly when sort is present")
    if "order" in doc and doc["order"] not in ("ascending", "descending"):
        problems.append(f"order must be ascending or descending, got {doc['order']!r}")
    return problems


@dataclass(frozen=True, eq=False)
class TransformedTable:
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[Value, ...], ...]


def _aggregate(method: str, field: Optional[Field], values: Sequence[Value]) -> Value:
    if method == "count":
        return float(len(values))
    if field is None:
        raise TransformError(f"{method} aggregation needs a mapped field")
    if field.ftype != NUMERICAL:
        raise TransformError(f"cannot apply {method} to non-numerical field '{field.name}'")
    present = [v for v in values if v is not None]
    if not present:
        return None
    if method == "sum":
        return float(sum(present))
    if method == "average":
        return float(sum(present)) / len(present)
    if method == "min":
        return float(min(present))
    if method == "max":
        return float(max(present))
    raise TransformError(f"unknown aggregation method {method!r}")


def _sort_key(value: Value):
    return (value is None, value)


def apply_transform(table: Table, spec: ChartSpec) -> TransformedTable:
    """Group, aggregate, and sort the table as the chart spec directs.

    Grouping keys are the group-by field plus every mapped-but-unaggregated
    channel field. When aggregation is requested without a group-by field,
    records are grouped by x, which must then be categorical. count counts
    all rows of a group; the other methods skip missing values.
    """
    schema = table.schema
    names = set(schema.field_names)
    channel_fields = {"x": spec.x, "y": spec.y, "color": spec.color, "size": spec.size}
    for channel, fname in channel_fields.items():
        if fname is not None and fname not in names:
            raise TransformError(f"{channel} references unknown field {fname!r}")
    if spec.sort is not None and spec.sort not in names:
        raise TransformError(f"sort references unknown field {spec.sort!r}")

    aggregations = {
        "x": spec.aggregate_x,
        "y": spec.aggregate_y,
        "size": spec.aggregate_size,
    }
    any_aggregation = any(m is not None for m in aggregations.values())

    if not any_aggregation:
        columns = schema.field_names
        rows = list(table.rows)
    else:
        group_field = spec.group_by
        if group_field is None:
            if schema.field(spec.x).ftype != CATEGORICAL:
                raise TransformError("aggregation needs a group-by field or a categorical x")
            group_field = spec.x
        key_fields: List[str] = [group_field]
        for channel in ("x", "y", "color", "size"):
            fname = channel_fields[channel]
            if fname is not None and aggregations.get(channel) is None and fname not in key_fields:
                key_fields.append(fname)
        key_idx = [schema.field_names.index(f) for f in key_fields]

        groups: dict = {}
        for row in table.rows:
            key = tuple(row[i] for i in key_idx)
            groups.setdefault(key, []).append(row)

        agg_columns: List[Tuple[str, str, Optional[Field]]] = []
        for channel in ("x", "y", "size"):
            method = aggregations[channel]
            if method is None:
                continue
            fname = channel_fields[channel]
            field = schema.field(fname) if fname is not None else None
            label = f"{method}({fname})" if fname is not None else method
            agg_columns.append((label, method, field))

        columns = tuple(key_fields) + tuple(label for label, _, _ in agg_columns)
        rows = []
        for key, group_rows in groups.items():
            out = list(key)
            for label, method, field in agg_columns:
                if field is not None:
                    col = schema.field_names.index(field.name)
                    values: Sequence[Value] = [r[col] for r in group_rows]
                else:
                    values = group_rows
                out.append(_aggregate(method, field, values))
            rows.append(tuple(out))

    if spec.sort is not None:
        if spec.sort not in columns:
            raise TransformError(f"sort field '{spec.sort}' is not an output column")
        sort_idx = list(columns).index(spec.sort)
        reverse = spec.order == "descending"
        rows = sorted(rows, key=lambda r: _sort_key(r[sort_idx]), reverse=reverse)

    return TransformedTable(columns=tuple(columns), rows=tuple(rows))
