"""Long-format ingestion and validation into a dense, balanced cell array."""

from __future__ import annotations

import csv
import itertools
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

from .design import DesignSpec
from .errors import (
    DataError,
    DuplicateObservation,
    EmptyTable,
    MissingColumn,
    MissingLabel,
    NestedCountMismatch,
    NonNumericResponse,
    Unbalanced,
)

__all__ = ["RawTable", "FacetLevels", "Dataset", "load_table", "validate_and_index", "label_sort_key"]


def label_sort_key(label: Any):
    """Numbers in numeric order first, then everything else as text."""
    text = str(label).strip()
    try:
        value = float(text)
    except ValueError:
        return (1, 0.0, text)
    if math.isnan(value):
        return (1, 0.0, text)
    return (0, value, text)


def match_column(wanted: str, available: Iterable[str]) -> str:
    """Exact name first, then a case-insensitive match."""
    available = list(available)
    if wanted in available:
        return wanted
    key = wanted.strip().casefold()
    for name in available:
        if name.strip().casefold() == key:
            return name
    raise MissingColumn(wanted, available)


@dataclass(frozen=True)
class RawTable:
    """Columns of an input table, keyed by header name.

    Facet columns hold labels as read; the response column holds floats.
    """

    columns: dict[str, list]
    response: str

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.response])

    def __len__(self) -> int:
        return self.n_rows


def _parse_response(value, row: int, column: str) -> float:
    if value is None:
        raise NonNumericResponse(row, value, column)
    try:
        number = float(value.strip() if isinstance(value, str) else value)
    except (TypeError, ValueError):
        raise NonNumericResponse(row, value, column) from None
    if not math.isfinite(number):
        raise NonNumericResponse(row, value, column)
    return number


def load_table(path_or_rows, response_column: str) -> RawTable:
    """Read a comma-delimited file with a header row, or in-memory rows.

    ``path_or_rows`` may be a path, a sequence of mappings (one per row) or
    anything with a pandas-style ``to_dict("records")``.  Row numbers in
    error messages count data rows from 1.
    """
    if isinstance(path_or_rows, (str, os.PathLike)):
        with open(path_or_rows, newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise EmptyTable(f"{os.fspath(path_or_rows)}: no header row")
            header = [h.strip() for h in header]
            records = []
            for lineno, fields in enumerate(reader, start=1):
                if not fields or all(not f.strip() for f in fields):
                    continue
                if len(fields) != len(header):
                    raise DataError(
                        f"row {lineno}: {len(fields)} fields, header has {len(header)}"
                    )
                records.append(fields)
    else:
        rows = path_or_rows
        if hasattr(rows, "to_dict"):
            rows = rows.to_dict("records")
        rows = list(rows)
        header = list(rows[0].keys()) if rows else []
        records = []
        for lineno, row in enumerate(rows, start=1):
            if set(row.keys()) != set(header):
                raise DataError(f"row {lineno}: columns differ from the first row")
            records.append([row[h] for h in header])

    if not records:
        raise EmptyTable("table has no data rows")
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")

    response = match_column(response_column, header)
    columns: dict[str, list] = {h: [] for h in header}
    for fields in records:
        for h, v in zip(header, fields):
            columns[h].append(v)
    columns[response] = [
        _parse_response(v, row, response) for row, v in enumerate(columns[response], start=1)
    ]
    return RawTable(columns, response)


@dataclass(frozen=True)
class FacetLevels:
    """Level counts and labels per facet.

    ``labels[facet]`` maps a parent key (the dense indices of the facet's
    nesting ancestors, in design order; ``()`` for unnested facets) to the
    ordered labels under that parent.  For a nested facet ``counts`` is the
    per-parent count.
    """

    counts: dict[str, int]
    labels: dict[str, dict[tuple, tuple]]

    def __getitem__(self, facet: str) -> int:
        return self.counts[facet]

    def __iter__(self):
        return iter(self.counts)

    def items(self):
        return self.counts.items()


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated observations: one response per full index combination.

    ``cells`` has one axis per facet in design order.  A nested facet's axis
    runs over its per-parent index, so the pair (parent index, own index)
    identifies a level.
    """

    design: DesignSpec
    levels: FacetLevels
    cells: np.ndarray
    label_maps: dict[str, dict[tuple, dict[Any, int]]]
    response: str = "response"

    @property
    def n_obs(self) -> int:
        return int(self.cells.size)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.cells.shape)

    def axis(self, facet: str) -> int:
        return self.design.position(facet)

    def label(self, facet: str, parent_key: tuple, index: int):
        return self.levels.labels[facet][parent_key][index]

    @classmethod
    def from_array(cls, design: DesignSpec, cells, response: str = "response") -> "Dataset":
        """Wrap a dense array, labelling levels 1..n (per parent for nested facets)."""
        cells = np.array(cells, dtype=float)
        if cells.ndim != len(design.facets):
            raise DataError(f"array has {cells.ndim} axes, design has {len(design.facets)} facets")
        if not np.all(np.isfinite(cells)):
            raise Unbalanced("array contains missing or non-finite responses")
        counts = dict(zip(design.names, cells.shape))
        labels, maps = {}, {}
        for name in design.names:
            anc = design.sort(design.ancestors(name))
            labs = tuple(range(1, counts[name] + 1))
            parents = _product(counts[a] for a in anc)
            labels[name] = {key: labs for key in parents}
            maps[name] = {key: {lab: i for i, lab in enumerate(labs)} for key in parents}
        cells.setflags(write=False)
        return cls(design, FacetLevels(counts, labels), cells, maps, response)

    def to_rows(self) -> list[dict]:
        """Long-format rows (facet labels plus response), in cell order."""
        names = self.design.names
        anc = {n: [self.axis(a) for a in self.design.sort(self.design.ancestors(n))] for n in names}
        rows = []
        for idx in np.ndindex(*self.cells.shape):
            row = {}
            for axis, name in enumerate(names):
                key = tuple(idx[a] for a in anc[name])
                row[name] = self.label(name, key, idx[axis])
            row[self.response] = float(self.cells[idx])
            rows.append(row)
        return rows


def _product(ranges) -> list[tuple]:
    return list(itertools.product(*(range(n) for n in ranges)))


def validate_and_index(raw: RawTable, design: DesignSpec, response: str | None = None) -> Dataset:
    """Check balance and build the dense cell array.

    Nested facet labels may be unique within each parent or globally unique;
    either way they are re-indexed 0..n-1 within each parent, and every
    parent must hold the same number of levels.
    """
    response = match_column(response or raw.response, raw.column_names)
    values = np.asarray(raw.columns[response], dtype=float)
    n = values.size
    if n == 0:
        raise EmptyTable("table has no data rows")
    columns = {}
    for name in design.names:
        candidates = [c for c in raw.column_names if c != response]
        columns[name] = match_column(name, candidates)

    # ancestors have strictly shorter nesting chains, so they are indexed first
    order = sorted(design.names, key=lambda f: len(design.ancestors(f)))
    index: dict[str, np.ndarray] = {}
    labels: dict[str, dict[tuple, tuple]] = {}
    maps: dict[str, dict[tuple, dict]] = {}
    counts: dict[str, int] = {}
    for name in order:
        col = raw.columns[columns[name]]
        anc = design.sort(design.ancestors(name))
        groups: dict[tuple, set] = defaultdict(set)
        keys = []
        for row, lab in enumerate(col):
            if lab is None or (isinstance(lab, str) and not lab.strip()):
                raise MissingLabel(row + 1, columns[name])
            if isinstance(lab, float) and math.isnan(lab):
                raise MissingLabel(row + 1, columns[name])
            key = tuple(int(index[a][row]) for a in anc)
            groups[key].add(lab)
            keys.append(key)
        per_parent = {key: len(labs) for key, labs in groups.items()}
        if len(set(per_parent.values())) > 1:
            readable = {
                _parent_text(design, labels, anc, key): c for key, c in sorted(per_parent.items())
            }
            raise NestedCountMismatch(name, readable)
        labels[name] = {
            key: tuple(sorted(labs, key=label_sort_key)) for key, labs in sorted(groups.items())
        }
        maps[name] = {key: {lab: i for i, lab in enumerate(labs)} for key, labs in labels[name].items()}
        index[name] = np.fromiter(
            (maps[name][key][lab] for key, lab in zip(keys, col)), dtype=np.int64, count=n
        )
        counts[name] = next(iter(per_parent.values()))

    shape = tuple(counts[name] for name in design.names)
    flat = np.ravel_multi_index(tuple(index[name] for name in design.names), shape)
    tally = np.bincount(flat, minlength=int(np.prod(shape)))

    def describe(flat_index):
        idx = np.unravel_index(flat_index, shape)
        parts = []
        for axis, name in enumerate(design.names):
            anc = design.sort(design.ancestors(name))
            key = tuple(int(idx[design.position(a)]) for a in anc)
            labs = labels[name].get(key)
            lab = labs[idx[axis]] if labs is not None else f"#{idx[axis] + 1}"
            parts.append((name, lab))
        return dict(parts)

    dup = np.flatnonzero(tally > 1)
    if dup.size:
        combo = describe(int(dup[0]))
        raise DuplicateObservation(
            f"{int(tally[dup[0]])} observations for {_combo_text(combo)}; expected exactly one",
            combo,
        )
    missing = np.flatnonzero(tally == 0)
    if missing.size:
        combo = describe(int(missing[0]))
        raise Unbalanced(
            f"no observation for {_combo_text(combo)} ({missing.size} empty cell(s)); "
            "the design must be balanced and complete",
            combo,
        )

    cells = np.empty(int(np.prod(shape)), dtype=float)
    cells[flat] = values
    cells = cells.reshape(shape)
    cells.setflags(write=False)
    return Dataset(design, FacetLevels(counts, labels), cells, maps, response)


def _combo_text(combo: Mapping) -> str:
    return ", ".join(f"{k}={v}" for k, v in combo.items())


def _parent_text(design, labels, anc, key) -> str:
    if not anc:
        return "all"
    # the parent key's own labels are resolved through their ancestors in turn
    parts = []
    for pos, a in enumerate(anc):
        a_anc = design.sort(design.ancestors(a))
        a_key = tuple(key[anc.index(x)] for x in a_anc)
        parts.append(f"{a}={labels[a][a_key][key[pos]]}")
    return "/".join(parts)
