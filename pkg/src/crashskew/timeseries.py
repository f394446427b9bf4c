"""Dated series containers, CSV ingestion and the return/change-rate transforms.

All containers are immutable; every transform returns a new object.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = dt.date(2020, 1, 21)


class DataError(ValueError):
    """Raised for malformed input data (missing columns, bad dates, duplicates)."""


class DomainError(ValueError):
    """Raised when a transform is applied outside its mathematical domain."""


class AlignmentError(ValueError):
    """Raised when series share no common dates."""


def _as_dates(dates: Iterable) -> np.ndarray:
    arr = np.asarray(list(dates) if not isinstance(dates, np.ndarray) else dates)
    return arr.astype("datetime64[D]")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DatedSeries:
    """Ordered ``(date, value)`` observations.

    Dates must be strictly increasing and values finite.
    """

    dates: np.ndarray
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        dates = _as_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if dates.ndim != 1 or values.ndim != 1:
            raise DataError("dates and values must be one-dimensional")
        if len(dates) != len(values):
            raise DataError(
                f"{self.name or 'series'}: {len(dates)} dates but {len(values)} values"
            )
        if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
            bad = int(np.argmin(dates[1:] > dates[:-1])) + 1
            raise DataError(
                f"{self.name or 'series'}: dates not strictly increasing at position {bad} ({dates[bad]})"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.argmin(np.isfinite(values)))
            raise DataError(f"{self.name or 'series'}: non-finite value at position {bad}")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatedSeries):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.values, other.values)
        )

    def renamed(self, name: str) -> "DatedSeries":
        return DatedSeries(self.dates, self.values, name)

    def between(self, start=None, end=None) -> "DatedSeries":
        """Sub-series with ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return DatedSeries(self.dates[mask], self.values[mask], self.name)

    def drop_first(self, m: int) -> "DatedSeries":
        return DatedSeries(self.dates[m:], self.values[m:], self.name)

    def to_csv(self, path, date_column: str = "date", value_column: str | None = None,
               precision: int | None = None) -> None:
        value_column = value_column or self.name or "value"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([date_column, value_column])
            for d, v in zip(self.dates, self.values):
                writer.writerow([str(d), repr(float(v)) if precision is None else f"{v:.{precision}f}"])


@dataclass(frozen=True)
class LoadReport:
    path: str
    rows_read: int
    dropped: int
    dropped_rows: tuple = ()

    def __str__(self) -> str:
        return f"{self.path}: {self.rows_read} rows read, {self.dropped} dropped"


def _parse_date(text: str, row: int, path) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"{path}: row {row}: unparsable date {text!r} (expected YYYY-MM-DD)") from None


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    return header, rows


def read_csv(path, date_column: str = "date", value_column: str = "value",
             name: str | None = None) -> tuple[DatedSeries, LoadReport]:
    """Read one value column from a CSV file; also return a :class:`LoadReport`.

    Rows whose value cell is empty are dropped and counted. Row numbers in
    error messages are 1-based file lines (the header is line 1).
    """
    header, rows = _read_rows(path)
    for col in (date_column, value_column):
        if col not in header:
            raise DataError(f"{path}: missing column {col!r} (have {header})")
    di, vi = header.index(date_column), header.index(value_column)

    seen: dict[dt.date, int] = {}
    records = []
    dropped = []
    for lineno, row in enumerate(rows, start=2):
        date = _parse_date(row[di] if di < len(row) else "", lineno, path)
        if date in seen:
            raise DataError(f"{path}: row {lineno}: duplicate date {date} (first seen at row {seen[date]})")
        seen[date] = lineno
        cell = row[vi].strip() if vi < len(row) else ""
        if cell == "" or cell == ".":
            dropped.append(lineno)
            continue
        try:
            value = float(cell)
        except ValueError:
            raise DataError(f"{path}: row {lineno}: value {cell!r} is not a number") from None
        if not math.isfinite(value):
            raise DataError(f"{path}: row {lineno}: non-finite value {cell!r}")
        records.append((date, value))

    records.sort(key=lambda r: r[0])
    series = DatedSeries([r[0] for r in records], [r[1] for r in records],
                         name or value_column)
    report = LoadReport(str(path), len(rows), len(dropped), tuple(dropped))
    if dropped:
        logger.info("%s", report)
    return series, report


def load_csv(path, date_column: str = "date", value_column: str = "value",
             name: str | None = None) -> DatedSeries:
    return read_csv(path, date_column, value_column, name)[0]


def _check_min_length(series: DatedSeries, n: int, what: str) -> None:
    if len(series) < n:
        raise DomainError(f"{what} needs at least {n} observations, got {len(series)}")


def log_return(prices: DatedSeries, name: str = "r") -> DatedSeries:
    """``ln(P_t / P_{t-1})`` dated at ``t``."""
    _check_min_length(prices, 2, "log_return")
    p = prices.values
    if np.any(p <= 0):
        bad = int(np.argmax(p <= 0))
        raise DomainError(f"nonpositive price {p[bad]} on {prices.dates[bad]}")
    return DatedSeries(prices.dates[1:], np.diff(np.log(p)), name)


def _guarded_log_change(series: DatedSeries, name: str, what: str) -> DatedSeries:
    _check_min_length(series, 2, what)
    v = series.values
    if np.any(v < 0):
        bad = int(np.argmax(v < 0))
        raise DomainError(f"negative value {v[bad]} on {series.dates[bad]}")
    # one offset for the whole series, so every change uses the same formula
    shift = 1.0 if np.any(v == 0) else 0.0
    return DatedSeries(series.dates[1:], np.diff(np.log(v + shift)), name)


def log_growth(counts: DatedSeries, name: str = "rCases") -> DatedSeries:
    """Log growth rate of (daily new) case counts.

    If any count is zero the whole series is shifted by one before taking
    logs, so the all-zero stretch before the outbreak has growth 0.
    """
    return _guarded_log_change(counts, name, "log_growth")


def log_change_zero_guard(index: DatedSeries, name: str | None = None) -> DatedSeries:
    """Log change of an uncertainty index, using ``log(I + 1)`` when the index hits zero."""
    return _guarded_log_change(index, name or f"r{index.name}", "log_change_zero_guard")


def dummy(dates: Sequence, cutoff=DEFAULT_CUTOFF, name: str = "D_epid") -> DatedSeries:
    """1 on and after ``cutoff``, 0 before."""
    d = _as_dates(dates)
    return DatedSeries(d, (d >= np.datetime64(cutoff, "D")).astype(float), name)


def lag(series: DatedSeries, k: int) -> DatedSeries:
    """Value from ``k`` observations earlier, dated at the current observation."""
    if k < 1:
        raise ValueError(f"lag must be >= 1, got {k}")
    if k >= len(series):
        raise DomainError(f"lag {k} needs more than {k} observations, got {len(series)}")
    return DatedSeries(series.dates[k:], series.values[:-k], series.name)


@dataclass(frozen=True, eq=False)
class AlignedTable:
    """Columns sharing one date index. Column order is insertion order."""

    dates: np.ndarray
    columns: dict
    dropped: dict = field(default_factory=dict)

    def __post_init__(self):
        dates = _frozen(_as_dates(self.dates))
        cols = {}
        for key, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != dates.shape:
                raise DataError(f"column {key!r} has {len(col)} rows, index has {len(dates)}")
            cols[key] = _frozen(col)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"column {name!r} not in table (have {list(self.columns)})") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def series(self, name: str) -> DatedSeries:
        return DatedSeries(self.dates, self[name], name)

    def with_column(self, name: str, values) -> "AlignedTable":
        cols = dict(self.columns)
        cols[name] = values
        return AlignedTable(self.dates, cols, dict(self.dropped))

    def select(self, names: Sequence[str]) -> "AlignedTable":
        return AlignedTable(self.dates, {n: self[n] for n in names}, dict(self.dropped))

    def rows(self, mask) -> "AlignedTable":
        mask = np.asarray(mask)
        return AlignedTable(self.dates[mask], {k: v[mask] for k, v in self.columns.items()},
                            dict(self.dropped))

    def between(self, start=None, end=None) -> "AlignedTable":
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return self.rows(mask)

    def to_csv(self, path, date_column: str = "date") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([date_column, *self.columns])
            for i, d in enumerate(self.dates):
                writer.writerow([str(d), *(repr(float(c[i])) for c in self.columns.values())])


def align(series_list: Sequence[DatedSeries]) -> AlignedTable:
    """Inner join on the dates present in every series."""
    if not series_list:
        raise AlignmentError("align needs at least one series")
    names = [s.name for s in series_list]
    if len(set(names)) != len(names):
        raise AlignmentError(f"series names must be unique, got {names}")
    common = series_list[0].dates
    for s in series_list[1:]:
        common = np.intersect1d(common, s.dates, assume_unique=True)
    if len(common) == 0:
        raise AlignmentError(f"series {names} share no common dates")
    columns = {}
    dropped = {}
    for s in series_list:
        mask = np.isin(s.dates, common, assume_unique=True)
        columns[s.name] = s.values[mask]
        dropped[s.name] = int(len(s) - mask.sum())
    return AlignedTable(common, columns, dropped)


def read_table(path, date_column: str = "date", columns: Sequence[str] | None = None) -> AlignedTable:
    """Read a wide CSV (one date column, several numeric columns) as an aligned table.

    Rows with any empty cell in the requested columns are dropped.
    """
    header, rows = _read_rows(path)
    if date_column not in header:
        raise DataError(f"{path}: missing column {date_column!r} (have {header})")
    wanted = list(columns) if columns is not None else [h for h in header if h != date_column]
    for col in wanted:
        if col not in header:
            raise DataError(f"{path}: missing column {col!r} (have {header})")
    di = header.index(date_column)
    idx = [header.index(c) for c in wanted]
    dates, data, seen = [], [], {}
    for lineno, row in enumerate(rows, start=2):
        date = _parse_date(row[di], lineno, path)
        if date in seen:
            raise DataError(f"{path}: row {lineno}: duplicate date {date} (first seen at row {seen[date]})")
        seen[date] = lineno
        cells = [row[i].strip() if i < len(row) else "" for i in idx]
        if any(c == "" for c in cells):
            continue
        try:
            data.append([float(c) for c in cells])
        except ValueError:
            raise DataError(f"{path}: row {lineno}: non-numeric cell in {cells}") from None
        dates.append(date)
    order = np.argsort(np.asarray(dates, dtype="datetime64[D]"), kind="stable")
    arr = np.asarray(data, dtype=float).reshape(len(dates), len(wanted))[order]
    d = np.asarray(dates, dtype="datetime64[D]")[order]
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values present")
    return AlignedTable(d, {c: arr[:, j] for j, c in enumerate(wanted)})
