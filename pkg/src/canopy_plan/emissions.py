"""Per-sector annual CO2 emissions tables: parsing, validation, splitting.

Tables carry a ``Year`` column plus one column per sector.  Three layouts
are accepted:

* tab separated (as copied from a report table),
* ``", "`` separated, where a bare comma inside a number is a thousands
  separator (``1990, 22,399,392``),
* plain CSV, where numbers containing separators must be quoted.

Lines starting with ``#`` are comments; they are collected into
``EmissionsDataset.source_note`` so fixtures can record their vintage.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ArgumentError, FormatError, ParseError, ValidationError

KNOWN_SECTORS = ("oil", "coal", "cement", "gas", "flaring")

# Header names used by Our World in Data exports, in both the grapher
# ("Annual CO₂ emissions from oil") and the co2-data ("oil_co2") flavours.
DEFAULT_COLUMN_MAP = {
    **{f"annual co2 emissions from {s}": s for s in KNOWN_SECTORS},
    **{f"{s}_co2": s for s in KNOWN_SECTORS},
    **{s: s for s in KNOWN_SECTORS},
}

_NUMBER = re.compile(r"^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?([eE][+-]?\d+)?$")


def normalize_header(name: str) -> str:
    name = name.replace("₂", "2").replace("﻿", "")
    return " ".join(name.strip().casefold().split())


def normalize_sector(label: str) -> str:
    """Canonical sector label; unknown labels pass through as ``other`` names."""
    label = " ".join(label.strip().casefold().split())
    if not label:
        raise ArgumentError("empty sector label")
    return label


@dataclass(frozen=True)
class SectorSeries:
    """Gap-free annual emissions for one sector, tonnes CO2 per year."""

    sector: str
    years: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "sector", normalize_sector(self.sector))
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.years) != len(self.values):
            raise ValidationError(f"{self.sector}: years and values differ in length")
        if not self.years:
            raise ValidationError(f"{self.sector}: series too short (no observations)")
        for prev, year in zip(self.years, self.years[1:]):
            if year == prev:
                raise ValidationError(f"{self.sector}: duplicate year {year}")
            if year != prev + 1:
                raise ValidationError(f"{self.sector}: gap or disorder between {prev} and {year}")
        for year, value in zip(self.years, self.values):
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{self.sector}: invalid value {value!r} in {year}")

    def __len__(self) -> int:
        return len(self.years)

    def __getitem__(self, year: int) -> float:
        try:
            return self.values[self.years.index(year)]
        except ValueError:
            raise KeyError(year) from None

    @property
    def first_year(self) -> int:
        return self.years[0]

    @property
    def last_year(self) -> int:
        return self.years[-1]

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.years, self.values))

    def require_modeling_length(self, minimum: int = 2) -> None:
        if len(self) < minimum:
            raise ValidationError(
                f"{self.sector}: series too short ({len(self)} < {minimum} observations)"
            )

    def slice(self, start: int, stop: int | None = None) -> "SectorSeries":
        return SectorSeries(self.sector, self.years[start:stop], self.values[start:stop])

    @classmethod
    def from_pairs(cls, sector: str, pairs: Iterable[tuple[int, float]]) -> "SectorSeries":
        pairs = sorted(pairs, key=lambda p: p[0])
        return cls(sector, tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


@dataclass(frozen=True)
class EmissionsDataset:
    series: Mapping[str, SectorSeries]
    source_note: str = ""

    def __post_init__(self):
        for key, s in self.series.items():
            if key != s.sector:
                raise ValidationError(f"dataset key {key!r} does not match sector {s.sector!r}")

    def __getitem__(self, sector: str) -> SectorSeries:
        try:
            return self.series[normalize_sector(sector)]
        except KeyError:
            raise ArgumentError(
                f"sector {sector!r} not in dataset (have {sorted(self.series)})"
            ) from None

    @property
    def sectors(self) -> list[str]:
        return list(self.series)


def parse_number(cell: str) -> float:
    """Parse a numeric cell, allowing comma thousands separators.

    Raises ``ValueError`` for anything else (blank cells included).
    """
    text = cell.strip().replace(" ", "").replace(" ", "")
    if not text or not _NUMBER.match(text):
        raise ValueError(f"not a number: {cell!r}")
    return float(text.replace(",", ""))


def _split_rows(lines: list[str]) -> list[list[str]]:
    header = lines[0]
    if "\t" in header:
        return [line.split("\t") for line in lines]
    if re.search(r",\s", header):
        return [re.split(r"\s*,\s+", line.strip()) for line in lines]
    return list(csv.reader(lines))


def parse_emissions_table(
    text: str,
    column_map: Mapping[str, str] | None = None,
    *,
    entity: str | None = None,
    min_length: int = 2,
) -> EmissionsDataset:
    """Parse a year-by-sector emissions table into an :class:`EmissionsDataset`.

    ``column_map`` maps header names (matched case- and whitespace-insensitively,
    with ``₂`` folded to ``2``) to sector labels; it defaults to
    :data:`DEFAULT_COLUMN_MAP`.  ``entity`` filters rows on an ``Entity``
    (or ``country``) column, for multi-country exports.
    """
    column_map = DEFAULT_COLUMN_MAP if column_map is None else column_map
    wanted = {normalize_header(k): normalize_sector(v) for k, v in column_map.items()}

    notes, lines = [], []
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("#"):
            notes.append(stripped.lstrip("#").strip())
        elif stripped:
            lines.append(raw.rstrip("\r\n"))
    if not lines:
        raise FormatError("missing header row")

    rows = _split_rows(lines)
    header = [normalize_header(h) for h in rows[0]]
    if "year" not in header:
        raise FormatError("header has no 'Year' column")
    year_col = header.index("year")
    entity_col = next((header.index(h) for h in ("entity", "country") if h in header), None)
    if entity is not None and entity_col is None:
        raise FormatError("entity filter given but header has no 'Entity' or 'country' column")

    columns: dict[int, str] = {}
    for idx, name in enumerate(header):
        if idx != year_col and name in wanted:
            sector = wanted[name]
            if sector in columns.values():
                raise FormatError(f"two columns map to sector {sector!r}")
            columns[idx] = sector
    if not columns:
        raise FormatError("no header column matches the column map")

    collected: dict[str, dict[int, float]] = {s: {} for s in columns.values()}
    for rownum, row in enumerate(rows[1:], start=2):
        if entity_col is not None and entity is not None:
            if entity_col >= len(row) or row[entity_col].strip() != entity:
                continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", row=rownum
            )
        try:
            year_text = row[year_col].strip()
            year = int(year_text)
        except ValueError:
            raise ParseError(f"year is not an integer: {row[year_col]!r}",
                             row=rownum, column=rows[0][year_col].strip()) from None
        for idx, sector in columns.items():
            try:
                value = parse_number(row[idx])
            except ValueError as exc:
                raise ParseError(str(exc), row=rownum, column=rows[0][idx].strip()) from None
            if year in collected[sector]:
                raise ValidationError(f"{sector}: duplicate year {year} (row {rownum})")
            collected[sector][year] = value

    series = {}
    for sector, values in collected.items():
        if len(values) < min_length:
            raise ValidationError(
                f"{sector}: series too short ({len(values)} < {min_length} observations)"
            )
        series[sector] = SectorSeries.from_pairs(sector, values.items())
    return EmissionsDataset(series, source_note="\n".join(notes))


def _format_value(value: float) -> str:
    return str(int(value)) if value.is_integer() else repr(value)


def series_to_csv(series: SectorSeries) -> str:
    """Canonical ``year,value`` CSV for one sector."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["year", "value"])
    for year, value in series.items():
        writer.writerow([year, _format_value(value)])
    return buf.getvalue()


def dataset_to_csv(dataset: EmissionsDataset) -> str:
    """Wide ``Year,<sector>...`` CSV; rows cover the union of years.

    Sectors with differing year spans cannot share one gap-free table, so
    this requires aligned series.
    """
    sectors = dataset.sectors
    spans = {dataset.series[s].years for s in sectors}
    if len(spans) > 1:
        raise ArgumentError("series cover different years; export them individually")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Year", *sectors])
    years = next(iter(spans)) if spans else ()
    for i, year in enumerate(years):
        writer.writerow([year, *(_format_value(dataset.series[s].values[i]) for s in sectors)])
    return buf.getvalue()


def split_train_test(series: SectorSeries, holdout: int = 6) -> tuple[SectorSeries, SectorSeries]:
    """Reserve the final ``holdout`` years as the test split."""
    if not isinstance(holdout, int) or holdout < 1:
        raise ArgumentError(f"holdout must be a positive integer, got {holdout!r}")
    if holdout >= len(series):
        raise ArgumentError(
            f"holdout {holdout} leaves no training data in a {len(series)}-year series"
        )
    return series.slice(0, len(series) - holdout), series.slice(len(series) - holdout)


def concat(parts: Sequence[SectorSeries]) -> SectorSeries:
    sector = parts[0].sector
    years = tuple(y for p in parts for y in p.years)
    values = tuple(v for p in parts for v in p.values)
    return SectorSeries(sector, years, values)
