"""Loading monthly series from CSV files and the BCB SGS open-data API.

Canonical on-disk format: UTF-8 CSV with header ``date,value``, dates as
``YYYY-MM`` and values with a ``.`` decimal separator.
"""

from __future__ import annotations

import calendar
import csv
import datetime as dt
import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import (
    CacheCorrupt,
    DataError,
    DuplicateMonth,
    EmptySeries,
    GapInCalendar,
    IoError,
    NetworkError,
    ParseError,
    SchemaError,
)
from .series import MonthStamp, TimeSeries

log = logging.getLogger(__name__)

SGS_BASE_URL = "https://api.bcb.gov.br"

_DATE_PATTERNS = (
    (re.compile(r"^(\d{4})-(\d{1,2})$"), ("y", "m")),
    (re.compile(r"^(\d{4})-(\d{1,2})-(\d{1,2})$"), ("y", "m", "d")),
    (re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$"), ("d", "m", "y")),
    (re.compile(r"^(\d{1,2})/(\d{4})$"), ("m", "y")),
)


@dataclass(frozen=True)
class ColumnSpec:
    date_column: int | str = 0
    value_column: int | str = 1
    delimiter: str = ","
    decimal: str = "."
    thousands: str | None = None
    has_header: bool | None = None  # None: detect


@dataclass(frozen=True)
class SourceConfig:
    kind: str = "csv"  # "csv" or "sgs"
    path: str | None = None
    series_code: int | None = None
    base_url: str = SGS_BASE_URL
    cache_dir: Path = field(default_factory=lambda: Path(".sgs-cache"))
    date_range: tuple[MonthStamp, MonthStamp] | None = None

    def __post_init__(self):
        if self.kind == "csv" and not self.path:
            raise DataError("csv source needs a path")
        if self.kind == "sgs" and (self.series_code is None or int(self.series_code) <= 0):
            raise DataError("sgs source needs a positive series code")
        if self.kind not in ("csv", "sgs"):
            raise DataError(f"unknown source kind {self.kind!r}")


def parse_date(text: str) -> tuple[MonthStamp, int]:
    """Parse a date string into its month and day-of-month (1 when absent)."""
    t = text.strip()
    for pat, fields in _DATE_PATTERNS:
        m = pat.match(t)
        if m:
            parts = dict(zip(fields, (int(g) for g in m.groups())))
            month = MonthStamp(parts["y"], parts["m"])
            day = parts.get("d", 1)
            if not 1 <= day <= calendar.monthrange(month.year, month.month)[1]:
                raise DataError(f"invalid day in {text!r}")
            return month, day
    raise DataError(f"unrecognised date {text!r}")


def parse_number(text: str, decimal: str = ".", thousands: str | None = None) -> float:
    t = text.strip().replace(" ", "").replace("\u00a0", "")
    if thousands:
        t = t.replace(thousands, "")
    if decimal != ".":
        t = t.replace(decimal, ".")
    return float(t)


def _assemble(rows: list[tuple[MonthStamp, float, int]]) -> TimeSeries:
    """Sort (month, value, row) triples and enforce one value per calendar month."""
    if not rows:
        raise EmptySeries("no observations")
    rows = sorted(rows, key=lambda r: (r[0], r[2]))
    for (a, _, _), (b, _, _) in zip(rows, rows[1:]):
        if a == b:
            raise DuplicateMonth(str(b))
        if a.successor() != b:
            raise GapInCalendar(str(a.successor()))
    return TimeSeries(rows[0][0], [r[1] for r in rows])


def _column_index(header: list[str] | None, col: int | str) -> int:
    if isinstance(col, int):
        return col
    if header is None or col not in header:
        raise ParseError(f"column {col!r} not found in header", row=1)
    return header.index(col)


def read_csv_text(text: str, spec: ColumnSpec = ColumnSpec()) -> TimeSeries:
    reader = csv.reader(io.StringIO(text), delimiter=spec.delimiter)
    raw = [(i, row) for i, row in enumerate(reader, start=1) if row and any(c.strip() for c in row)]
    if not raw:
        raise EmptySeries("CSV file has no rows")
    header = None
    has_header = spec.has_header
    if has_header is None:
        first = raw[0][1]
        try:
            parse_date(first[_column_index(None, spec.date_column) if isinstance(spec.date_column, int) else 0])
            has_header = False
        except (DataError, IndexError):
            has_header = True
    if has_header:
        header = [h.strip() for h in raw[0][1]]
        raw = raw[1:]
    di = _column_index(header, spec.date_column)
    vi = _column_index(header, spec.value_column)
    rows = []
    for lineno, row in raw:
        try:
            month, _ = parse_date(row[di])
        except (DataError, IndexError) as exc:
            raise ParseError(f"bad date: {exc}", row=lineno) from None
        try:
            value = parse_number(row[vi], spec.decimal, spec.thousands)
        except (ValueError, IndexError):
            raise ParseError(f"non-numeric value {row[vi] if vi < len(row) else ''!r}", row=lineno) from None
        rows.append((month, value, lineno))
    return _assemble(rows)


def load_csv(path, spec: ColumnSpec = ColumnSpec()) -> TimeSeries:
    """Read a monthly series, rejecting duplicates, gaps and unparsable rows."""
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    return read_csv_text(text, spec)


def to_csv_text(series: TimeSeries) -> str:
    lines = ["date,value"] + [f"{m},{v!r}" for m, v in series]
    return "\n".join(lines) + "\n"


def write_csv(series: TimeSeries, path) -> None:
    Path(path).write_text(to_csv_text(series), encoding="utf-8")


# ---------------------------------------------------------------------------
# SGS
# ---------------------------------------------------------------------------

def _ddmmyyyy(month: MonthStamp, last_day: bool) -> str:
    day = calendar.monthrange(month.year, month.month)[1] if last_day else 1
    return f"{day:02d}/{month.month:02d}/{month.year:04d}"


def sgs_url(config: SourceConfig) -> str:
    url = f"{config.base_url.rstrip('/')}/dados/serie/bcdata.sgs.{int(config.series_code)}/dados?formato=json"
    if config.date_range is not None:
        start, end = config.date_range
        url += f"&dataInicial={_ddmmyyyy(start, False)}&dataFinal={_ddmmyyyy(end, True)}"
    return url


def cache_paths(config: SourceConfig) -> tuple[Path, Path]:
    key = "all" if config.date_range is None else f"{config.date_range[0]}-{config.date_range[1]}"
    base = Path(config.cache_dir) / f"sgs-{int(config.series_code)}"
    return base / f"{key}.csv", base / f"{key}.meta.json"


def parse_sgs_value(text: str) -> float:
    """SGS values may use a decimal comma (``"1.234,56"``) or a plain dot."""
    t = str(text).strip()
    if "," in t:
        return parse_number(t, decimal=",", thousands=".")
    return float(t)


def sgs_records_to_series(records, date_range=None) -> tuple[TimeSeries, bool]:
    """Convert SGS JSON records to a monthly series.

    Daily data is reduced to the last observation in each month (currency in
    circulation is a stock). Returns the series and whether aggregation
    happened.
    """
    if not isinstance(records, list):
        raise SchemaError("SGS response is not a JSON array")
    if not records:
        raise EmptySeries("SGS returned no records")
    by_month: dict[MonthStamp, tuple[int, float, int]] = {}
    aggregated = False
    for i, rec in enumerate(records, start=1):
        if not isinstance(rec, dict) or "data" not in rec or "valor" not in rec:
            raise SchemaError(f"record {i} lacks 'data'/'valor'")
        try:
            month, day = parse_date(rec["data"])
            value = parse_sgs_value(rec["valor"])
        except (DataError, ValueError) as exc:
            raise SchemaError(f"record {i}: {exc}") from None
        if date_range is not None and not (date_range[0] <= month <= date_range[1]):
            continue
        prev = by_month.get(month)
        if prev is not None:
            aggregated = True
            if prev[0] == day:
                raise DuplicateMonth(f"{month} (day {day} repeated)")
            if prev[0] > day:
                continue
        by_month[month] = (day, value, i)
    if not by_month:
        raise EmptySeries("no SGS records inside the requested range")
    return _assemble([(m, v, i) for m, (_, v, i) in by_month.items()]), aggregated


def _http_get_json(url: str, timeout: float):
    try:
        resp = requests.get(url, timeout=timeout, headers={"Accept": "application/json"})
    except requests.RequestException as exc:
        raise NetworkError(f"request to {url} failed: {exc}") from None
    if resp.status_code != 200:
        raise NetworkError(f"GET {url} returned HTTP {resp.status_code}", status=resp.status_code)
    try:
        return resp.json()
    except ValueError:
        raise SchemaError("SGS response is not valid JSON") from None


def _read_cache(csv_path: Path) -> TimeSeries:
    try:
        return load_csv(csv_path, ColumnSpec(has_header=True))
    except DataError as exc:
        raise CacheCorrupt(f"cache file {csv_path} is unusable: {exc}") from None


def fetch_sgs(config: SourceConfig, refresh: bool = False, timeout: float = 30.0) -> TimeSeries:
    """Fetch an SGS series, serving from the local cache when possible.

    A cache hit makes no network call. With ``refresh`` the API is queried
    first and the cache is only used as a fallback when the request fails.
    """
    csv_path, meta_path = cache_paths(config)
    if not refresh and csv_path.exists():
        try:
            return _read_cache(csv_path)
        except CacheCorrupt as exc:
            log.warning("%s; refetching", exc)
    url = sgs_url(config)
    try:
        records = _http_get_json(url, timeout)
    except NetworkError as exc:
        if csv_path.exists():
            try:
                series = _read_cache(csv_path)
            except CacheCorrupt:
                raise exc from None
            log.warning("%s; serving cached copy from %s", exc, csv_path)
            return series
        raise
    series, aggregated = sgs_records_to_series(records, config.date_range)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(series, csv_path)
    meta = {
        "series_code": int(config.series_code),
        "url": url,
        "fetch_date": dt.date.today().isoformat(),
        "start": str(series.start),
        "end": str(series.end),
        "n_records": len(records),
        "aggregated_daily": aggregated,
    }
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return series


def load_source(config: SourceConfig, spec: ColumnSpec = ColumnSpec(), refresh: bool = False) -> TimeSeries:
    if config.kind == "csv":
        series = load_csv(config.path, spec)
        if config.date_range is not None:
            series = series.window(*config.date_range)
        return series
    return fetch_sgs(config, refresh=refresh)
