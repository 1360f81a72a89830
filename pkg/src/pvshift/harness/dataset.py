"""Per-day CSV dataset directories (``YYYY-MM-DD_pv.csv`` / ``YYYY-MM-DD_load.csv``)."""

from __future__ import annotations

import datetime as dt
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from pvshift.errors import NoFilesFound
from pvshift.timeseries import DaySeries, GapReport, fill_gaps, read_day_csv, write_day_csv

logger = logging.getLogger(__name__)

_NAME = re.compile(r"^(\d{4}-\d{2}-\d{2})_(pv|load)\.csv$")


@dataclass(eq=False)
class DayRecord:
    date: dt.date
    production: DaySeries
    load: DaySeries
    pv_report: GapReport | None = None
    load_report: GapReport | None = None


def scan_dataset(dir_path) -> dict[dt.date, dict[str, Path]]:
    root = Path(dir_path)
    if not root.is_dir():
        raise NoFilesFound(f"{root} is not a directory")
    found: dict[dt.date, dict[str, Path]] = {}
    for path in root.iterdir():
        m = _NAME.match(path.name)
        if not m:
            continue
        date = dt.date.fromisoformat(m.group(1))
        found.setdefault(date, {})[m.group(2)] = path
    if not found:
        raise NoFilesFound(f"no YYYY-MM-DD_pv.csv / _load.csv files in {root}")
    return found


def ingest_dataset(dir_path) -> list[DayRecord]:
    """Read, clean and pair every complete day in a dataset directory.

    Long gaps are filled from the previous calendar day's cleaned series
    when that day is present. Days lacking either file are skipped with a
    warning.
    """
    found = scan_dataset(dir_path)
    records: list[DayRecord] = []
    prev: DayRecord | None = None
    for date in sorted(found):
        files = found[date]
        missing = {"pv", "load"} - files.keys()
        if missing:
            logger.warning("%s: skipping day, no %s file", date, "/".join(sorted(missing)))
            continue
        yesterday = prev if prev is not None and prev.date == date - dt.timedelta(days=1) else None
        pv, pv_rep = fill_gaps(read_day_csv(files["pv"]), yesterday.production if yesterday else None, date)
        load, load_rep = fill_gaps(read_day_csv(files["load"]), yesterday.load if yesterday else None, date)
        prev = DayRecord(date, pv, load, pv_rep, load_rep)
        records.append(prev)
    return records


def write_dataset(records: Iterable[DayRecord], dir_path) -> None:
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    for rec in records:
        write_day_csv(rec.production, root / f"{rec.date.isoformat()}_pv.csv")
        write_day_csv(rec.load, root / f"{rec.date.isoformat()}_load.csv")
