"""Writing comparison reports as JSON or CSV plot data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from pvshift.errors import InputError, IoFailure
from pvshift.harness.scenario import ComparisonReport

CSV_COLUMNS = ["date", "strategy", "sales_eur", "purchases_eur", "balance_eur", "cum_balance_eur"]


def _iso(d) -> str:
    return d.isoformat() if d is not None else ""


def report_rows(report: ComparisonReport) -> list[list]:
    cum = report.cumulative
    rows = []
    for i, date in enumerate(report.dates):
        for s in report.strategies:
            b = report.daily[s][i]
            rows.append([_iso(date), s, b.sales_eur, b.purchases_eur, b.balance_eur, cum[s][i]])
    return rows


def _write_wide(path: Path, dates, columns: dict[str, list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *columns])
        for i, d in enumerate(dates):
            w.writerow([_iso(d), *(col[i] for col in columns.values())])


def emit_report(report: ComparisonReport, fmt: str, path) -> list[Path]:
    """Write the report; returns every file written.

    CSV output is one row per (date, strategy) at ``path`` plus one
    wide-format plot-data file per view next to it: daily sales, daily
    purchases, cumulative balance, pairwise cumulative differences and,
    when present, the decision-resolution table.
    """
    path = Path(path)
    written = []
    try:
        if fmt == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
            return [path]
        if fmt != "csv":
            raise InputError(f"unknown report format {fmt!r}")

        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(report_rows(report))
        written.append(path)

        stem = path.with_suffix("")
        views = {
            "sales": {s: [b.sales_eur for b in report.daily[s]] for s in report.strategies},
            "purchases": {s: [b.purchases_eur for b in report.daily[s]] for s in report.strategies},
            "cumulative": report.cumulative,
        }
        cum_diff = {}
        for (a, b), daily in report.pairwise.items():
            acc, total = [], 0.0
            for x in daily:
                total += x
                acc.append(total)
            cum_diff[f"{a}-{b}"] = acc
        views["difference"] = cum_diff
        for name, columns in views.items():
            p = Path(f"{stem}_{name}.csv")
            _write_wide(p, report.dates, columns)
            written.append(p)

        if report.resolution:
            p = Path(f"{stem}_resolution.csv")
            with p.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["date", "interval_s", "pv_energy_used_ws", "grid_energy_ws", "utilization_vs_1s"])
                for date, day in zip(report.dates, report.resolution):
                    for k, m in day.items():
                        w.writerow([_iso(date), k, m.pv_energy_used_ws, m.grid_energy_ws, m.utilization_vs_1s])
            written.append(p)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
    return written
