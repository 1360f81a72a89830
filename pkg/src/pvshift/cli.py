"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from pvshift import disaggregation as dis
from pvshift.devices import Fleet, default_fleet
from pvshift.economics import Tariff
from pvshift.errors import InputError, InvariantViolation, IoFailure, NoFilesFound
from pvshift.forecast import HISTORY_DAYS, clear_sky_forecast, forecast_bias
from pvshift.harness.dataset import DayRecord, ingest_dataset, write_dataset
from pvshift.harness.report import emit_report
from pvshift.harness.scenario import STRATEGIES, Scenario, run_scenario
from pvshift.harness.synth import synthetic_corpus
from pvshift.scheduler import (
    BRUTEFORCE_STARTS,
    ControllerConfig,
    ControllerMode,
    DayPlan,
    execute_plan,
    plan_smart,
    resolution_metrics,
    run_adaptive,
    run_bruteforce,
    run_smart,
)
from pvshift.timeseries import DaySeries, fill_gaps, read_day_csv, write_day_csv

log = logging.getLogger("pvshift")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3


def _read_clean(path) -> DaySeries:
    series, _ = fill_gaps(read_day_csv(path))
    return series


def _day_files(dir_path, suffix: str) -> list[Path]:
    root = Path(dir_path)
    if not root.is_dir():
        raise NoFilesFound(f"{root} is not a directory")
    files = sorted(root.glob(f"*{suffix}.csv"))
    if not files and suffix:
        files = sorted(root.glob("*.csv"))
    if not files:
        raise NoFilesFound(f"no CSV day files in {root}")
    return files


def _date_of(path: Path) -> dt.date | None:
    try:
        return dt.date.fromisoformat(path.name[:10])
    except ValueError:
        return None


def _read_events_by_date(path) -> dict[dt.date | None, list[dis.SwitchEvent]]:
    """Switch log, optionally with a leading ``date`` column."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:1] != ["date"]:
        return {None: dis.read_events_csv(path)}
    out: dict[dt.date | None, list[dis.SwitchEvent]] = {}
    import csv

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                date = dt.date.fromisoformat(row[0])
                ev = dis.SwitchEvent(row[1], dis.EventKind(row[2].strip().upper()), int(row[3]))
            except (ValueError, IndexError) as exc:
                from pvshift.errors import MalformedCsv

                raise MalformedCsv(path, lineno, str(exc)) from None
            out.setdefault(date, []).append(ev)
    return out


def _load_days_with_events(load_dir, events_csv):
    files = _day_files(load_dir, "_load")
    events = _read_events_by_date(events_csv)
    days = []
    for f in files:
        date = _date_of(f)
        evs = events.get(date, events.get(None, []))
        days.append((date, _read_clean(f), evs))
    return days


def _emit(obj, args) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=2)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _fleet(args) -> Fleet:
    return Fleet.load(args.fleet) if args.fleet else default_fleet()


def _tariff(args) -> Tariff:
    return Tariff.load(args.tariff) if args.tariff else Tariff()


# --- subcommands -----------------------------------------------------------


def cmd_clean(args) -> int:
    prev = _read_clean(args.prev) if args.prev else None
    series, report = fill_gaps(read_day_csv(args.input), prev)
    write_day_csv(series, args.output)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_forecast(args) -> int:
    files = _day_files(args.history_dir, "_pv")
    if len(files) < HISTORY_DAYS:
        raise InputError(f"need {HISTORY_DAYS} history days, found {len(files)}")
    history = [_read_clean(f) for f in files[-HISTORY_DAYS:]]
    write_day_csv(clear_sky_forecast(history), args.output)
    return EXIT_OK


def cmd_bias(args) -> int:
    records = ingest_dataset(args.dataset_dir)
    if len(records) <= HISTORY_DAYS:
        raise InputError(f"need more than {HISTORY_DAYS} days")
    pairs = []
    for i in range(HISTORY_DAYS, len(records)):
        fc = clear_sky_forecast([r.production for r in records[i - HISTORY_DAYS : i]], records[i].date)
        pairs.append((fc, records[i].production))
    _emit(forecast_bias(pairs).to_dict(), args)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = dis.EdgeConfig(window_s=args.window_s, on_is_rising=not args.flip_direction)
    estimates = []
    for _, load, evs in _load_days_with_events(args.load_dir, args.events):
        estimates.extend(dis.estimate_events(load, evs, cfg))
    devices = sorted({e.device for e in estimates})
    out = [dis.aggregate_median(estimates, d).to_dict() for d in devices]
    _emit(out, args)
    return EXIT_OK


def cmd_baseload(args) -> int:
    days = _load_days_with_events(args.load_dir, args.events)
    est = dis.base_load([d[1] for d in days], [dis.all_off_mask(d[2]) for d in days])
    _emit({"watts": est.watts, "n_samples": est.n_samples}, args)
    return EXIT_OK


def cmd_plan(args) -> int:
    forecast = _read_clean(args.forecast)
    fleet = Fleet.load(args.fleet_json)
    tariff = Tariff.load(args.tariff_json)
    _emit(plan_smart(forecast, args.base_load_w, fleet, tariff).to_dict(), args)
    return EXIT_OK


def _trace_summary(trace, production, base_w, tariff) -> dict:
    out = trace.to_dict()
    out["balance"] = trace.balance(production, base_w, tariff).to_dict()
    return out


def cmd_simulate(args) -> int:
    fleet, tariff = _fleet(args), _tariff(args)
    mode = ControllerMode(args.mode)
    production = _read_clean(args.production) if args.production else None
    if mode is ControllerMode.BRUTEFORCE:
        trace = run_bruteforce(fleet, {**BRUTEFORCE_STARTS, **dict(args.start or [])})
        if production is None:
            production = DaySeries.constant(0.0)
    elif production is None:
        raise InputError("--production is required for smart and adaptive modes")
    elif mode is ControllerMode.ADAPTIVE:
        cfg = ControllerConfig(mode, threshold_w=args.threshold_w, decision_interval_s=args.interval)
        trace = run_adaptive(production, args.base_load_w, fleet, cfg)
    else:
        cfg = ControllerConfig(mode, sufficiency_margin_w=args.margin_w)
        if args.plan:
            plan = DayPlan.from_dict(json.loads(Path(args.plan).read_text(encoding="utf-8")))
            trace = execute_plan(plan, production, args.base_load_w, fleet, cfg)
        else:
            forecast = _read_clean(args.forecast) if args.forecast else production
            trace = run_smart(forecast, production, args.base_load_w, fleet, tariff, cfg)
    if args.trace_csv:
        trace.write_csv(args.trace_csv, production, args.base_load_w)
    summary = _trace_summary(trace, production, args.base_load_w, tariff)
    for name in trace.on:
        if trace.on_time_s(name) > fleet[name].required_s:
            raise InvariantViolation(f"{name} ran longer than its required time")
    _emit(summary, args)
    return EXIT_OK


def cmd_resolution(args) -> int:
    intervals = [int(x) for x in args.intervals.split(",")]
    fleet = _fleet(args)
    rows = []
    for path in args.production:
        res = resolution_metrics(_read_clean(path), args.base_load_w, fleet, intervals, args.threshold_w)
        for k in intervals:
            m = res[k]
            rows.append(
                {
                    "file": str(path),
                    "interval_s": k,
                    "pv_energy_used_ws": m.pv_energy_used_ws,
                    "grid_energy_ws": m.grid_energy_ws,
                    "utilization_vs_1s": m.utilization_vs_1s,
                }
            )
    if args.format == "csv":
        cols = list(rows[0]) if rows else ["file", "interval_s"]
        lines = [",".join(cols)] + [",".join(str(r[c]) for c in cols) for r in rows]
        _emit("\n".join(lines), args)
    else:
        _emit(rows, args)
    return EXIT_OK


def _scenario_from_json(path, args) -> Scenario:
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent
    fleet = Fleet.from_records(cfg["fleet"]) if "fleet" in cfg else _fleet(args)
    tariff = Tariff(**cfg["tariff"]) if "tariff" in cfg else _tariff(args)
    kwargs = dict(
        fleet=fleet,
        tariff=tariff,
        strategies=tuple(cfg.get("strategies", STRATEGIES)),
        base_load_w=cfg.get("base_load_w"),
        resolution_intervals=tuple(cfg["resolution_intervals"]) if cfg.get("resolution_intervals") else None,
    )
    if "dataset_dir" in cfg:
        return Scenario.from_records(ingest_dataset(base / cfg["dataset_dir"]), **kwargs)
    if "synthetic" in cfg:
        syn = cfg["synthetic"]
        days = synthetic_corpus(
            int(syn.get("seed", 0)),
            int(syn.get("days", 8)),
            cloudy_prob=float(syn.get("cloudy_prob", 0.35)),
            broken_prob=float(syn.get("broken_prob", 0.0)),
        )
        return Scenario.from_synthetic(days, **kwargs)
    raise InputError("scenario needs 'dataset_dir' or 'synthetic'")


def cmd_compare(args) -> int:
    report = run_scenario(_scenario_from_json(args.scenario, args))
    if args.out:
        for p in emit_report(report, args.format, args.out):
            log.info("wrote %s", p)
    else:
        print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_synth(args) -> int:
    days = synthetic_corpus(args.seed, args.days, cloudy_prob=args.cloudy_prob, broken_prob=args.broken_prob)
    records = [DayRecord(d.production.date, d.production, d.meter) for d in days]
    write_dataset(records, args.out_dir)
    print(json.dumps({"days": len(records), "dir": str(args.out_dir)}))
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _start_arg(text: str):
    name, _, sec = text.partition("=")
    if not sec:
        raise argparse.ArgumentTypeError("expected DEVICE=SECOND")
    return name, int(sec)


def _add_globals(p: argparse.ArgumentParser, defaults: bool) -> None:
    # Subcommand copies use SUPPRESS so they only override when given.
    def d(v):
        return v if defaults else argparse.SUPPRESS

    p.add_argument("--tariff", default=d(None), help="tariff JSON file")
    p.add_argument("--fleet", default=d(None), help="fleet JSON file")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pvshift", description=__doc__)
    _add_globals(p, defaults=True)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, defaults=False)
    subparsers = p.add_subparsers(dest="command", required=True)

    class _Sub:
        @staticmethod
        def add_parser(name, **kw):
            return subparsers.add_parser(name, parents=[common], **kw)

    sub = _Sub()

    s = sub.add_parser("clean", help="complete one raw day CSV")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--prev", help="cleaned previous-day CSV for long gaps")
    s.set_defaults(func=cmd_clean)

    s = sub.add_parser("forecast", help="clear-sky forecast from the last 7 day files")
    s.add_argument("history_dir")
    s.add_argument("output")
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("bias", help="rolling forecast bias over a dataset")
    s.add_argument("dataset_dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bias)

    for name, func, help_ in (
        ("estimate", cmd_estimate, "per-device power from switch logs"),
        ("baseload", cmd_baseload, "median load with all devices OFF"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("load_dir")
        s.add_argument("events")
        if name == "estimate":
            s.add_argument("out", nargs="?")
            s.add_argument("--window-s", type=int, default=10)
            s.add_argument("--flip-direction", action="store_true", help="ON edges fall instead of rise")
        else:
            s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("plan", help="smart day plan from a forecast")
    s.add_argument("forecast")
    s.add_argument("fleet_json")
    s.add_argument("tariff_json")
    s.add_argument("--base-load-w", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="run one controller over one day")
    s.add_argument("--mode", choices=[m.value for m in ControllerMode], required=True)
    s.add_argument("--production")
    s.add_argument("--forecast")
    s.add_argument("--plan", help="DayPlan JSON to execute (smart mode)")
    s.add_argument("--base-load-w", type=float, default=0.0)
    s.add_argument("--threshold-w", type=float)
    s.add_argument("--interval", type=int, default=1)
    s.add_argument("--margin-w", type=float, default=0.0)
    s.add_argument("--start", type=_start_arg, action="append", help="bruteforce start, DEVICE=SECOND")
    s.add_argument("--trace-csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("resolution", help="adaptive decision-interval comparison")
    s.add_argument("production", nargs="+")
    s.add_argument("--intervals", default="1,300,900,3600")
    s.add_argument("--threshold-w", type=float, default=4000.0)
    s.add_argument("--base-load-w", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_resolution)

    s = sub.add_parser("compare", help="multi-day strategy comparison")
    s.add_argument("scenario")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("synth", help="write a synthetic dataset directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--days", type=int, default=8)
    s.add_argument("--cloudy-prob", type=float, default=0.35)
    s.add_argument("--broken-prob", type=float, default=0.0)
    s.add_argument("--out-dir", default="synthetic")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, IoFailure, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
