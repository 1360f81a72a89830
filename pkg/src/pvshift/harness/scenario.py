"""Multi-day strategy comparisons.

Each target day is forecast from the seven days before it; every strategy
then runs against that day's actual production and is scored on
``production - household load - controllable load``. The meter series of
a scenario is the household consumption without the controllable devices.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from pvshift.devices import Fleet, default_fleet
from pvshift.disaggregation import base_load
from pvshift.economics import DailyBalance, Tariff, daily_balance
from pvshift.errors import InputError, TooFewDays
from pvshift.forecast import HISTORY_DAYS, clear_sky_forecast
from pvshift.scheduler import (
    DEFAULT_INTERVALS,
    RESOLUTION_THRESHOLD_W,
    ControllerConfig,
    ControllerMode,
    ResolutionMetrics,
    SimulationTrace,
    resolution_metrics,
    run_adaptive,
    run_bruteforce,
    run_smart,
)
from pvshift.timeseries import DaySeries, as_values

STRATEGIES = ("smart", "adaptive", "bruteforce")


@dataclass(eq=False)
class Scenario:
    # (date, production, household load) per consecutive day
    days: list[tuple[dt.date | None, DaySeries, DaySeries]]
    fleet: Fleet = field(default_factory=default_fleet)
    tariff: Tariff = Tariff()
    strategies: tuple[str, ...] = STRATEGIES
    # None: median household load of the seven history days
    base_load_w: float | None = None
    resolution_intervals: tuple[int, ...] | None = None
    resolution_threshold_w: float = RESOLUTION_THRESHOLD_W

    def __post_init__(self):
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise InputError(f"unknown strategies: {sorted(unknown)}")

    @classmethod
    def from_records(cls, records, **kwargs) -> "Scenario":
        return cls(days=[(r.date, r.production, r.load) for r in records], **kwargs)

    @classmethod
    def from_synthetic(cls, days, **kwargs) -> "Scenario":
        return cls(days=[(d.production.date, d.production, d.meter) for d in days], **kwargs)


@dataclass
class ComparisonReport:
    dates: list[dt.date | None]
    strategies: list[str]
    daily: dict[str, list[DailyBalance]]
    resolution: list[dict[int, ResolutionMetrics]] | None = None

    @property
    def cumulative(self) -> dict[str, list[float]]:
        return {s: np.cumsum([b.balance_eur for b in self.daily[s]]).tolist() for s in self.strategies}

    @property
    def pairwise(self) -> dict[tuple[str, str], list[float]]:
        """Daily ``balance(a) - balance(b)`` for each strategy pair."""
        return {
            (a, b): [x.balance_eur - y.balance_eur for x, y in zip(self.daily[a], self.daily[b])]
            for a, b in combinations(self.strategies, 2)
        }

    def mean_balance(self, strategy: str) -> float:
        vals = [b.balance_eur for b in self.daily[strategy]]
        return float(np.mean(vals)) if vals else 0.0

    def to_dict(self) -> dict:
        cum = self.cumulative
        out = {
            "dates": [d.isoformat() if d else None for d in self.dates],
            "strategies": list(self.strategies),
            "daily": {s: [b.to_dict() for b in self.daily[s]] for s in self.strategies},
            "cumulative_balance_eur": cum,
            "pairwise_difference_eur": {
                f"{a}-{b}": {"daily": d, "cumulative": np.cumsum(d).tolist()}
                for (a, b), d in self.pairwise.items()
            },
        }
        if self.resolution is not None:
            out["resolution"] = [
                {str(k): vars(m) for k, m in day.items()} for day in self.resolution
            ]
        return out


def run_strategy(
    name: str,
    forecast,
    production,
    base_w: float,
    fleet: Fleet,
    tariff: Tariff,
) -> SimulationTrace:
    if name == "smart":
        return run_smart(forecast, production, base_w, fleet, tariff)
    if name == "adaptive":
        return run_adaptive(production, base_w, fleet, ControllerConfig(ControllerMode.ADAPTIVE))
    if name == "bruteforce":
        return run_bruteforce(fleet)
    raise InputError(f"unknown strategy {name!r}")


def run_scenario(scenario: Scenario) -> ComparisonReport:
    """Forecast, control and score every day that has a full week of history."""
    days = scenario.days
    if len(days) <= HISTORY_DAYS:
        raise TooFewDays(f"need more than {HISTORY_DAYS} days, got {len(days)}")
    report = ComparisonReport(
        dates=[],
        strategies=list(scenario.strategies),
        daily={s: [] for s in scenario.strategies},
        resolution=[] if scenario.resolution_intervals else None,
    )
    for i in range(HISTORY_DAYS, len(days)):
        date, production, load = days[i]
        history = days[i - HISTORY_DAYS : i]
        forecast = clear_sky_forecast([p for _, p, _ in history], date)
        if scenario.base_load_w is not None:
            base_w = float(scenario.base_load_w)
        else:
            loads = [l for _, _, l in history]
            base_w = base_load(loads, [np.ones(len(l), dtype=bool) for l in loads]).watts
        report.dates.append(date)
        household = as_values(load)
        for name in scenario.strategies:
            trace = run_strategy(name, forecast, production, base_w, scenario.fleet, scenario.tariff)
            net = as_values(production) - household - trace.controllable_w
            report.daily[name].append(daily_balance(net, scenario.tariff))
        if report.resolution is not None:
            report.resolution.append(
                resolution_metrics(
                    production,
                    base_w,
                    scenario.fleet,
                    scenario.resolution_intervals or DEFAULT_INTERVALS,
                    scenario.resolution_threshold_w,
                )
            )
    return report


def scenario_forecasts(scenario: Scenario) -> list[DaySeries]:
    """The forecast used for every target day, in order."""
    days = scenario.days
    return [
        clear_sky_forecast([p for _, p, _ in days[i - HISTORY_DAYS : i]], days[i][0])
        for i in range(HISTORY_DAYS, len(days))
    ]
