"""Daily money balance under a flat tariff with an export power cap.

Sign convention: consumption is stored as non-negative watts and only
negated here, when the net series ``production - consumption`` is formed.
Positive net watts are exported, negative ones bought.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from pvshift.errors import InputError
from pvshift.timeseries import SECONDS_PER_DAY, WS_PER_KWH, as_values


@dataclass(frozen=True)
class Tariff:
    sell_eur_per_kwh: float = 0.13
    buy_eur_per_kwh: float = 0.20
    max_sell_w: float = 6_000.0

    def __post_init__(self):
        if min(self.sell_eur_per_kwh, self.buy_eur_per_kwh, self.max_sell_w) <= 0:
            raise InputError("tariff values must be positive")

    @property
    def sell_eur_per_ws(self) -> float:
        return self.sell_eur_per_kwh / WS_PER_KWH

    @property
    def buy_eur_per_ws(self) -> float:
        return self.buy_eur_per_kwh / WS_PER_KWH

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def load(cls, path) -> "Tariff":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except TypeError as exc:
            raise InputError(f"bad tariff: {exc}") from None


@dataclass(frozen=True)
class DailyBalance:
    sales_eur: float
    purchases_eur: float

    @property
    def balance_eur(self) -> float:
        return self.sales_eur - self.purchases_eur

    def to_dict(self) -> dict:
        return {
            "sales_eur": self.sales_eur,
            "purchases_eur": self.purchases_eur,
            "balance_eur": self.balance_eur,
        }


def net_series(production, *consumption) -> np.ndarray:
    """``production - sum(consumption)`` per second, in watts."""
    net = np.array(as_values(production), dtype=float)
    for c in consumption:
        net = net - (as_values(c) if np.ndim(c) else float(c))
    if not np.all(np.isfinite(net)):
        raise InputError("net series contains non-finite values")
    return net


def exported_w(net, tariff: Tariff) -> np.ndarray:
    return np.minimum(tariff.max_sell_w, np.maximum(as_values(net), 0.0))


def imported_w(net) -> np.ndarray:
    return np.maximum(0.0, -as_values(net))


def money_per_second(net, tariff: Tariff) -> np.ndarray:
    """Contribution of each second to the daily balance, in EUR."""
    return exported_w(net, tariff) * tariff.sell_eur_per_ws - imported_w(net) * tariff.buy_eur_per_ws


def daily_sales(net, tariff: Tariff = Tariff()) -> float:
    return float(exported_w(net, tariff).sum()) / WS_PER_KWH * tariff.sell_eur_per_kwh


def daily_purchases(net, tariff: Tariff = Tariff()) -> float:
    return float(imported_w(net).sum()) / WS_PER_KWH * tariff.buy_eur_per_kwh


def daily_balance(net, tariff: Tariff = Tariff()) -> DailyBalance:
    return DailyBalance(daily_sales(net, tariff), daily_purchases(net, tariff))


def balance_from_segments(segments: Iterable[tuple[int, float]], tariff: Tariff = Tariff()) -> DailyBalance:
    """Closed form for a piecewise-constant net series.

    ``segments`` holds (duration_s, net_w) pairs; durations must add up to
    one day.
    """
    sold_ws = 0.0
    bought_ws = 0.0
    total = 0
    for duration, w in segments:
        if duration < 0:
            raise InputError("segment durations must be non-negative")
        total += duration
        sold_ws += duration * min(tariff.max_sell_w, max(w, 0.0))
        bought_ws += duration * max(0.0, -w)
    if total != SECONDS_PER_DAY:
        raise InputError(f"segments cover {total} s, expected {SECONDS_PER_DAY}")
    return DailyBalance(
        sold_ws / WS_PER_KWH * tariff.sell_eur_per_kwh,
        bought_ws / WS_PER_KWH * tariff.buy_eur_per_kwh,
    )
