"""Synthetic production and meter days with planted device truths."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pvshift.disaggregation import EventKind, SwitchEvent
from pvshift.errors import InvalidParams
from pvshift.timeseries import SECONDS_PER_DAY, DaySeries

SINE_EXPONENT = 1.2
MAX_ON_RAMP_S = 60


@dataclass(frozen=True)
class DeviceTruth:
    device: str
    power_w: float
    on_ramp_s: int = 0
    events: tuple[SwitchEvent, ...] = ()
    # "delay": nothing shows on the meter for on_ramp_s seconds, then the
    # full step; "linear": the draw ramps up linearly over on_ramp_s.
    onset: str = "delay"
    # Samples between the OFF switch and the drop showing on the meter; the
    # meter reading at the OFF second still includes the device.
    off_lag_s: int = 1


@dataclass(frozen=True)
class SynthParams:
    peak_w: float = 9_000.0
    sunrise_s: int = 7 * 3600
    sunset_s: int = 18 * 3600
    cloud_dips: tuple[tuple[int, int, float], ...] = ()
    base_load_w: float = 350.0
    noise_std_w: float = 0.0
    device_truth: tuple[DeviceTruth, ...] = ()
    seed: int = 0
    date: dt.date | None = None

    def validate(self) -> None:
        if not 0 <= self.sunrise_s < self.sunset_s <= SECONDS_PER_DAY:
            raise InvalidParams("need 0 <= sunrise < sunset <= 86400")
        if self.peak_w < 0 or self.base_load_w < 0 or self.noise_std_w < 0:
            raise InvalidParams("peak, base load and noise must be non-negative")
        for start, end, depth in self.cloud_dips:
            if not 0 <= depth <= 1:
                raise InvalidParams(f"cloud dip depth {depth} outside [0, 1]")
            if not 0 <= start <= end <= SECONDS_PER_DAY:
                raise InvalidParams(f"cloud dip [{start}, {end}) outside the day")
        for dev in self.device_truth:
            if dev.power_w <= 0:
                raise InvalidParams(f"{dev.device}: power must be positive")
            if not 0 <= dev.on_ramp_s <= MAX_ON_RAMP_S:
                raise InvalidParams(f"{dev.device}: ON ramp must lie in [0, {MAX_ON_RAMP_S}] s")
            if dev.off_lag_s < 0:
                raise InvalidParams(f"{dev.device}: OFF lag must be non-negative")
            if dev.onset not in ("delay", "linear"):
                raise InvalidParams(f"{dev.device}: unknown onset {dev.onset!r}")
            for ev in dev.events:
                if not 0 <= ev.t < SECONDS_PER_DAY:
                    raise InvalidParams(f"{dev.device}: event at {ev.t} outside the day")


@dataclass(eq=False)
class SyntheticDay:
    production: DaySeries
    meter: DaySeries
    truth: dict[str, float] = field(default_factory=dict)
    events: list[SwitchEvent] = field(default_factory=list)
    on_masks: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def all_off_mask(self) -> np.ndarray:
        mask = np.ones(SECONDS_PER_DAY, dtype=bool)
        for on in self.on_masks.values():
            mask &= ~on
        return mask


def production_curve(peak_w: float, sunrise_s: int, sunset_s: int, cloud_dips: Sequence = ()) -> np.ndarray:
    t = np.arange(SECONDS_PER_DAY, dtype=float)
    phase = np.pi * (t - sunrise_s) / (sunset_s - sunrise_s)
    shape = np.where((t >= sunrise_s) & (t <= sunset_s), np.clip(np.sin(phase), 0.0, None), 0.0)
    out = peak_w * shape**SINE_EXPONENT
    for start, end, depth in cloud_dips:
        out[start:end] *= 1.0 - depth
    return out


def device_draw(dev: DeviceTruth) -> tuple[np.ndarray, np.ndarray]:
    """Meter contribution and ON mask of one device from its event log."""
    draw = np.zeros(SECONDS_PER_DAY)
    on = np.zeros(SECONDS_PER_DAY, dtype=bool)
    on_at = None
    for ev in sorted(dev.events, key=lambda e: e.t):
        if ev.kind is EventKind.ON and on_at is None:
            on_at = ev.t
        elif ev.kind is EventKind.OFF and on_at is not None:
            _switch_on(draw, dev, on_at, min(ev.t + dev.off_lag_s, SECONDS_PER_DAY))
            on[on_at : ev.t] = True
            on_at = None
    if on_at is not None:
        _switch_on(draw, dev, on_at, SECONDS_PER_DAY)
        on[on_at:] = True
    return draw, on


def _switch_on(draw: np.ndarray, dev: DeviceTruth, t0: int, t1: int) -> None:
    ramp_end = min(t0 + dev.on_ramp_s, t1)
    if dev.onset == "linear" and dev.on_ramp_s > 0:
        k = np.arange(ramp_end - t0)
        draw[t0:ramp_end] += dev.power_w * k / dev.on_ramp_s
    draw[ramp_end:t1] += dev.power_w


def generate_synthetic_day(params: SynthParams) -> SyntheticDay:
    """Powered-sine production and a noisy meter reading with planted devices.

    Gaussian meter noise is clipped at 0 W. Output depends only on ``params``.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    production = production_curve(params.peak_w, params.sunrise_s, params.sunset_s, params.cloud_dips)

    meter = np.full(SECONDS_PER_DAY, float(params.base_load_w))
    truth = {}
    events = []
    masks = {}
    for dev in params.device_truth:
        draw, on = device_draw(dev)
        meter += draw
        truth[dev.device] = dev.power_w
        events.extend(dev.events)
        masks[dev.device] = on
    if params.noise_std_w > 0:
        meter += rng.normal(0.0, params.noise_std_w, SECONDS_PER_DAY)
    meter = np.maximum(meter, 0.0)
    events.sort(key=lambda e: (e.t, e.device))
    return SyntheticDay(
        production=DaySeries(production, params.date),
        meter=DaySeries(meter, params.date),
        truth=truth,
        events=events,
        on_masks=masks,
    )


def random_day_params(
    rng: np.random.Generator,
    date: dt.date | None = None,
    base_load_w: float = 350.0,
    noise_std_w: float = 50.0,
    peak_range: tuple[float, float] = (6_500.0, 9_500.0),
    cloudy_prob: float = 0.35,
    broken_prob: float = 0.0,
) -> SynthParams:
    """Day-to-day weather variation around a clear-sky envelope.

    Sunrise/sunset jitter by up to 15 minutes. With ``cloudy_prob`` a day
    carries one to three long dips (10 min to 3 h); with ``broken_prob`` it
    gets a spell of broken cloud, i.e. 10 to 40 short passages of 1 to 15
    minutes.
    """
    sunrise = int(7 * 3600 + rng.integers(-900, 901))
    sunset = int(18 * 3600 + rng.integers(-900, 901))
    peak = float(rng.uniform(*peak_range))
    dips = []
    if rng.random() < cloudy_prob:
        for _ in range(int(rng.integers(1, 4))):
            start = int(rng.integers(sunrise, sunset - 1800))
            length = int(rng.integers(600, 3 * 3600))
            dips.append((start, min(start + length, sunset), float(rng.uniform(0.3, 0.9))))
    if rng.random() < broken_prob:
        for _ in range(int(rng.integers(10, 41))):
            start = int(rng.integers(sunrise, sunset - 900))
            length = int(rng.integers(60, 901))
            dips.append((start, min(start + length, sunset), float(rng.uniform(0.3, 0.8))))
    return SynthParams(
        peak_w=peak,
        sunrise_s=sunrise,
        sunset_s=sunset,
        cloud_dips=tuple(dips),
        base_load_w=base_load_w,
        noise_std_w=noise_std_w,
        seed=int(rng.integers(0, 2**31 - 1)),
        date=date,
    )


def synthetic_corpus(
    seed: int,
    n_days: int,
    start: dt.date = dt.date(2023, 1, 1),
    **kwargs,
) -> list[SyntheticDay]:
    """``n_days`` consecutive synthetic days without controllable devices."""
    rng = np.random.default_rng(seed)
    return [
        generate_synthetic_day(random_day_params(rng, start + dt.timedelta(days=i), **kwargs))
        for i in range(n_days)
    ]
