"""Device power estimation from a single whole-home meter.

Given the ON/OFF switch times of each controllable device, the device
power is read off the meter as the largest weighted step found shortly
after each switch, then aggregated with a median over a week of events.
Calm (low-variance) windows can be forecast from the past week to schedule
clean test switches, and the base load is the median meter reading while
every controllable device is OFF.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from pvshift.errors import (
    InputError,
    MalformedCsv,
    NoEvents,
    NoOffSeconds,
    SearchOutOfDay,
    WindowTooLarge,
    WrongHistoryLength,
)
from pvshift.timeseries import SECONDS_PER_DAY, as_values, missing_runs, window_extrema

DEFAULT_CALM_QUANTILE = 0.10
DEFAULT_MIN_OVERLAP = 5
HISTORY_DAYS = 7


class EventKind(str, Enum):
    ON = "ON"
    OFF = "OFF"


@dataclass(frozen=True)
class EdgeConfig:
    window_s: int = 10
    on_search_s: int = 120
    off_search_s: int = 60
    weight_halving_s: float | None = None
    # True: an ON edge is a window whose minimum precedes its maximum.
    on_is_rising: bool = True

    def __post_init__(self):
        if self.window_s < 2:
            raise InputError("edge window must be at least 2 s")
        if self.on_search_s < self.window_s or self.off_search_s < self.window_s:
            raise InputError("search intervals must be at least one window long")
        if self.weight_halving_s is not None and self.weight_halving_s <= 0:
            raise InputError("weight halving length must be positive")

    @property
    def halving_s(self) -> float:
        return float(self.window_s if self.weight_halving_s is None else self.weight_halving_s)

    def search_s(self, kind: EventKind) -> int:
        return self.on_search_s if EventKind(kind) is EventKind.ON else self.off_search_s


@dataclass(frozen=True)
class SwitchEvent:
    device: str
    kind: EventKind
    t: int

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))


@dataclass(frozen=True)
class EventEstimate:
    device: str
    kind: EventKind
    t: int
    watts: float
    weighted_score: float
    window_start: int
    no_edge: bool = False


@dataclass(frozen=True)
class CalmWindow:
    start: int
    length_s: int
    std: float

    @property
    def end(self) -> int:
        return self.start + self.length_s


@dataclass(frozen=True)
class DeviceEstimate:
    device: str
    watts: float
    n_events: int
    on_median: float | None
    off_median: float | None

    @property
    def per_kind(self) -> tuple[float | None, float | None]:
        return self.on_median, self.off_median

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BaseLoadEstimate:
    watts: float
    n_samples: int


def estimate_event(load, event: SwitchEvent, cfg: EdgeConfig = EdgeConfig()) -> EventEstimate:
    """Estimate the step size caused by one switch event.

    Every ``cfg.window_s`` window starting within the search interval after
    ``event.t`` is scanned; windows whose direction disagrees with the event
    kind are ignored, and the survivor maximizing
    ``2 ** (-offset / halving) * (max - min)`` gives the estimate.
    """
    values = as_values(load)
    search = cfg.search_s(event.kind)
    if event.t < 0 or event.t + search > values.size:
        raise SearchOutOfDay(f"search [{event.t}, {event.t + search}) leaves the day")

    segment = values[event.t : event.t + search]
    diff, rising = window_extrema(segment, cfg.window_s)
    want_rising = (event.kind is EventKind.ON) == cfg.on_is_rising
    offsets = np.arange(diff.size)
    weight = np.exp2(-offsets / cfg.halving_s)
    score = np.where((rising == want_rising) & (diff > 0), weight * diff, -1.0)
    best = int(np.argmax(score))
    if score[best] <= 0:
        return EventEstimate(event.device, event.kind, event.t, 0.0, 0.0, event.t, no_edge=True)
    return EventEstimate(
        event.device,
        event.kind,
        event.t,
        float(diff[best]),
        float(score[best]),
        event.t + best,
    )


def estimate_events(load, events: Iterable[SwitchEvent], cfg: EdgeConfig = EdgeConfig()) -> list[EventEstimate]:
    """Estimate every event whose search interval fits inside the day."""
    out = []
    for ev in events:
        if ev.t + cfg.search_s(ev.kind) > SECONDS_PER_DAY:
            continue
        out.append(estimate_event(load, ev, cfg))
    return out


def window_stds(values: np.ndarray, window: int, chunk: int = 8192) -> np.ndarray:
    """Population std of every stride-1 window (two-pass, chunked)."""
    view = np.lib.stride_tricks.sliding_window_view(values, window)
    out = np.empty(view.shape[0])
    for lo in range(0, view.shape[0], chunk):
        out[lo : lo + chunk] = view[lo : lo + chunk].std(axis=1)
    return out


def calm_windows(
    load,
    window_len_s: int = 600,
    quantile: float = DEFAULT_CALM_QUANTILE,
) -> list[CalmWindow]:
    """Low-variance windows of one day, reduced to a non-overlapping set.

    Candidate windows are those whose std is at or below the ``quantile``
    of all window stds. They are accepted calmest first (earliest start on
    equal std) whenever they do not overlap an accepted one; the result is
    sorted by start.
    """
    values = as_values(load)
    if window_len_s < 1 or window_len_s > values.size:
        raise WindowTooLarge(f"calm window {window_len_s} s does not fit the day")
    if not 0.0 <= quantile <= 1.0:
        raise InputError("quantile must lie in [0, 1]")
    stds = window_stds(values, window_len_s)
    threshold = float(np.quantile(stds, quantile))
    cand = np.flatnonzero(stds <= threshold)
    order = cand[np.lexsort((cand, stds[cand]))]

    taken = np.zeros(values.size, dtype=bool)
    picked = []
    for s in order.tolist():
        e = s + window_len_s
        if taken[s] or taken[e - 1] or taken[s:e].any():
            continue
        taken[s:e] = True
        picked.append(s)
    picked.sort()
    return [CalmWindow(s, window_len_s, float(stds[s])) for s in picked]


def calm_period_length(n_devices: int) -> int:
    """Calm-period length in seconds: 3 min per device plus a 1 min buffer."""
    if n_devices < 1:
        raise InputError("need at least one device")
    return (3 * n_devices + 1) * 60


def calm_coverage(history: Sequence[Sequence[CalmWindow]]) -> np.ndarray:
    """Number of distinct days whose calm windows cover each second."""
    count = np.zeros(SECONDS_PER_DAY, dtype=np.int64)
    for day in history:
        mask = np.zeros(SECONDS_PER_DAY, dtype=bool)
        for w in day:
            mask[max(w.start, 0) : min(w.end, SECONDS_PER_DAY)] = True
        count += mask
    return count


def forecast_calm_starts(
    history: Sequence[Sequence[CalmWindow]],
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    required_len_s: int = 600,
) -> list[int]:
    """Starts of runs where calm windows from enough past days agree.

    A second counts when at least ``min_overlap`` of the seven days are calm
    there; every maximal such run of at least ``required_len_s`` seconds
    yields its start.
    """
    history = list(history)
    if len(history) != HISTORY_DAYS:
        raise WrongHistoryLength(f"need {HISTORY_DAYS} days of calm windows, got {len(history)}")
    covered = calm_coverage(history) >= min_overlap
    return [s for s, e in missing_runs(~covered) if e - s >= required_len_s]


def _median(xs: Sequence[float]) -> float:
    return float(statistics.median(xs))


def aggregate_median(events: Iterable[EventEstimate], device: str) -> DeviceEstimate:
    """Median over all usable ON and OFF estimates of one device."""
    mine = [e for e in events if e.device == device and not e.no_edge]
    if not mine:
        raise NoEvents(f"no usable events for device {device!r}")
    on = [e.watts for e in mine if e.kind is EventKind.ON]
    off = [e.watts for e in mine if e.kind is EventKind.OFF]
    return DeviceEstimate(
        device=device,
        watts=_median([e.watts for e in mine]),
        n_events=len(mine),
        on_median=_median(on) if on else None,
        off_median=_median(off) if off else None,
    )


def all_off_mask(events: Iterable[SwitchEvent], initially_on: Iterable[str] = ()) -> np.ndarray:
    """Seconds of the day where no device from the event log is ON.

    Devices start OFF unless listed in ``initially_on``.
    """
    on_since: dict[str, int] = {d: 0 for d in initially_on}
    busy = np.zeros(SECONDS_PER_DAY, dtype=bool)
    for ev in sorted(events, key=lambda e: (e.t, e.kind is EventKind.ON)):
        if ev.kind is EventKind.ON:
            on_since.setdefault(ev.device, ev.t)
        elif ev.device in on_since:
            busy[on_since.pop(ev.device) : ev.t] = True
    for start in on_since.values():
        busy[start:] = True
    return ~busy


def base_load(loads: Sequence, masks: Sequence) -> BaseLoadEstimate:
    """Median meter load over the seconds where every controllable device is OFF."""
    loads = list(loads)
    masks = list(masks)
    if len(loads) != len(masks):
        raise InputError("one mask per load day is required")
    picked = [as_values(v)[np.asarray(m, dtype=bool)] for v, m in zip(loads, masks)]
    values = np.concatenate(picked) if picked else np.empty(0)
    if values.size == 0:
        raise NoOffSeconds("no second has every controllable device OFF")
    return BaseLoadEstimate(float(np.median(values)), int(values.size))


def read_events_csv(path) -> list[SwitchEvent]:
    """Read a ``device,kind,t`` switch log."""
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["device", "kind", "t"]:
            raise MalformedCsv(path, 1, "expected header 'device,kind,t'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedCsv(path, lineno, f"expected 3 fields, got {len(row)}")
            try:
                out.append(SwitchEvent(row[0], EventKind(row[1].strip().upper()), int(row[2])))
            except ValueError as exc:
                raise MalformedCsv(path, lineno, str(exc)) from None
    return out


def write_events_csv(events: Iterable[SwitchEvent], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("device,kind,t\n")
        for ev in events:
            fh.write(f"{ev.device},{ev.kind.value},{ev.t}\n")


def estimates_to_json(estimates: Iterable[DeviceEstimate]) -> str:
    return json.dumps([e.to_dict() for e in estimates], indent=2)
