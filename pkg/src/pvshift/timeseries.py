"""Per-second daily power series: cleaning, resampling and window scans.

Power is in watts, time is second-of-day (UTC). A day always holds
``SECONDS_PER_DAY`` samples once cleaned.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from pvshift.errors import (
    EmptyInput,
    InputError,
    MalformedCsv,
    MissingPreviousDay,
    NonDivisorInterval,
    UnsortedInput,
    WindowTooLarge,
)

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86_400
SECONDS_PER_HOUR = 3_600
WS_PER_KWH = 3.6e6

# Missing runs at least this long are copied from the previous day.
LONG_GAP_S = SECONDS_PER_HOUR


class RawSample(NamedTuple):
    t: int
    power: float


@dataclass(eq=False)
class DaySeries:
    """One civil day of per-second power values in watts."""

    values: np.ndarray
    date: dt.date | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (SECONDS_PER_DAY,):
            raise InputError(
                f"a day series needs exactly {SECONDS_PER_DAY} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("day series contains non-finite values")
        if np.any(values < 0):
            raise InputError("day series contains negative power")
        self.values = values

    @classmethod
    def constant(cls, watts: float, date: dt.date | None = None) -> "DaySeries":
        return cls(np.full(SECONDS_PER_DAY, float(watts)), date)

    def __len__(self) -> int:
        return SECONDS_PER_DAY

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def energy_ws(self) -> float:
        return float(self.values.sum())

    def equals(self, other: "DaySeries") -> bool:
        return np.array_equal(self.values, as_values(other))


def as_values(series) -> np.ndarray:
    """Return the raw watt array of a DaySeries or array-like."""
    if isinstance(series, DaySeries):
        return series.values
    return np.asarray(series, dtype=float)


@dataclass
class GapReport:
    interpolated_runs: list[tuple[int, int]] = field(default_factory=list)
    substituted_hours: list[int] = field(default_factory=list)
    # Second ranges (end exclusive) copied from the previous day.
    substituted_runs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not (self.interpolated_runs or self.substituted_runs)

    def to_dict(self) -> dict:
        return {
            "interpolated_runs": [list(r) for r in self.interpolated_runs],
            "substituted_hours": list(self.substituted_hours),
            "substituted_runs": [list(r) for r in self.substituted_runs],
        }


def _to_arrays(raw: Iterable) -> tuple[np.ndarray, np.ndarray]:
    raw = list(raw)
    if not raw:
        raise EmptyInput("no samples")
    t = np.fromiter((int(s[0]) for s in raw), dtype=np.int64, count=len(raw))
    p = np.fromiter((float(s[1]) for s in raw), dtype=float, count=len(raw))
    return t, p


def _check_samples(t: np.ndarray, p: np.ndarray) -> None:
    if t.size == 0:
        raise EmptyInput("no samples")
    if np.any(np.diff(t) <= 0):
        raise UnsortedInput("sample times must be strictly increasing")
    if t[0] < 0 or t[-1] >= SECONDS_PER_DAY:
        raise InputError(f"sample times must lie in [0, {SECONDS_PER_DAY})")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InputError("sample power must be finite and non-negative")


def missing_runs(present: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of ``False`` in a boolean mask, as (start, end) with end exclusive."""
    missing = ~np.asarray(present, dtype=bool)
    if not missing.any():
        return []
    padded = np.concatenate(([False], missing, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def boundary_extend(raw: Sequence) -> list[RawSample]:
    """Replicate the first/last present value out to t=0 and t=86399."""
    t, p = _to_arrays(raw)
    _check_samples(t, p)
    head = [RawSample(s, float(p[0])) for s in range(0, int(t[0]))]
    tail = [RawSample(s, float(p[-1])) for s in range(int(t[-1]) + 1, SECONDS_PER_DAY)]
    body = [RawSample(int(a), float(b)) for a, b in zip(t, p)]
    return head + body + tail


def fill_gaps_arrays(
    t: np.ndarray,
    p: np.ndarray,
    prev_day: DaySeries | None = None,
    date: dt.date | None = None,
) -> tuple[DaySeries, GapReport]:
    """Array form of :func:`fill_gaps`."""
    t = np.asarray(t, dtype=np.int64)
    p = np.asarray(p, dtype=float)
    _check_samples(t, p)

    out = np.empty(SECONDS_PER_DAY, dtype=float)
    present = np.zeros(SECONDS_PER_DAY, dtype=bool)
    out[t] = p
    present[t] = True

    report = GapReport()
    short_idx = []
    hours: set[int] = set()
    for start, end in missing_runs(present):
        if end - start >= LONG_GAP_S:
            if prev_day is None:
                raise MissingPreviousDay(
                    f"missing run [{start}, {end}) of {end - start} s needs the previous day"
                )
            out[start:end] = as_values(prev_day)[start:end]
            report.substituted_runs.append((start, end))
            hours.update(range(start // SECONDS_PER_HOUR, (end - 1) // SECONDS_PER_HOUR + 1))
        else:
            short_idx.append(np.arange(start, end))
            report.interpolated_runs.append((start, end))

    if short_idx:
        idx = np.concatenate(short_idx)
        # np.interp holds the end values outside [t[0], t[-1]], which is the
        # constant boundary extension of boundary_extend().
        out[idx] = np.interp(idx, t, p)

    report.substituted_hours = sorted(hours)
    return DaySeries(out, date), report


def fill_gaps(
    raw: Sequence,
    prev_day: DaySeries | None = None,
    date: dt.date | None = None,
) -> tuple[DaySeries, GapReport]:
    """Complete a raw day record to one value per second.

    Present samples are kept as-is. Runs shorter than an hour are linearly
    interpolated between the nearest present neighbours (held constant at
    the day edges); longer runs are copied from ``prev_day`` over the same
    second range.
    """
    t, p = _to_arrays(raw)
    return fill_gaps_arrays(t, p, prev_day, date)


def downsample_hold(series, interval_s: int) -> DaySeries:
    """Sample-and-hold at the start of every ``interval_s`` block."""
    interval_s = int(interval_s)
    if interval_s <= 0 or SECONDS_PER_DAY % interval_s:
        raise NonDivisorInterval(f"{interval_s} does not divide {SECONDS_PER_DAY}")
    values = as_values(series)
    date = series.date if isinstance(series, DaySeries) else None
    if interval_s == 1:
        return DaySeries(values.copy(), date)
    held = np.repeat(values[::interval_s], interval_s)
    return DaySeries(held, date)


def _extrema_vectorized(values: np.ndarray, window: int):
    view = np.lib.stride_tricks.sliding_window_view(values, window)
    imin = view.argmin(axis=1)
    imax = view.argmax(axis=1)
    rows = np.arange(view.shape[0])
    diff = view[rows, imax] - view[rows, imin]
    return diff, imin < imax


def _extrema_deque(values: np.ndarray, window: int):
    # Monotonic deques; equal values keep the older index so argmin/argmax
    # report the first occurrence, as np.argmin/np.argmax do.
    n = values.size - window + 1
    diff = np.empty(n)
    rising = np.empty(n, dtype=bool)
    lo: deque[int] = deque()
    hi: deque[int] = deque()
    v = values.tolist()
    for i, x in enumerate(v):
        while lo and v[lo[-1]] > x:
            lo.pop()
        lo.append(i)
        while hi and v[hi[-1]] < x:
            hi.pop()
        hi.append(i)
        s = i - window + 1
        if s < 0:
            continue
        if lo[0] < s:
            lo.popleft()
        if hi[0] < s:
            hi.popleft()
        diff[s] = v[hi[0]] - v[lo[0]]
        rising[s] = lo[0] < hi[0]
    return diff, rising


def window_extrema(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """max-min and rising flag for every stride-1 window of ``values``."""
    values = np.asarray(values, dtype=float)
    if window < 1 or window > values.size:
        raise WindowTooLarge(f"window {window} does not fit {values.size} samples")
    if window * (values.size - window + 1) <= 20_000_000:
        return _extrema_vectorized(values, window)
    return _extrema_deque(values, window)


def rolling_minmax_diff(series, window_s: int) -> tuple[np.ndarray, np.ndarray]:
    """Per window start: (max - min, min-index < max-index).

    Ties resolve to the first occurrence, so a flat window reports
    ``diff == 0`` and ``rising == False``.
    """
    values = as_values(series)
    if window_s < 1 or window_s > SECONDS_PER_DAY:
        raise WindowTooLarge(f"window {window_s} s outside [1, {SECONDS_PER_DAY}]")
    return window_extrema(values, int(window_s))


def read_day_csv(path) -> list[RawSample]:
    """Read a ``t,power_w`` file; missing seconds are simply absent."""
    path = Path(path)
    samples: list[RawSample] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "power_w"]:
            raise MalformedCsv(path, 1, "expected header 't,power_w'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedCsv(path, lineno, f"expected 2 fields, got {len(row)}")
            try:
                t = int(row[0])
                p = float(row[1])
            except ValueError as exc:
                raise MalformedCsv(path, lineno, str(exc)) from None
            if not (0 <= t < SECONDS_PER_DAY) or not np.isfinite(p) or p < 0:
                raise MalformedCsv(path, lineno, "value out of range")
            samples.append(RawSample(t, p))
    return samples


def write_day_csv(series, path) -> None:
    values = as_values(series)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("t,power_w\n")
        fh.writelines(f"{t},{v!r}\n" for t, v in enumerate(values.tolist()))
