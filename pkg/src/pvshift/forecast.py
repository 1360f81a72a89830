"""PV production forecasting from the trailing week of history.

Two models live here: a least-squares normal-curve fit (kept as a
baseline, it fits real days poorly) and the clear-sky band forecast, which
averages the historical values that fall inside a per-second band.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pvshift.errors import (
    AllDaysZeroActual,
    EmptyInput,
    EmptySearchSpace,
    InputError,
    NonPositiveSigma,
    WrongHistoryLength,
)
from pvshift.timeseries import SECONDS_PER_DAY, DaySeries, as_values

HISTORY_DAYS = 7
UPPER_SD_FACTOR = 1.5

# 08:20 and 16:40 UTC
MU_LO_S = 30_000
MU_HI_S = 60_000
SIGMA_LO_S = 4_000
SIGMA_HI_S = 20_000
AMP_HALF_RANGE_W = 2_000


def gaussian_eval(amp, mu, sigma, t):
    """``amp * exp(-(t - mu)**2 / (2 sigma**2))``; ``t`` may be an array."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    t = np.asarray(t, dtype=float)
    out = amp * np.exp(-((t - mu) ** 2) / (2.0 * sigma * sigma))
    return float(out) if out.ndim == 0 else out


def gaussian_curve(amp: float, mu: float, sigma: float) -> np.ndarray:
    return gaussian_eval(amp, mu, sigma, np.arange(SECONDS_PER_DAY))


def mse(a, b) -> float:
    """Mean squared error in W^2 over the full day."""
    x = as_values(a)
    y = as_values(b)
    if x.shape != y.shape:
        raise InputError(f"shape mismatch {x.shape} vs {y.shape}")
    d = x - y
    return float(np.dot(d, d) / d.size)


@dataclass(frozen=True)
class NormalFitSearchSpace:
    amp_lo: float
    amp_hi: float
    mu_lo: float
    mu_hi: float
    sigma_lo: float
    sigma_hi: float
    amp_step: float = 50.0
    mu_step: float = 60.0
    sigma_step: float = 100.0

    def __post_init__(self):
        for lo, hi in ((self.amp_lo, self.amp_hi), (self.mu_lo, self.mu_hi), (self.sigma_lo, self.sigma_hi)):
            if lo > hi:
                raise InputError(f"search range [{lo}, {hi}] is inverted")
        if min(self.amp_step, self.mu_step, self.sigma_step) <= 0:
            raise InputError("search steps must be positive")

    @classmethod
    def default_for(cls, day) -> "NormalFitSearchSpace":
        peak = float(as_values(day).max())
        return cls(
            amp_lo=peak - AMP_HALF_RANGE_W,
            amp_hi=peak + AMP_HALF_RANGE_W,
            mu_lo=MU_LO_S,
            mu_hi=MU_HI_S,
            sigma_lo=SIGMA_LO_S,
            sigma_hi=SIGMA_HI_S,
        )

    @staticmethod
    def _axis(lo: float, hi: float, step: float) -> np.ndarray:
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)

    def grids(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid axes; non-positive amplitudes and sigmas are dropped."""
        amps = self._axis(self.amp_lo, self.amp_hi, self.amp_step)
        mus = self._axis(self.mu_lo, self.mu_hi, self.mu_step)
        sigmas = self._axis(self.sigma_lo, self.sigma_hi, self.sigma_step)
        amps = amps[amps > 0]
        sigmas = sigmas[sigmas > 0]
        if not (amps.size and mus.size and sigmas.size):
            raise EmptySearchSpace("a search axis is empty after stepping and clipping")
        return amps, mus, sigmas


@dataclass(frozen=True)
class NormalFitResult:
    amp: float
    mu: float
    sigma: float
    mse: float


def _cross_sums_fft(d: np.ndarray, mus: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """For unit-amplitude curves at each mu: (sum d*g, sum g*g)."""
    n = d.size
    lags = np.arange(-(n - 1), n, dtype=float)
    kernel = np.exp(-(lags**2) / (2.0 * sigma * sigma))
    size = 1 << int(math.ceil(math.log2(3 * n - 2)))
    conv = np.fft.irfft(np.fft.rfft(d, size) * np.fft.rfft(kernel, size), size)
    idx = mus.astype(np.int64) + (n - 1)
    s_dg = conv[idx]
    # sum over t in [0, n) of kernel(t - mu)**2 via a prefix sum over lags
    csum = np.concatenate(([0.0], np.cumsum(kernel * kernel)))
    lo = (n - 1) - mus.astype(np.int64)
    s_gg = csum[lo + n] - csum[lo]
    return s_dg, s_gg


def _cross_sums_direct(d: np.ndarray, mus: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(d.size, dtype=float)
    s_dg = np.empty(mus.size)
    s_gg = np.empty(mus.size)
    for i, mu in enumerate(mus):
        g = np.exp(-((t - mu) ** 2) / (2.0 * sigma * sigma))
        s_dg[i] = np.dot(d, g)
        s_gg[i] = np.dot(g, g)
    return s_dg, s_gg


def fit_normal(day, space: NormalFitSearchSpace | None = None) -> NormalFitResult:
    """Grid search for the normal curve closest to ``day`` in MSE.

    The squared error expands to ``sum d^2 - 2 a sum(d g) + a^2 sum(g^2)``,
    so only the two cross sums per (mu, sigma) are needed; those come from
    one FFT correlation per sigma. Exact ties go to the lexicographically
    smallest (amp, mu, sigma).
    """
    d = as_values(day)
    if space is None:
        space = NormalFitSearchSpace.default_for(d)
    amps, mus, sigmas = space.grids()
    n = d.size

    integral_mus = bool(np.all(mus == np.round(mus)) and mus.min() >= 0 and mus.max() < n)
    sums = _cross_sums_fft if integral_mus else _cross_sums_direct
    s_dg = np.empty((mus.size, sigmas.size))
    s_gg = np.empty((mus.size, sigmas.size))
    for j, sigma in enumerate(sigmas):
        s_dg[:, j], s_gg[:, j] = sums(d, mus, float(sigma))

    d2 = float(np.dot(d, d))
    a = amps[:, None, None]
    err = (d2 - 2.0 * a * s_dg[None] + a * a * s_gg[None]) / n
    i, k, j = np.unravel_index(int(np.argmin(err)), err.shape)
    amp, mu, sigma = float(amps[i]), float(mus[k]), float(sigmas[j])
    return NormalFitResult(amp, mu, sigma, mse(gaussian_curve(amp, mu, sigma), d))


@dataclass(eq=False)
class ClearSkyBand:
    a: np.ndarray
    sd: np.ndarray
    upper: np.ndarray
    lower_b: np.ndarray


def _history_matrix(history: Sequence) -> np.ndarray:
    history = list(history)
    if len(history) != HISTORY_DAYS:
        raise WrongHistoryLength(f"need {HISTORY_DAYS} history days, got {len(history)}")
    rows = [as_values(h) for h in history]
    for r in rows:
        if r.shape != (SECONDS_PER_DAY,):
            raise InputError("history series must be full days")
    return np.vstack(rows)


def _clamped_mean(h: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Masked column means clamped to the masked extremes, and the counts.

    The mean lies between the extremes mathematically; the clamp removes
    rounding so that equal values average to themselves exactly.
    """
    count = mask.sum(axis=0)
    mean = np.where(mask, h, 0.0).sum(axis=0) / np.maximum(count, 1)
    lo = np.where(mask, h, np.inf).min(axis=0)
    hi = np.where(mask, h, -np.inf).max(axis=0)
    ok = count > 0
    mean[ok] = np.clip(mean[ok], lo[ok], hi[ok])
    return mean, count


def _band_from_matrix(h: np.ndarray) -> ClearSkyBand:
    a, _ = _clamped_mean(h, np.ones(h.shape, dtype=bool))
    sd = h.std(axis=0)
    upper = a + UPPER_SD_FACTOR * sd
    # min <= a <= upper, so at least one value is below the limit
    lower_b, count = _clamped_mean(h, h <= upper)
    lower_b = np.where(count > 0, lower_b, a)
    lower_b = np.minimum(lower_b, upper)
    return ClearSkyBand(a=a, sd=sd, upper=upper, lower_b=lower_b)


def clear_sky_band(history: Sequence) -> ClearSkyBand:
    """Per-second mean, population SD, upper limit and lower limit B.

    B averages the values that do not exceed the upper limit.
    """
    return _band_from_matrix(_history_matrix(history))


def clear_sky_forecast(history: Sequence, date: dt.date | None = None) -> DaySeries:
    """Average of the history values inside ``[B, A + 1.5 SD]`` each second.

    Seconds where nothing falls inside the band use the plain mean.
    """
    h = _history_matrix(history)
    band = _band_from_matrix(h)
    mean_in, count = _clamped_mean(h, (h >= band.lower_b) & (h <= band.upper))
    forecast = np.where(count > 0, mean_in, band.a)
    return DaySeries(np.maximum(forecast, 0.0), date)


@dataclass
class BiasReport:
    per_day_bias: list[tuple[dt.date | None, float]]
    mean_bias: float
    excluded_days: list[dt.date | None] = field(default_factory=list)

    def to_dict(self) -> dict:
        def iso(d):
            return d.isoformat() if d is not None else None

        return {
            "per_day": [{"date": iso(d), "bias": b} for d, b in self.per_day_bias],
            "mean_bias": self.mean_bias,
            "excluded_days": [iso(d) for d in self.excluded_days],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def forecast_bias(pairs: Sequence[tuple]) -> BiasReport:
    """Relative energy error per day, ``(sum forecast - sum actual) / sum actual``.

    Positive values mean the forecast overestimates. Days without any
    actual production are excluded and listed.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no forecast/actual pairs")
    per_day = []
    excluded = []
    for forecast, actual in pairs:
        date = getattr(actual, "date", None) or getattr(forecast, "date", None)
        e_actual = float(as_values(actual).sum())
        if e_actual == 0:
            excluded.append(date)
            continue
        e_forecast = float(as_values(forecast).sum())
        per_day.append((date, (e_forecast - e_actual) / e_actual))
    if not per_day:
        raise AllDaysZeroActual("every day has zero actual production")
    mean_bias = sum(b for _, b in per_day) / len(per_day)
    return BiasReport(per_day, mean_bias, excluded)
