"""Device planning and per-second controllers.

Three strategies are provided:

* smart: fit each device's load rectangle into the forecast production
  envelope so the day's money balance is maximal, then follow the plan
  second by second, pausing and resuming devices when live production
  cannot carry them;
* adaptive: no forecast, switch devices on residual production crossing a
  per-device threshold, observed every ``decision_interval_s`` seconds;
* bruteforce: fixed clock-time starts, blind to production.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from pvshift.devices import DeviceProfile, DeviceRuntimeState, DeviceState, Fleet
from pvshift.disaggregation import EventKind, SwitchEvent
from pvshift.economics import DailyBalance, Tariff, daily_balance, money_per_second
from pvshift.errors import BaselineMissing, InputError, StartOverflowsDay
from pvshift.timeseries import SECONDS_PER_DAY, as_values, downsample_hold, missing_runs

PLAN_STRIDE_S = 60
# Candidate starts whose gain is within this of the best count as ties.
PLAN_TIE_EUR = 1e-10
RESOLUTION_THRESHOLD_W = 4_000.0
DEFAULT_INTERVALS = (1, 300, 900, 3600)

# pool pump 12:00, hot water 19:00, car 18:00
BRUTEFORCE_STARTS = {"pool_pump": 43_200, "hot_water": 68_400, "car": 64_800}


class ControllerMode(str, Enum):
    SMART = "smart"
    ADAPTIVE = "adaptive"
    BRUTEFORCE = "bruteforce"


@dataclass(frozen=True)
class ControllerConfig:
    mode: ControllerMode = ControllerMode.SMART
    # None: each device's threshold is its own power.
    threshold_w: float | None = None
    decision_interval_s: int = 1
    sufficiency_margin_w: float = 0.0
    min_dwell_s: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", ControllerMode(self.mode))
        if self.decision_interval_s <= 0 or SECONDS_PER_DAY % self.decision_interval_s:
            raise InputError(f"decision interval {self.decision_interval_s} s must divide a day")
        if self.min_dwell_s < 0:
            raise InputError("dwell time must be non-negative")

    def threshold_for(self, device: DeviceProfile) -> float:
        return device.power_w if self.threshold_w is None else float(self.threshold_w)


@dataclass(frozen=True)
class ScheduledBlock:
    device: str
    start: int
    end: int
    power_w: float

    def __post_init__(self):
        if not 0 <= self.start < self.end <= SECONDS_PER_DAY:
            raise InputError(f"bad block [{self.start}, {self.end})")

    @property
    def duration_s(self) -> int:
        return self.end - self.start


@dataclass
class DayPlan:
    blocks: list[ScheduledBlock] = field(default_factory=list)

    def blocks_for(self, device: str) -> list[ScheduledBlock]:
        return sorted((b for b in self.blocks if b.device == device), key=lambda b: b.start)

    def load_w(self) -> np.ndarray:
        load = np.zeros(SECONDS_PER_DAY)
        for b in self.blocks:
            load[b.start : b.end] += b.power_w
        return load

    def to_dict(self) -> dict:
        return {"blocks": [asdict(b) for b in self.blocks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "DayPlan":
        return cls([ScheduledBlock(**b) for b in data["blocks"]])


@dataclass(eq=False)
class SimulationTrace:
    """Realized per-second device states of one simulated day."""

    on: dict[str, np.ndarray]
    power_w: dict[str, float]
    events: list[SwitchEvent] = field(default_factory=list)
    plan: DayPlan | None = None

    @classmethod
    def empty(cls, fleet: Fleet) -> "SimulationTrace":
        return cls(
            on={d.name: np.zeros(SECONDS_PER_DAY, dtype=bool) for d in fleet},
            power_w={d.name: d.power_w for d in fleet},
        )

    @property
    def controllable_w(self) -> np.ndarray:
        load = np.zeros(SECONDS_PER_DAY)
        for name, on in self.on.items():
            load += on * self.power_w[name]
        return load

    def on_time_s(self, device: str) -> int:
        return int(self.on[device].sum())

    def intervals(self, device: str) -> list[tuple[int, int]]:
        return missing_runs(~self.on[device])

    def blocks(self) -> list[ScheduledBlock]:
        out = [
            ScheduledBlock(name, s, e, self.power_w[name])
            for name in self.on
            for s, e in self.intervals(name)
        ]
        return sorted(out, key=lambda b: (b.device, b.start))

    def balance(self, production, base_load, tariff: Tariff = Tariff()) -> DailyBalance:
        return daily_balance(as_values(production) - base_load - self.controllable_w, tariff)

    def to_dict(self) -> dict:
        return {
            "devices": {
                name: {"power_w": self.power_w[name], "on_intervals": [list(r) for r in self.intervals(name)]}
                for name in self.on
            },
            "events": [{"device": e.device, "kind": e.kind.value, "t": e.t} for e in self.events],
            "plan": self.plan.to_dict() if self.plan is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_csv(self, path, production, base_load) -> None:
        prod = as_values(production)
        base = np.broadcast_to(np.asarray(base_load, dtype=float), prod.shape)
        ctrl = self.controllable_w
        net = prod - base - ctrl
        cols = zip(prod.tolist(), ctrl.tolist(), base.tolist(), net.tolist())
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            fh.write("t,production_w,controllable_w,base_w,net_w\n")
            for t, (p, c, b, n) in enumerate(cols):
                fh.write(f"{t},{p!r},{c!r},{b!r},{n!r}\n")


# ---------------------------------------------------------------------------
# smart planning
# ---------------------------------------------------------------------------


def placement_order(fleet: Fleet) -> list[DeviceProfile]:
    """Longest rectangle first; equal lengths by priority."""
    return sorted(fleet, key=lambda d: (-d.required_s, d.priority))


def candidate_starts(duration_s: int, stride_s: int = PLAN_STRIDE_S) -> np.ndarray:
    return np.arange(0, SECONDS_PER_DAY - duration_s + 1, stride_s)


def placement_gains(net_w: np.ndarray, power_w: float, duration_s: int, tariff: Tariff, starts: np.ndarray) -> np.ndarray:
    """Change of the day's balance for each candidate start of one rectangle."""
    delta = money_per_second(net_w - power_w, tariff) - money_per_second(net_w, tariff)
    csum = np.concatenate(([0.0], np.cumsum(delta)))
    return csum[starts + duration_s] - csum[starts]


def plan_smart(
    forecast,
    base_load_w,
    fleet: Fleet,
    tariff: Tariff = Tariff(),
    stride_s: int = PLAN_STRIDE_S,
) -> DayPlan:
    """Greedy rectangle fitting into the forecast envelope.

    Devices are placed one at a time, longest first, each as one contiguous
    block of its full duration at the grid start that maximizes the day's
    balance given the blocks already placed. Ties go to the earliest start.
    """
    net = as_values(forecast) - base_load_w
    plan = DayPlan()
    for dev in placement_order(fleet):
        starts = candidate_starts(dev.required_s, stride_s)
        gains = placement_gains(net, dev.power_w, dev.required_s, tariff, starts)
        best = int(np.flatnonzero(gains >= gains.max() - PLAN_TIE_EUR)[0])
        start = int(starts[best])
        plan.blocks.append(ScheduledBlock(dev.name, start, start + dev.required_s, dev.power_w))
        net = net.copy()
        net[start : start + dev.required_s] -= dev.power_w
    return plan


# ---------------------------------------------------------------------------
# runtime adaptation of a plan
# ---------------------------------------------------------------------------


def pv_sufficient(
    live_production: float,
    base_load_w: float,
    active_load_w: float,
    device_power_w: float,
    margin_w: float = 0.0,
) -> bool:
    """Whether live production can carry one more device."""
    return live_production - base_load_w - active_load_w >= device_power_w + margin_w


def init_states(plan: DayPlan, fleet: Fleet) -> dict[str, DeviceRuntimeState]:
    """Runtime state per device, seeded from its first planned block."""
    states = {}
    for dev in fleet:
        blocks = plan.blocks_for(dev.name)
        if blocks:
            states[dev.name] = DeviceRuntimeState(DeviceState.OFF, blocks[0].start, blocks[0].end, dev.required_s)
        else:
            states[dev.name] = DeviceRuntimeState(DeviceState.OFF, SECONDS_PER_DAY, SECONDS_PER_DAY, 0)
    return states


def adapt_runtime(
    fleet: Fleet,
    states: dict[str, DeviceRuntimeState],
    t: int,
    live_production_w: float,
    base_load_w: float,
    margin_w: float = 0.0,
    last_switch: dict[str, int] | None = None,
    min_dwell_s: int = 0,
) -> list[SwitchEvent]:
    """One tick of the plan-following controller; mutates ``states``.

    Devices are visited in priority order. The load counted against a
    device is that of the higher-priority devices ON after their own
    update, so a high-priority device switches ON first and OFF last.
    A paused device keeps ``t_on``, so it resumes whenever production
    allows and budget remains.
    """
    commands = []
    active = 0.0
    for dev in fleet:
        st = states[dev.name]
        dwell_ok = last_switch is None or t - last_switch.get(dev.name, -min_dwell_s) >= min_dwell_s
        if st.state is DeviceState.OFF:
            if (
                st.remaining_s > 0
                and t >= st.t_on
                and dwell_ok
                and pv_sufficient(live_production_w, base_load_w, active, dev.power_w, margin_w)
            ):
                st.state = DeviceState.ON
                st.t_off = t + st.remaining_s
                commands.append(SwitchEvent(dev.name, EventKind.ON, t))
        else:
            if t >= st.t_off:
                st.state = DeviceState.OFF
                st.remaining_s = 0
                commands.append(SwitchEvent(dev.name, EventKind.OFF, t))
            elif dwell_ok and not pv_sufficient(live_production_w, base_load_w, active, dev.power_w, margin_w):
                st.state = DeviceState.OFF
                st.remaining_s = st.t_off - t
                commands.append(SwitchEvent(dev.name, EventKind.OFF, t))
        if st.state is DeviceState.ON:
            active += dev.power_w
    if last_switch is not None:
        for cmd in commands:
            last_switch[cmd.device] = t
    return commands


def execute_plan(
    plan: DayPlan,
    production,
    base_load_w: float,
    fleet: Fleet,
    cfg: ControllerConfig = ControllerConfig(),
) -> SimulationTrace:
    """Run :func:`adapt_runtime` every second against live production."""
    prod = as_values(production).tolist()
    states = init_states(plan, fleet)
    trace = SimulationTrace.empty(fleet)
    trace.plan = plan
    on_rows = {d.name: trace.on[d.name] for d in fleet}
    last_switch: dict[str, int] | None = {} if cfg.min_dwell_s else None
    for t in range(SECONDS_PER_DAY):
        trace.events.extend(
            adapt_runtime(
                fleet, states, t, prod[t], base_load_w, cfg.sufficiency_margin_w, last_switch, cfg.min_dwell_s
            )
        )
        for name, st in states.items():
            if st.state is DeviceState.ON:
                on_rows[name][t] = True
    return trace


def run_smart(
    forecast,
    production,
    base_load_w: float,
    fleet: Fleet,
    tariff: Tariff = Tariff(),
    cfg: ControllerConfig = ControllerConfig(),
) -> SimulationTrace:
    plan = plan_smart(forecast, base_load_w, fleet, tariff)
    return execute_plan(plan, production, base_load_w, fleet, cfg)


# ---------------------------------------------------------------------------
# adaptive threshold controller
# ---------------------------------------------------------------------------


def run_adaptive(
    production,
    base_load_w: float,
    fleet: Fleet,
    cfg: ControllerConfig = ControllerConfig(ControllerMode.ADAPTIVE),
) -> SimulationTrace:
    """Threshold controller observing held production every decision interval.

    A device switches ON when residual production (after base load and the
    higher-priority devices already ON) reaches its threshold, and OFF when
    that residual falls below it. Each device stops for the day once it has
    run ``required_s`` seconds.
    """
    step = cfg.decision_interval_s
    observed = as_values(downsample_hold(production, step)).tolist()
    devices = list(fleet)
    thresholds = [cfg.threshold_for(d) for d in devices]
    remaining = [d.required_s for d in devices]
    on = [False] * len(devices)
    last_switch = [-cfg.min_dwell_s] * len(devices)
    trace = SimulationTrace.empty(fleet)
    rows = [trace.on[d.name] for d in devices]
    events = trace.events

    for t in range(SECONDS_PER_DAY):
        for i, dev in enumerate(devices):
            if on[i] and remaining[i] == 0:
                on[i] = False
                last_switch[i] = t
                events.append(SwitchEvent(dev.name, EventKind.OFF, t))
        if t % step == 0:
            residual = observed[t] - base_load_w
            for i, dev in enumerate(devices):
                if t - last_switch[i] >= cfg.min_dwell_s:
                    if not on[i] and remaining[i] > 0 and residual >= thresholds[i]:
                        on[i] = True
                        last_switch[i] = t
                        events.append(SwitchEvent(dev.name, EventKind.ON, t))
                    elif on[i] and residual < thresholds[i]:
                        on[i] = False
                        last_switch[i] = t
                        events.append(SwitchEvent(dev.name, EventKind.OFF, t))
                if on[i]:
                    residual -= dev.power_w
        for i in range(len(devices)):
            if on[i]:
                rows[i][t] = True
                remaining[i] -= 1
    return trace


# ---------------------------------------------------------------------------
# fixed schedule
# ---------------------------------------------------------------------------


def run_bruteforce(fleet: Fleet, start_times: Mapping[str, int] | None = None) -> SimulationTrace:
    """Each device ON for exactly ``required_s`` from its fixed start."""
    start_times = BRUTEFORCE_STARTS if start_times is None else start_times
    trace = SimulationTrace.empty(fleet)
    plan = DayPlan()
    for dev in fleet:
        start = int(start_times[dev.name])
        end = start + dev.required_s
        if start < 0 or end > SECONDS_PER_DAY:
            raise StartOverflowsDay(f"{dev.name}: [{start}, {end}) leaves the day")
        trace.on[dev.name][start:end] = True
        trace.events.append(SwitchEvent(dev.name, EventKind.ON, start))
        if end < SECONDS_PER_DAY:
            trace.events.append(SwitchEvent(dev.name, EventKind.OFF, end))
        plan.blocks.append(ScheduledBlock(dev.name, start, end, dev.power_w))
    trace.plan = plan
    trace.events.sort(key=lambda e: e.t)
    return trace


# ---------------------------------------------------------------------------
# decision resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolutionMetrics:
    interval_s: int
    pv_energy_used_ws: float
    grid_energy_ws: float
    utilization_vs_1s: float


def pv_energy_used_ws(production, base_load, controllable_w) -> float:
    """PV energy absorbed by controllable load, PV serving the base load first."""
    spare = np.maximum(0.0, as_values(production) - base_load)
    return float(np.minimum(controllable_w, spare).sum())


def grid_energy_ws(production, base_load, controllable_w) -> float:
    return float(np.maximum(0.0, base_load + controllable_w - as_values(production)).sum())


def resolution_metrics(
    production,
    base_load_w: float,
    fleet: Fleet,
    intervals: Sequence[int] = DEFAULT_INTERVALS,
    threshold_w: float | None = RESOLUTION_THRESHOLD_W,
) -> dict[int, ResolutionMetrics]:
    """Adaptive runs at several decision intervals, compared to 1 s decisions."""
    intervals = [int(i) for i in intervals]
    if 1 not in intervals:
        raise BaselineMissing("the 1 s interval is the reference and must be included")
    used = {}
    grid = {}
    for k in sorted(set(intervals)):
        cfg = ControllerConfig(ControllerMode.ADAPTIVE, threshold_w=threshold_w, decision_interval_s=k)
        ctrl = run_adaptive(production, base_load_w, fleet, cfg).controllable_w
        used[k] = pv_energy_used_ws(production, base_load_w, ctrl)
        grid[k] = grid_energy_ws(production, base_load_w, ctrl)
    ref = used[1]
    out = {}
    for k in intervals:
        util = 1.0 if k == 1 else (used[k] / ref if ref > 0 else float(used[k] == 0))
        out[k] = ResolutionMetrics(k, used[k], grid[k], util)
    return out
