"""Constant-power ON/OFF device models and their controller state."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from pvshift.errors import InputError, NonPositiveTemperature
from pvshift.timeseries import SECONDS_PER_DAY, SECONDS_PER_HOUR


class DeviceState(str, Enum):
    ON = "ON"
    OFF = "OFF"


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    power_w: float
    required_s: int
    priority: int

    def __post_init__(self):
        if self.power_w <= 0:
            raise InputError(f"{self.name}: power must be positive")
        if not 0 < self.required_s <= SECONDS_PER_DAY:
            raise InputError(f"{self.name}: required ON time must lie in (0, {SECONDS_PER_DAY}]")


@dataclass
class DeviceRuntimeState:
    """Live state of one device as seen by a controller."""

    state: DeviceState = DeviceState.OFF
    t_on: int = 0
    t_off: int = 0
    remaining_s: int = 0

    @property
    def is_on(self) -> bool:
        return self.state is DeviceState.ON


class Fleet:
    """Devices ordered by priority (lowest number first)."""

    def __init__(self, devices: Iterable[DeviceProfile]):
        devices = sorted(devices, key=lambda d: d.priority)
        names = [d.name for d in devices]
        prios = [d.priority for d in devices]
        if len(set(names)) != len(names):
            raise InputError("device names must be unique")
        if len(set(prios)) != len(prios):
            raise InputError("device priorities must be unique")
        self.devices: list[DeviceProfile] = devices

    def __iter__(self) -> Iterator[DeviceProfile]:
        return iter(self.devices)

    def __len__(self) -> int:
        return len(self.devices)

    def __getitem__(self, name: str) -> DeviceProfile:
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    def __repr__(self) -> str:
        return f"Fleet({self.devices!r})"

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.devices]

    def total_power(self, on: Iterable[str]) -> float:
        on = set(on)
        return sum(d.power_w for d in self.devices if d.name in on)

    def to_json(self) -> str:
        return json.dumps([asdict(d) for d in self.devices], indent=2)

    @classmethod
    def from_records(cls, records) -> "Fleet":
        try:
            return cls(
                DeviceProfile(
                    name=str(r["name"]),
                    power_w=float(r["power_w"]),
                    required_s=int(r["required_s"]),
                    priority=int(r["priority"]),
                )
                for r in records
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad fleet record: {exc}") from None

    @classmethod
    def load(cls, path) -> "Fleet":
        return cls.from_records(json.loads(Path(path).read_text(encoding="utf-8")))


def pool_runtime(temperature_c: float) -> int:
    """Daily filtration time: water temperature / 2 hours, capped at a day."""
    if temperature_c <= 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {temperature_c}")
    return min(int(round(temperature_c / 2.0 * SECONDS_PER_HOUR)), SECONDS_PER_DAY)


CAR_POWER_W = 2_300.0
HOT_WATER_POWER_W = 2_000.0
POOL_PUMP_POWER_W = 2_000.0
CAR_CHARGE_S = 9_000
HOT_WATER_HEAT_S = 9_000


def default_fleet(pool_temperature_c: float = 20.0) -> Fleet:
    """Pool pump, hot water and car, in that priority order."""
    return Fleet(
        [
            DeviceProfile("pool_pump", POOL_PUMP_POWER_W, pool_runtime(pool_temperature_c), 0),
            DeviceProfile("hot_water", HOT_WATER_POWER_W, HOT_WATER_HEAT_S, 1),
            DeviceProfile("car", CAR_POWER_W, CAR_CHARGE_S, 2),
        ]
    )
