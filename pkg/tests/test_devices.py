import json

import pytest

from pvshift.devices import DeviceProfile, DeviceRuntimeState, DeviceState, Fleet, default_fleet, pool_runtime
from pvshift.errors import InputError, NonPositiveTemperature


class TestDefaultFleet:
    def test_values(self):
        fleet = default_fleet()
        assert fleet.names == ["pool_pump", "hot_water", "car"]
        assert fleet["car"].power_w == 2300
        assert fleet["hot_water"].power_w == 2000
        assert fleet["hot_water"].required_s == 9000
        assert fleet["car"].required_s == 9000
        assert fleet["pool_pump"].required_s == 36000
        assert fleet["pool_pump"].power_w == 2000
        assert [d.priority for d in fleet] == [0, 1, 2]

    def test_pool_temperature(self):
        assert default_fleet(10)["pool_pump"].required_s == 18000


class TestPoolRuntime:
    @pytest.mark.parametrize("temp, secs", [(20, 36000), (2, 3600), (60, 86400), (48, 86400), (12.5, 22500)])
    def test_formula(self, temp, secs):
        assert pool_runtime(temp) == secs

    @pytest.mark.parametrize("temp", [0, -3])
    def test_non_positive(self, temp):
        with pytest.raises(NonPositiveTemperature):
            pool_runtime(temp)


class TestFleet:
    def test_sorted_by_priority(self):
        f = Fleet([DeviceProfile("b", 1, 10, 5), DeviceProfile("a", 1, 10, 1)])
        assert f.names == ["a", "b"]

    def test_unique(self):
        with pytest.raises(InputError):
            Fleet([DeviceProfile("a", 1, 10, 0), DeviceProfile("a", 1, 10, 1)])
        with pytest.raises(InputError):
            Fleet([DeviceProfile("a", 1, 10, 0), DeviceProfile("b", 1, 10, 0)])

    def test_total_power(self):
        assert default_fleet().total_power(["car", "hot_water"]) == 4300
        assert default_fleet().total_power([]) == 0

    def test_json_round_trip(self, tmp_path):
        p = tmp_path / "fleet.json"
        p.write_text(default_fleet().to_json())
        back = Fleet.load(p)
        assert list(back) == list(default_fleet())
        assert json.loads(p.read_text())[0] == {"name": "pool_pump", "power_w": 2000.0, "required_s": 36000, "priority": 0}

    def test_bad_record(self):
        with pytest.raises(InputError):
            Fleet.from_records([{"name": "x"}])


class TestProfile:
    @pytest.mark.parametrize("power, req", [(0, 10), (-1, 10), (1, 0), (1, 86401)])
    def test_invalid(self, power, req):
        with pytest.raises(InputError):
            DeviceProfile("x", power, req, 0)

    def test_runtime_state(self):
        st = DeviceRuntimeState(DeviceState.ON, 0, 10, 10)
        assert st.is_on
        assert not DeviceRuntimeState().is_on
