import json

import numpy as np
import pytest

from pvshift.cli import main
from pvshift.devices import default_fleet
from pvshift.disaggregation import SwitchEvent, write_events_csv
from pvshift.harness import DeviceTruth, SynthParams, generate_synthetic_day
from pvshift.timeseries import SECONDS_PER_DAY, DaySeries, fill_gaps, read_day_csv, write_day_csv


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    assert main(["synth", "--seed", "2", "--days", "8", "--out-dir", str(root)]) == 0
    return root


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestCli:
    def test_synth_files(self, dataset):
        assert len(list(dataset.glob("*_pv.csv"))) == 8

    def test_clean(self, tmp_path, capsys):
        src = tmp_path / "raw.csv"
        rows = ["t,power_w", "0,100"] + [f"{t},300" for t in range(2, SECONDS_PER_DAY)]
        src.write_text("\n".join(rows) + "\n")
        code, report = run_json(capsys, ["clean", str(src), str(tmp_path / "out.csv")])
        assert code == 0
        assert report["interpolated_runs"][0] == [1, 2]
        series, _ = fill_gaps(read_day_csv(tmp_path / "out.csv"))
        assert series.values[1] == 200

    def test_forecast(self, dataset, tmp_path):
        assert main(["forecast", str(dataset), str(tmp_path / "fc.csv")]) == 0
        fc, _ = fill_gaps(read_day_csv(tmp_path / "fc.csv"))
        assert fc.values.max() > 0

    def test_plan_and_simulate(self, dataset, tmp_path, capsys):
        fc = tmp_path / "fc.csv"
        main(["forecast", str(dataset), str(fc)])
        fleet, tariff = tmp_path / "fleet.json", tmp_path / "tariff.json"
        fleet.write_text(default_fleet().to_json())
        tariff.write_text('{"sell_eur_per_kwh": 0.13, "buy_eur_per_kwh": 0.2, "max_sell_w": 6000}')
        code, plan = run_json(capsys, ["plan", str(fc), str(fleet), str(tariff), "--base-load-w", "350"])
        assert code == 0 and len(plan["blocks"]) == 3
        (tmp_path / "plan.json").write_text(json.dumps(plan))
        code, out = run_json(
            capsys,
            ["simulate", "--mode", "smart", "--production", str(fc), "--plan", str(tmp_path / "plan.json"),
             "--base-load-w", "350", "--trace-csv", str(tmp_path / "t.csv")],
        )
        assert code == 0 and "balance" in out
        assert (tmp_path / "t.csv").read_text().startswith("t,production_w,controllable_w,base_w,net_w")

    def test_simulate_bruteforce(self, capsys):
        code, out = run_json(capsys, ["simulate", "--mode", "bruteforce"])
        assert code == 0
        assert out["devices"]["hot_water"]["on_intervals"] == [[68400, 77400]]

    def test_resolution_csv(self, dataset, capsys):
        pv = sorted(dataset.glob("*_pv.csv"))[-1]
        code = main(["--format", "csv", "resolution", str(pv), "--intervals", "1,900", "--threshold-w", "4000"])
        lines = capsys.readouterr().out.strip().splitlines()
        assert code == 0 and lines[0].startswith("file,interval_s")
        assert len(lines) == 3

    def test_compare(self, tmp_path, capsys):
        sc = tmp_path / "sc.json"
        sc.write_text(json.dumps({"synthetic": {"seed": 1, "days": 8}, "strategies": ["smart", "bruteforce"]}))
        assert main(["compare", str(sc), "--format", "csv", "--out", str(tmp_path / "rep.csv")]) == 0
        assert (tmp_path / "rep_cumulative.csv").exists()

    def test_estimate_and_baseload(self, tmp_path, capsys):
        evs = [SwitchEvent("car", "ON", 20000), SwitchEvent("car", "OFF", 30000)]
        day = generate_synthetic_day(SynthParams(device_truth=(DeviceTruth("car", 2300, events=tuple(evs)),)))
        (tmp_path / "load").mkdir()
        write_day_csv(day.meter, tmp_path / "load" / "2023-01-01_load.csv")
        write_events_csv(evs, tmp_path / "ev.csv")
        code, est = run_json(capsys, ["estimate", str(tmp_path / "load"), str(tmp_path / "ev.csv")])
        assert code == 0 and est[0]["watts"] == 2300
        code, base = run_json(capsys, ["baseload", str(tmp_path / "load"), str(tmp_path / "ev.csv")])
        assert code == 0 and base["watts"] == 350

    def test_dated_event_log(self, tmp_path, capsys):
        (tmp_path / "load").mkdir()
        lines = ["date,device,kind,t"]
        for i, w in enumerate((2000, 2100, 2200)):
            ev = (SwitchEvent("hw", "ON", 10000),)
            d = generate_synthetic_day(SynthParams(device_truth=(DeviceTruth("hw", w, on_ramp_s=5, events=ev),)))
            write_day_csv(d.meter, tmp_path / "load" / f"2023-01-0{i + 1}_load.csv")
            lines.append(f"2023-01-0{i + 1},hw,ON,10000")
        (tmp_path / "ev.csv").write_text("\n".join(lines) + "\n")
        code, est = run_json(capsys, ["estimate", str(tmp_path / "load"), str(tmp_path / "ev.csv")])
        assert est[0]["watts"] == 2100 and est[0]["n_events"] == 3

    def test_input_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        assert main(["clean", str(bad), str(tmp_path / "o.csv")]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["forecast", str(tmp_path / "nothing"), str(tmp_path / "o.csv")]) == 2

    def test_missing_production(self):
        assert main(["simulate", "--mode", "adaptive"]) == 2
