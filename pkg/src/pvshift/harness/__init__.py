"""Synthetic data, dataset ingestion and multi-day strategy comparisons."""

from pvshift.harness.dataset import DayRecord, ingest_dataset, write_dataset
from pvshift.harness.report import emit_report
from pvshift.harness.scenario import ComparisonReport, Scenario, run_scenario, scenario_forecasts
from pvshift.harness.synth import (
    DeviceTruth,
    SynthParams,
    SyntheticDay,
    generate_synthetic_day,
    synthetic_corpus,
)

__all__ = [
    "ComparisonReport",
    "DayRecord",
    "DeviceTruth",
    "Scenario",
    "SynthParams",
    "SyntheticDay",
    "emit_report",
    "generate_synthetic_day",
    "ingest_dataset",
    "run_scenario",
    "scenario_forecasts",
    "synthetic_corpus",
    "write_dataset",
]
