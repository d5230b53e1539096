"""Traffic and computation experiments."""

from seabrew.sim.compute import (
    Estimate,
    MeterReport,
    RepResult,
    WorkloadConfig,
    YwrlCostModel,
    concavity,
    confidence_interval,
    run_compute_experiment,
    run_repetition,
    sweep,
)
from seabrew.sim.report import COMPUTE_COLUMNS, FORMATS, TRAFFIC_COLUMNS, emit_report
from seabrew.sim.traffic import BswKuModel, TrafficReport, TrafficRow, run_traffic_experiment

__all__ = [
    "BswKuModel",
    "COMPUTE_COLUMNS",
    "Estimate",
    "FORMATS",
    "MeterReport",
    "RepResult",
    "TRAFFIC_COLUMNS",
    "TrafficReport",
    "TrafficRow",
    "WorkloadConfig",
    "YwrlCostModel",
    "concavity",
    "confidence_interval",
    "emit_report",
    "run_compute_experiment",
    "run_repetition",
    "run_traffic_experiment",
    "sweep",
]
