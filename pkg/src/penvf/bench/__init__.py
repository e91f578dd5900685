"""Benchmark protocol, dataset registry and reports."""

from ..metrics import mean_absolute_error, paired_t_test
from .config import ExperimentConfig
from .datasets import fetch_data, list_datasets, resolve_dataset
from .harness import CellResult, ExperimentReport, penalty_gap_trace, run_experiment
from .report import emit_report, load_report
from .synthetic import SyntheticSpec, generate_synthetic
