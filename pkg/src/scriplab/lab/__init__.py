"""Experiment harness: configs, presets, CSV and plot artifacts, CLI."""

from .config import EXPERIMENTS, ExperimentConfig, resolve
from .experiments import run_experiment, verify_manifest
from .plots import emit_plot

__all__ = ["EXPERIMENTS", "ExperimentConfig", "emit_plot", "resolve", "run_experiment", "verify_manifest"]
