"""Experiment driver: configuration, runners and the command-line entry point."""
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, build_config
from .experiments import RunSummary, run_experiment

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "build_config", "RunSummary", "run_experiment"]
