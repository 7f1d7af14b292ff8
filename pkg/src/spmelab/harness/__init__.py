"""Experiment configuration, orchestration, reporting and the command-line interface."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import Report, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "Report", "load_config", "parse_config", "run_experiment"]
