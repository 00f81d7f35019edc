"""Config-driven verification runner (``ou-calculus``)."""
from .config import ExperimentConfig, load_config, parse_config
from .report import CheckRecord, ExperimentReport, render
from .suites import SUITES, run

__all__ = ["ExperimentConfig", "load_config", "parse_config", "CheckRecord", "ExperimentReport", "render", "SUITES", "run"]
