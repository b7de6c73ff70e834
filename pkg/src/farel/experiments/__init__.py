from .config import Cell, ConfigError, ExperimentConfig
from .runner import run_cell, run_grid

__all__ = ["Cell", "ConfigError", "ExperimentConfig", "run_cell", "run_grid"]
