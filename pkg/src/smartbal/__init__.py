from .cli import cli_entry
from .core.ewa import EwaParams
from .core.game import PayoffTable
from .core.grid_model import GridParams, simulate
from .core.scenario import ScenarioConfig, StrategyProfile
from .runner import Experiment, ExperimentConfig, run_experiment

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "EwaParams",
    "GridParams",
    "PayoffTable",
    "ScenarioConfig",
    "StrategyProfile",
    "cli_entry",
    "run_experiment",
    "simulate",
]
