"""edlab: entropic dynamics simulation lab."""
from edlab.config import ExperimentConfig, load_config, parse_config
from edlab.experiments import Laboratory, run_experiment
from edlab.artifacts import write_artifacts

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "Laboratory", "load_config", "parse_config",
    "run_experiment", "write_artifacts",
]
