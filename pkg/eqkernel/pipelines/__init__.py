from .experiments import Experiment, run_experiment
from .records import ExperimentConfig, ResultRow, load_config
