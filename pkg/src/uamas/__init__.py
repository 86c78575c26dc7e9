"""Uncertainty-aware multi-agent condition monitoring for a hydraulic rig."""

from .bnn import ModelBundle, UncertainPrediction, load_model, predict, save_model
from .dataset import Cycle, Task, TaskSpec, load_dataset, task_specs_from_cycles
from .evaluation import TaskReport, make_folds, run_experiment, train_full_model
from .features import Normalizer, extract, extract_many, fit_normalizer, normalize
from .training import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "Cycle",
    "ModelBundle",
    "Normalizer",
    "Task",
    "TaskReport",
    "TaskSpec",
    "TrainConfig",
    "UncertainPrediction",
    "extract",
    "extract_many",
    "fit_normalizer",
    "load_dataset",
    "load_model",
    "make_folds",
    "normalize",
    "predict",
    "run_experiment",
    "save_model",
    "task_specs_from_cycles",
    "train_full_model",
    "__version__",
]
