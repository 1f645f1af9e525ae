"""Noise-aware architecture search for small parameterized quantum circuits.

The package is organized as a numpy library:

* :mod:`naqas.sim`      -- density-matrix simulator with Kraus noise channels
                           and exact parameter-shift gradients
* :mod:`naqas.space`    -- integer-genome codec for the layered ansatz space
                           and hardware-cost metrics
* :mod:`naqas.data`     -- benchmark datasets, splits, and angle encoding
* :mod:`naqas.training` -- supernet heads, epsilon-greedy hybrid training,
                           pretraining and fine-tuning of shared parameters
* :mod:`naqas.nsga`     -- variable-depth NSGA-II with a global Pareto archive
* :mod:`naqas.cli`      -- the pretrain / search / evaluate / report pipeline
"""

__version__ = "0.1.0"

from .data import BINARY_TASK, IRIS_TASK, Dataset, TaskSpec, make_dataset
from .nsga import EvoConfig, ParetoArchive, SearchResult, evolve
from .sim import NO_NOISE, GateOp, NoiseSpec
from .space import CostMetrics, SearchSpaceDef, cost_of, genome_to_circuit
from .training import (SharedParameters, Supernet, TrainerConfig, fine_tune,
                       load_checkpoint, pretrain, save_checkpoint)

__all__ = [
    "__version__",
    "BINARY_TASK", "IRIS_TASK", "Dataset", "TaskSpec", "make_dataset",
    "EvoConfig", "ParetoArchive", "SearchResult", "evolve",
    "NO_NOISE", "GateOp", "NoiseSpec",
    "CostMetrics", "SearchSpaceDef", "cost_of", "genome_to_circuit",
    "SharedParameters", "Supernet", "TrainerConfig", "fine_tune",
    "load_checkpoint", "pretrain", "save_checkpoint",
]
