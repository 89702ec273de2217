"""Mixture-of-experts trainers with conjugate gradient and modified cuckoo search."""

from ._core import (
    IngestError,
    MoeModel,
    TrainingDiverged,
    funcapprox_target,
    gen_artificial,
    gen_funcapprox,
    init_moe,
    load_model,
    metric,
    run_experiment,
    search,
    train,
)

__all__ = [
    "IngestError",
    "MoeModel",
    "TrainingDiverged",
    "funcapprox_target",
    "gen_artificial",
    "gen_funcapprox",
    "init_moe",
    "load_model",
    "metric",
    "run_experiment",
    "search",
    "train",
]
__version__ = "0.1.0"
