from .causal import CausalGraph, extract_mb
from .checkpoint import load_model, save_model
from .config import ABLATIONS, ConfigError, IcanConfig, ablation, lambda_preset
from .inference import rank_nodes
from .network import IcanModel, init_model
from .training import TrainingDivergedError, total_objective, train

__all__ = [
    "ABLATIONS", "CausalGraph", "ConfigError", "IcanConfig", "IcanModel", "TrainingDivergedError",
    "ablation", "extract_mb", "init_model", "lambda_preset", "load_model", "rank_nodes",
    "save_model", "total_objective", "train",
]
