from .config import VARIANT_REWARDS, AblationSpec, PathsConfig, TrainConfig, read_toml
from .checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    load_classifier,
    load_generator,
    save_checkpoint,
)
from .finetune import FinetuneResult, StopDecision, build_generator, early_stopping_check, finetune
from .state import TrainingState, load_training_state, save_training_state
from .ablation import AblationResult, AblationRow, AblationRunner, read_results, run_ablation

__all__ = [
    "AblationResult",
    "AblationRow",
    "AblationRunner",
    "AblationSpec",
    "Checkpoint",
    "FinetuneResult",
    "PathsConfig",
    "StopDecision",
    "TrainConfig",
    "TrainingState",
    "VARIANT_REWARDS",
    "build_generator",
    "decode_checkpoint",
    "early_stopping_check",
    "encode_checkpoint",
    "finetune",
    "load_checkpoint",
    "load_classifier",
    "load_generator",
    "load_training_state",
    "read_results",
    "read_toml",
    "run_ablation",
    "save_checkpoint",
    "save_training_state",
]
