from .tensor import Tape, TapeEntry, Tensor, backward, is_grad_enabled, no_grad
from . import ops
from .gradcheck import GradientReport, check_gradients
from .module import Module, normal_init
from .optim import Adam, AdamState, StopDecision, adam_step, early_stopping_check
from .seeding import derive_rng, global_rng, seed_everything

__all__ = [
    "Adam",
    "AdamState",
    "GradientReport",
    "Module",
    "StopDecision",
    "Tape",
    "TapeEntry",
    "Tensor",
    "adam_step",
    "backward",
    "check_gradients",
    "derive_rng",
    "early_stopping_check",
    "global_rng",
    "is_grad_enabled",
    "no_grad",
    "normal_init",
    "ops",
    "seed_everything",
]
