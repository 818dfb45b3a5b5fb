from .config import RewardConfig
from .terms import (
    bleu_reward,
    policy_gradient_term,
    style_reward_source,
    style_reward_target,
    style_rewards,
)
from .objective import (
    ObjectiveResult,
    RewardBatch,
    RewardSample,
    base_loss,
    draw_rewards,
    reward_terms,
    total_objective,
)

__all__ = [
    "ObjectiveResult",
    "RewardBatch",
    "RewardConfig",
    "RewardSample",
    "base_loss",
    "bleu_reward",
    "draw_rewards",
    "policy_gradient_term",
    "reward_terms",
    "style_reward_source",
    "style_reward_target",
    "style_rewards",
    "total_objective",
]
