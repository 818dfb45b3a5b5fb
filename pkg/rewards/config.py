from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from errors import ConfigError
from settings import section


class RewardConfig(BaseModel):
    """
    Reward weights and switches. A reward takes part only when it is enabled
    and its weight is positive. source_reward defaults to on for the causal
    LM and must stay unset or off for seq2seq models.
    """

    model_config = ConfigDict(extra="forbid")

    lambda_cls: float = Field(default=1.0, ge=0)
    lambda_bleu: float = Field(default=0.2, ge=0)
    use_cls: bool = False
    use_bleu: bool = False
    source_reward: Optional[bool] = None
    warmup_epochs: int = Field(default=0, ge=0)
    samples_per_input: int = Field(default=1, ge=1)

    @classmethod
    def from_settings(cls, **overrides) -> "RewardConfig":
        defaults = {
            key: value
            for key, value in section("train").items()
            if key in ("lambda_cls", "lambda_bleu")
        }
        return cls(**{**defaults, **overrides})

    @property
    def cls_active(self) -> bool:
        return self.use_cls and self.lambda_cls > 0

    @property
    def bleu_active(self) -> bool:
        return self.use_bleu and self.lambda_bleu > 0

    @property
    def any_active(self) -> bool:
        return self.cls_active or self.bleu_active

    def source_term(self, family: str) -> bool:
        """
        Whether the regenerated-source style term applies to a model family.

        Raises:
            ConfigError: If source_reward is requested for a seq2seq model.
        """

        if family != "causal":
            if self.source_reward:
                raise ConfigError("source_reward applies to the causal LM only")
            return False
        return self.cls_active and self.source_reward is not False

    def label(self) -> str:
        """
        Variant name: base, +SC, +BLEU or +SC&BLEU.
        """

        if self.cls_active and self.bleu_active:
            return "+SC&BLEU"
        if self.cls_active:
            return "+SC"
        if self.bleu_active:
            return "+BLEU"
        return "base"
