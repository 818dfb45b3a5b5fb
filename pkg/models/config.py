import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from settings import section


class ModelConfig(BaseModel):
    """
    Transformer sizes shared by both generator families.
    """

    model_config = ConfigDict(extra="forbid")

    d_model: int = Field(default=64, ge=1)
    n_layers: int = Field(default=2, ge=1)
    n_heads: int = Field(default=4, ge=1)
    d_ff: int = Field(default=256, ge=1)
    context: int = Field(default=128, ge=4)
    init_std: float = Field(default=0.02, gt=0)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "ModelConfig":
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} is not divisible by n_heads {self.n_heads}")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "ModelConfig":
        return cls(**{**section("model"), **overrides})


class GenerationConfig(BaseModel):
    """
    Decoding settings. Greedy ignores seed and temperature. Without an
    explicit max_len a source of n tokens may produce ceil(1.5 n) + 5 tokens,
    the stop token included.
    """

    model_config = ConfigDict(extra="forbid")

    mode: Literal["greedy", "sample"] = "greedy"
    temperature: float = Field(default=1.0, gt=0)
    seed: Optional[int] = None
    max_len: Optional[int] = Field(default=None, ge=1)

    def length_limit(self, source_length: int) -> int:
        if self.max_len is not None:
            return self.max_len
        return math.ceil(1.5 * source_length) + 5
