"""
Run configuration for fine-tuning and ablations.

Values come, in increasing precedence, from the field defaults, the
[tool.formalrl.train] table, a TOML run file and command-line overrides.
"""

import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ConfigError, IoError
from models import ModelConfig
from rewards import RewardConfig
from settings import section

logger = logging.getLogger(__name__)

DEFAULT_LR = {"causal": 5e-5, "seq2seq": 3e-5, "seq2seq-scratch": 1e-3}

SIDE_TABLES = ("classifier", "pretrain", "corpus")

VARIANT_REWARDS: Dict[str, List[str]] = {
    "base": [],
    "+SC": ["sc"],
    "+BLEU": ["bleu"],
    "+SC&BLEU": ["sc", "bleu"],
}


def read_toml(path) -> dict:
    """
    Raises:
        IoError: If the file cannot be read.
        ConfigError: If it is not valid TOML.
    """

    path = Path(path)
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path} is not valid TOML: {e}") from e


class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corpus: Optional[str] = None
    classifier: Optional[str] = None
    init: Optional[str] = None
    output: Optional[str] = None


class TrainConfig(BaseModel):
    """
    One fine-tuning run. lr defaults per model family when left unset;
    sizes applies only to models built from scratch.
    """

    model_config = ConfigDict(extra="forbid")

    model: Literal["causal", "seq2seq", "seq2seq-scratch"] = "seq2seq"
    lr: Optional[float] = Field(default=None, gt=0)
    batch_size: int = Field(default=32, ge=1)
    patience: int = Field(default=3, ge=1)
    max_epochs: int = Field(default=50, ge=1)
    seed: int = 0
    rewards: List[Literal["sc", "bleu"]] = Field(default_factory=list)
    lambda_cls: float = Field(default=1.0, ge=0)
    lambda_bleu: float = Field(default=0.2, ge=0)
    source_reward: Optional[bool] = None
    warmup_epochs: int = Field(default=0, ge=0)
    samples_per_input: int = Field(default=1, ge=1)
    fraction: float = Field(default=1.0, gt=0, le=1)
    domain_tags: bool = False
    directions: Literal["0to1", "1to0", "both"] = "both"
    sizes: ModelConfig = Field(default_factory=ModelConfig.from_settings)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @field_validator("rewards")
    @classmethod
    def _unique_rewards(cls, rewards: List[str]) -> List[str]:
        return sorted(set(rewards), key=rewards.index)

    @model_validator(mode="after")
    def _source_reward_needs_causal(self) -> "TrainConfig":
        if self.source_reward and self.family != "causal":
            raise ValueError("source_reward applies to the causal LM only")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "TrainConfig":
        return cls(**{**section("train"), **overrides})

    @classmethod
    def from_file(cls, path, **overrides) -> "TrainConfig":
        """
        Settings defaults, then the keys of a TOML run file, then overrides.
        The [classifier], [pretrain] and [corpus] tables belong to the other
        subcommands and are skipped here.
        """

        run = {k: v for k, v in read_toml(path).items() if k not in SIDE_TABLES}
        values = {**section("train"), **run, **overrides}
        logger.debug("Loaded run config from %s", path)
        return cls(**values)

    @property
    def family(self) -> str:
        return "causal" if self.model == "causal" else "seq2seq"

    @property
    def effective_lr(self) -> float:
        return self.lr if self.lr is not None else DEFAULT_LR[self.model]

    def reward_config(self) -> RewardConfig:
        return RewardConfig(
            lambda_cls=self.lambda_cls,
            lambda_bleu=self.lambda_bleu,
            use_cls="sc" in self.rewards,
            use_bleu="bleu" in self.rewards,
            source_reward=self.source_reward,
            warmup_epochs=self.warmup_epochs,
            samples_per_input=self.samples_per_input,
        )

    def config_hash(self) -> str:
        """
        Digest of every setting that shapes the trajectory; paths excluded.
        """

        payload = json.dumps(self.model_dump(exclude={"paths"}), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class AblationSpec(BaseModel):
    """
    The x%-data sweep: every (fraction, variant, seed) cell fine-tunes the
    same kind of model described by train.
    """

    model_config = ConfigDict(extra="forbid")

    fractions: List[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0], min_length=1)
    variants: List[Literal["base", "+SC", "+BLEU", "+SC&BLEU"]] = Field(
        default_factory=lambda: list(VARIANT_REWARDS), min_length=1
    )
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    train: TrainConfig = Field(default_factory=TrainConfig.from_settings)

    @field_validator("fractions")
    @classmethod
    def _sorted_fractions(cls, fractions: List[float]) -> List[float]:
        for fraction in fractions:
            if not 0.0 < fraction <= 1.0:
                raise ValueError(f"fraction {fraction} is not in (0, 1]")
        if any(a >= b for a, b in zip(fractions, fractions[1:])):
            raise ValueError("fractions must be strictly ascending")
        return fractions

    @classmethod
    def from_file(cls, path) -> "AblationSpec":
        """
        A TOML file with fractions, variants and seeds at the top level and
        the run settings under [train].
        """

        values = read_toml(path)
        train = {**section("train"), **values.pop("train", {})}
        return cls(train=TrainConfig(**train), **values)

    def cells(self):
        for fraction in self.fractions:
            for variant in self.variants:
                for seed in self.seeds:
                    yield fraction, variant, seed

    def cell_config(self, fraction: float, variant: str, seed: int) -> TrainConfig:
        return self.train.model_copy(
            update={"fraction": fraction, "rewards": list(VARIANT_REWARDS[variant]), "seed": seed}
        )
