import logging
from typing import Optional

import numpy as np

from autodiff import Module, Tensor, global_rng, normal_init, ops
from errors import LengthError
from models.config import ModelConfig
from models.layers import DecoderBlock, LayerNorm

logger = logging.getLogger(__name__)


class MiniCausalLM(Module):
    """
    Decoder-only transformer over one sequence [BOS] (tag) src [SEP] tgt
    [EOS]. Position i attends to positions <= i only. The output head shares
    the token embedding matrix.
    """

    family = "causal"

    def __init__(
        self,
        vocab_size: int,
        config: Optional[ModelConfig] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        self.config = config or ModelConfig.from_settings()
        self.vocab_size = vocab_size
        rng = rng if rng is not None else global_rng()
        d, std = self.config.d_model, self.config.init_std
        self.token_embedding = self.parameter("token_embedding", normal_init(rng, (vocab_size, d), std))
        self.position_embedding = self.parameter(
            "position_embedding", normal_init(rng, (self.config.context, d), std)
        )
        self.blocks = [
            self.submodule(f"blocks.{i}", DecoderBlock(self.config, rng))
            for i in range(self.config.n_layers)
        ]
        self.ln_final = self.submodule("ln_final", LayerNorm(d))

    @property
    def context(self) -> int:
        return self.config.context

    def logits(self, ids: np.ndarray) -> Tensor:
        """
        (B, T) token ids to (B, T, V) next-token logits. Right padding never
        influences real positions.

        Raises:
            LengthError: If T exceeds the context window.
        """

        ids = np.asarray(ids, dtype=np.int64)
        length = ids.shape[1]
        if length > self.context:
            raise LengthError(f"sequence of {length} tokens exceeds the context of {self.context}")
        positions = ops.getitem(self.position_embedding, index=slice(0, length))
        x = ops.add(ops.embedding(self.token_embedding, ids), positions)
        mask = ops.causal_mask(length)
        for block in self.blocks:
            x = block(x, mask)
        x = self.ln_final(x)
        return ops.matmul(x, ops.transpose(self.token_embedding))
