import logging
from typing import Optional

import numpy as np

from autodiff import Module, Tensor, global_rng, normal_init, ops
from errors import LengthError
from models.config import ModelConfig
from models.layers import DecoderBlock, EncoderBlock, LayerNorm

logger = logging.getLogger(__name__)


class MiniSeq2Seq(Module):
    """
    Encoder-decoder transformer. The encoder attends bidirectionally over
    real source tokens; the decoder attends causally to its own prefix and
    through cross-attention to the encoder output only. Encoder, decoder and
    output head share one token embedding matrix.
    """

    family = "seq2seq"

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
        d, std, k = self.config.d_model, self.config.init_std, self.config.context
        self.token_embedding = self.parameter("token_embedding", normal_init(rng, (vocab_size, d), std))
        self.encoder_positions = self.parameter("encoder_positions", normal_init(rng, (k, d), std))
        self.decoder_positions = self.parameter("decoder_positions", normal_init(rng, (k, d), std))
        self.encoder = [
            self.submodule(f"encoder.{i}", EncoderBlock(self.config, rng))
            for i in range(self.config.n_layers)
        ]
        self.ln_encoder = self.submodule("ln_encoder", LayerNorm(d))
        self.decoder = [
            self.submodule(f"decoder.{i}", DecoderBlock(self.config, rng, cross=True))
            for i in range(self.config.n_layers)
        ]
        self.ln_decoder = self.submodule("ln_decoder", LayerNorm(d))

    @property
    def context(self) -> int:
        return self.config.context

    def _embed(self, ids: np.ndarray, positions: Tensor) -> Tensor:
        length = ids.shape[1]
        if length > self.context:
            raise LengthError(f"sequence of {length} tokens exceeds the context of {self.context}")
        return ops.add(
            ops.embedding(self.token_embedding, ids),
            ops.getitem(positions, index=slice(0, length)),
        )

    def encode(self, source_ids: np.ndarray, source_lengths: np.ndarray) -> Tensor:
        """
        (B, S) right-padded source ids to (B, S, D) memory.
        """

        source_ids = np.asarray(source_ids, dtype=np.int64)
        mask = ops.key_padding_mask(_valid(source_ids.shape[1], source_lengths))
        x = self._embed(source_ids, self.encoder_positions)
        for block in self.encoder:
            x = block(x, mask)
        return self.ln_encoder(x)

    def decode(
        self,
        memory: Tensor,
        source_lengths: np.ndarray,
        decoder_ids: np.ndarray,
    ) -> Tensor:
        """
        (B, T) decoder input ids to (B, T, V) next-token logits.
        """

        decoder_ids = np.asarray(decoder_ids, dtype=np.int64)
        memory_mask = ops.key_padding_mask(_valid(memory.shape[1], source_lengths))
        self_mask = ops.causal_mask(decoder_ids.shape[1])
        x = self._embed(decoder_ids, self.decoder_positions)
        for block in self.decoder:
            x = block(x, self_mask, memory=memory, memory_mask=memory_mask)
        x = self.ln_decoder(x)
        return ops.matmul(x, ops.transpose(self.token_embedding))

    def logits(
        self,
        source_ids: np.ndarray,
        source_lengths: np.ndarray,
        decoder_ids: np.ndarray,
    ) -> Tensor:
        return self.decode(self.encode(source_ids, source_lengths), source_lengths, decoder_ids)


def _valid(length: int, lengths: np.ndarray) -> np.ndarray:
    return np.arange(length)[None, :] < np.asarray(lengths)[:, None]
