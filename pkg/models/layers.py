"""
Pre-LayerNorm transformer building blocks. Attention is the composite
softmax(q k^T / sqrt(d) + mask) v from autodiff.ops, split over heads.
"""

from typing import Optional

import numpy as np

from autodiff import Module, Tensor, normal_init, ops
from models.config import ModelConfig


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, std: float):
        super().__init__()
        self.weight = self.parameter("weight", normal_init(rng, (n_in, n_out), std))
        self.bias = self.parameter("bias", np.zeros(n_out))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, dim: int):
        super().__init__()
        self.gamma = self.parameter("gamma", np.ones(dim))
        self.beta = self.parameter("beta", np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


class MultiHeadAttention(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        d, std = config.d_model, config.init_std
        self.n_heads = config.n_heads
        self.head_dim = d // config.n_heads
        self.query = self.submodule("query", Linear(d, d, rng, std))
        self.key = self.submodule("key", Linear(d, d, rng, std))
        self.value = self.submodule("value", Linear(d, d, rng, std))
        self.out = self.submodule("out", Linear(d, d, rng, std))

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        x = ops.reshape(x, (batch, length, self.n_heads, self.head_dim))
        return ops.transpose(x, (0, 2, 1, 3))

    def __call__(
        self,
        x: Tensor,
        memory: Optional[Tensor] = None,
        mask: Optional[np.ndarray] = None,
    ) -> Tensor:
        """
        Self-attention over x, or cross-attention from x to memory. mask is
        additive and broadcastable to (B, H, T, S).
        """

        source = x if memory is None else memory
        q = self._split(self.query(x))
        k = self._split(self.key(source))
        v = self._split(self.value(source))
        heads = ops.scaled_dot_product_attention(q, k, v, mask)
        batch, _, length, _ = heads.shape
        merged = ops.reshape(ops.transpose(heads, (0, 2, 1, 3)), (batch, length, -1))
        return self.out(merged)


class FeedForward(Module):
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.up = self.submodule("up", Linear(config.d_model, config.d_ff, rng, config.init_std))
        self.down = self.submodule("down", Linear(config.d_ff, config.d_model, rng, config.init_std))

    def __call__(self, x: Tensor) -> Tensor:
        return self.down(ops.gelu(self.up(x)))


class EncoderBlock(Module):
    """
    Bidirectional self-attention followed by a feed-forward layer.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.ln_attn = self.submodule("ln_attn", LayerNorm(config.d_model))
        self.attn = self.submodule("attn", MultiHeadAttention(config, rng))
        self.ln_ff = self.submodule("ln_ff", LayerNorm(config.d_model))
        self.ff = self.submodule("ff", FeedForward(config, rng))

    def __call__(self, x: Tensor, mask: Optional[np.ndarray]) -> Tensor:
        x = ops.add(x, self.attn(self.ln_attn(x), mask=mask))
        return ops.add(x, self.ff(self.ln_ff(x)))


class DecoderBlock(Module):
    """
    Causal self-attention, optional cross-attention to encoder memory, then
    a feed-forward layer.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator, cross: bool = False):
        super().__init__()
        self.ln_attn = self.submodule("ln_attn", LayerNorm(config.d_model))
        self.attn = self.submodule("attn", MultiHeadAttention(config, rng))
        self.cross = None
        if cross:
            self.ln_cross = self.submodule("ln_cross", LayerNorm(config.d_model))
            self.cross = self.submodule("cross", MultiHeadAttention(config, rng))
        self.ln_ff = self.submodule("ln_ff", LayerNorm(config.d_model))
        self.ff = self.submodule("ff", FeedForward(config, rng))

    def __call__(
        self,
        x: Tensor,
        self_mask: np.ndarray,
        memory: Optional[Tensor] = None,
        memory_mask: Optional[np.ndarray] = None,
    ) -> Tensor:
        x = ops.add(x, self.attn(self.ln_attn(x), mask=self_mask))
        if self.cross is not None:
            x = ops.add(x, self.cross(self.ln_cross(x), memory=memory, mask=memory_mask))
        return ops.add(x, self.ff(self.ln_ff(x)))
