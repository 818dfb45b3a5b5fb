from .config import GenerationConfig, ModelConfig
from .causal import MiniCausalLM
from .seq2seq import MiniSeq2Seq
from .losses import causal_lm_loss, pad_rows, seq2seq_loss, token_accuracy
from .generation import (
    Generation,
    Generator,
    Transferer,
    decode,
    generate,
    sequence_logprob,
    sequence_logprobs,
)
from .pretraining import (
    PretrainConfig,
    PretrainResult,
    add_noise,
    pretrain_causal,
    pretrain_denoising,
    reconstruction_accuracy,
)

__all__ = [
    "Generation",
    "GenerationConfig",
    "Generator",
    "MiniCausalLM",
    "MiniSeq2Seq",
    "ModelConfig",
    "PretrainConfig",
    "PretrainResult",
    "Transferer",
    "add_noise",
    "causal_lm_loss",
    "decode",
    "generate",
    "pad_rows",
    "pretrain_causal",
    "pretrain_denoising",
    "reconstruction_accuracy",
    "seq2seq_loss",
    "sequence_logprob",
    "sequence_logprobs",
    "token_accuracy",
]
