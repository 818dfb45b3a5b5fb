"""
Per-token mean negative log-likelihood for both generator families.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np

from autodiff import Tensor, ops
from corpus import PAD_ID, LMSequence, S2SExample
from errors import DataError, LengthError
from models.causal import MiniCausalLM
from models.seq2seq import MiniSeq2Seq


def pad_rows(rows: Sequence[Sequence[int]], fill: int = PAD_ID) -> Tuple[np.ndarray, np.ndarray]:
    """
    Right-pad integer rows into a (B, T) array; returns it with the lengths.
    """

    lengths = np.asarray([len(r) for r in rows], dtype=np.int64)
    ids = np.full((len(rows), max(int(lengths.max()), 1)), fill, dtype=np.int64)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = row
    return ids, lengths


def _next_token_loss(logits: Tensor, targets: np.ndarray, weights: np.ndarray) -> Tensor:
    total = weights.sum()
    if total == 0:
        raise DataError("no target positions in the batch")
    batch, length, vocab = logits.shape
    flat = ops.reshape(logits, (batch * length, vocab))
    return ops.cross_entropy(flat, targets.reshape(-1), weights.reshape(-1) / total)


def causal_lm_loss(
    model: MiniCausalLM,
    sequences: Union[LMSequence, Sequence[LMSequence]],
) -> Tensor:
    """
    Mean NLL of every masked position of the encoded sequences.

    Raises:
        LengthError: If a sequence is longer than the context window.
    """

    if isinstance(sequences, LMSequence):
        sequences = [sequences]
    for seq in sequences:
        if len(seq) > model.context:
            raise LengthError(f"sequence of {len(seq)} tokens exceeds the context of {model.context}")
    ids, _ = pad_rows([s.ids for s in sequences])
    mask = np.zeros(ids.shape, dtype=bool)
    for i, seq in enumerate(sequences):
        mask[i, : len(seq)] = seq.loss_mask

    logits = model.logits(ids)
    predicting = ops.getitem(logits, index=(slice(None), slice(0, ids.shape[1] - 1)))
    return _next_token_loss(predicting, ids[:, 1:], mask[:, 1:].astype(np.float64))


def seq2seq_loss(
    model: MiniSeq2Seq,
    examples: Union[S2SExample, Sequence[S2SExample]],
) -> Tensor:
    """
    Mean NLL of the decoder targets given the encoder input.

    Raises:
        LengthError: If a source or target is longer than the context window.
    """

    if isinstance(examples, S2SExample):
        examples = [examples]
    for ex in examples:
        longest = max(len(ex.encoder_ids), len(ex.decoder_input))
        if longest > model.context:
            raise LengthError(f"sequence of {longest} tokens exceeds the context of {model.context}")
    source_ids, source_lengths = pad_rows([ex.encoder_ids for ex in examples])
    decoder_ids, _ = pad_rows([ex.decoder_input for ex in examples])
    targets, target_lengths = pad_rows([ex.decoder_target for ex in examples])
    weights = (np.arange(targets.shape[1])[None, :] < target_lengths[:, None]).astype(np.float64)

    logits = model.logits(source_ids, source_lengths, decoder_ids)
    return _next_token_loss(logits, targets, weights)


def token_accuracy(model: MiniSeq2Seq, examples: List[S2SExample]) -> float:
    """
    Teacher-forced fraction of decoder targets predicted by argmax.
    """

    source_ids, source_lengths = pad_rows([ex.encoder_ids for ex in examples])
    decoder_ids, _ = pad_rows([ex.decoder_input for ex in examples])
    targets, target_lengths = pad_rows([ex.decoder_target for ex in examples])
    valid = np.arange(targets.shape[1])[None, :] < target_lengths[:, None]
    predicted = model.logits(source_ids, source_lengths, decoder_ids).data.argmax(axis=-1)
    return float((predicted == targets)[valid].mean())
