"""
Pretraining on unpaired text of both styles: next-token prediction for the
causal LM and denoising reconstruction for the seq2seq model. These stand in
for the released weights a full-scale system would start from.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from autodiff import AdamState, Module, adam_step, backward, derive_rng, early_stopping_check, no_grad
from corpus import BOS_ID, EOS_ID, UNK_ID, LMSequence, S2SExample, Sentence, Vocabulary
from errors import DataError
from models.causal import MiniCausalLM
from models.losses import causal_lm_loss, seq2seq_loss, token_accuracy
from models.seq2seq import MiniSeq2Seq
from settings import section

logger = logging.getLogger(__name__)


class PretrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, ge=1)
    max_epochs: int = Field(default=20, ge=1)
    patience: int = Field(default=3, ge=1)
    mask_prob: float = Field(default=0.15, ge=0, le=1)
    delete_prob: float = Field(default=0.10, ge=0, le=1)
    held_out_fraction: float = Field(default=0.1, gt=0, lt=1)
    seed: int = 0

    @model_validator(mode="after")
    def _noise_is_a_distribution(self) -> "PretrainConfig":
        if self.mask_prob + self.delete_prob > 1:
            raise ValueError("mask_prob + delete_prob must not exceed 1")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "PretrainConfig":
        return cls(**{**section("pretrain"), **overrides})


@dataclass
class PretrainResult:
    """
    history holds the early-stopping metric per epoch (held-out perplexity
    for the causal LM, held-out loss for denoising), lower is better.
    """

    history: List[float] = field(default_factory=list)
    best_epoch: int = 1
    metrics: Dict[str, float] = field(default_factory=dict)


def add_noise(
    ids: Sequence[int],
    mask_prob: float,
    delete_prob: float,
    rng: np.random.Generator,
) -> List[int]:
    """
    Corrupt each token independently with one uniform draw: below
    delete_prob it is dropped, below delete_prob + mask_prob it becomes
    [UNK], otherwise it is kept.
    """

    draws = rng.random(len(ids))
    noised = []
    for token, u in zip(ids, draws):
        if u < delete_prob:
            continue
        noised.append(UNK_ID if u < delete_prob + mask_prob else int(token))
    return noised


def text_sequence(sentence: Sentence, vocab: Vocabulary) -> LMSequence:
    """
    [BOS] s [EOS] with every position but [BOS] a target. Plain text has no
    [SEP], so sep_index is -1.
    """

    ids = [BOS_ID] + vocab.encode(sentence) + [EOS_ID]
    mask = np.ones(len(ids), dtype=bool)
    mask[0] = False
    return LMSequence(ids=np.asarray(ids, dtype=np.int64), loss_mask=mask, sep_index=-1)


def denoising_example(
    sentence: Sentence,
    vocab: Vocabulary,
    config: PretrainConfig,
    rng: np.random.Generator,
) -> S2SExample:
    target = vocab.encode(sentence)
    noised = add_noise(target, config.mask_prob, config.delete_prob, rng)
    return S2SExample(
        encoder_ids=np.asarray([BOS_ID] + noised + [EOS_ID], dtype=np.int64),
        decoder_input=np.asarray([BOS_ID] + target, dtype=np.int64),
        decoder_target=np.asarray(target + [EOS_ID], dtype=np.int64),
    )


def _split(
    sentences: Sequence[Sentence],
    config: PretrainConfig,
    rng: np.random.Generator,
) -> Tuple[List[Sentence], List[Sentence]]:
    sentences = [s for s in sentences if s.tokens]
    if not sentences:
        raise DataError("pretraining corpus is empty")
    order = rng.permutation(len(sentences))
    n_held = min(max(1, round(config.held_out_fraction * len(sentences))), len(sentences) - 1)
    held_out = [sentences[i] for i in order[:n_held]]
    train = [sentences[i] for i in order[n_held:]]
    return train, held_out or train


def _token_count(item) -> int:
    if isinstance(item, LMSequence):
        return int(item.loss_mask[1:].sum())
    return len(item.decoder_target)


def mean_loss(model: Module, items: Sequence, loss_fn: Callable, batch_size: int) -> float:
    """
    Token-weighted mean NLL over items, evaluated in batches without a tape.
    """

    total, count = 0.0, 0
    with no_grad():
        for start in range(0, len(items), batch_size):
            batch = items[start : start + batch_size]
            tokens = sum(_token_count(item) for item in batch)
            total += loss_fn(model, batch).item() * tokens
            count += tokens
    return total / count


def reconstruction_accuracy(
    model: MiniSeq2Seq,
    examples: Sequence[S2SExample],
    batch_size: int = 32,
) -> float:
    """
    Teacher-forced fraction of target tokens the model reproduces.
    """

    correct, count = 0.0, 0
    with no_grad():
        for start in range(0, len(examples), batch_size):
            batch = list(examples[start : start + batch_size])
            tokens = sum(len(ex.decoder_target) for ex in batch)
            correct += token_accuracy(model, batch) * tokens
            count += tokens
    return correct / count


def _fit(
    model: Module,
    loss_fn: Callable,
    train_items: Callable[[int], List],
    evaluate: Callable[[], float],
    config: PretrainConfig,
    rng: np.random.Generator,
    label: str,
) -> PretrainResult:
    params = model.parameters()
    state = AdamState(lr=config.lr)
    history: List[float] = []
    best_state = model.state_dict()

    for epoch in range(1, config.max_epochs + 1):
        items = train_items(epoch)
        permutation = rng.permutation(len(items))
        losses = []
        for start in range(0, len(items), config.batch_size):
            batch = [items[i] for i in permutation[start : start + config.batch_size]]
            loss = loss_fn(model, batch)
            backward(loss, params)
            adam_step(params, [p.grad for p in params], state)
            losses.append(loss.item())

        history.append(evaluate())
        decision = early_stopping_check([-value for value in history], config.patience)
        if decision.best_epoch == epoch:
            best_state = model.state_dict()
        logger.info(
            "%s epoch %d: train loss %.4f, held-out %.4f",
            label,
            epoch,
            float(np.mean(losses)),
            history[-1],
        )
        if decision.stop:
            logger.info("Early stopping after epoch %d, best epoch %d", epoch, decision.best_epoch)
            break

    model.load_state_dict(best_state)
    decision = early_stopping_check([-value for value in history], config.patience)
    return PretrainResult(history=history, best_epoch=decision.best_epoch)


def pretrain_causal(
    sentences: Sequence[Sentence],
    model: MiniCausalLM,
    vocab: Vocabulary,
    config: Optional[PretrainConfig] = None,
) -> PretrainResult:
    """
    Next-token training on [BOS] s [EOS] for every unpaired sentence, with
    early stopping on held-out perplexity. The best epoch's parameters are
    restored in place.

    Raises:
        DataError: If no non-empty sentence is given.
    """

    config = config or PretrainConfig.from_settings()
    rng = derive_rng(config.seed, 29)
    train, held_out = _split(sentences, config, rng)
    train_items = [text_sequence(s, vocab) for s in train]
    held_items = [text_sequence(s, vocab) for s in held_out]

    def perplexity() -> float:
        return math.exp(mean_loss(model, held_items, causal_lm_loss, config.batch_size))

    result = _fit(model, causal_lm_loss, lambda _: train_items, perplexity, config, rng, "Causal pretraining")
    result.metrics["held_out_perplexity"] = result.history[result.best_epoch - 1]
    return result


def pretrain_denoising(
    sentences: Sequence[Sentence],
    model: MiniSeq2Seq,
    vocab: Vocabulary,
    config: Optional[PretrainConfig] = None,
) -> PretrainResult:
    """
    Train the seq2seq model to rebuild each sentence from a corrupted copy
    (see add_noise). Training noise is redrawn every epoch from
    (seed, epoch); held-out noise is drawn once. Early stopping watches the
    held-out loss and the best epoch's parameters are restored in place.

    Raises:
        DataError: If no non-empty sentence is given.
    """

    config = config or PretrainConfig.from_settings()
    rng = derive_rng(config.seed, 31)
    train, held_out = _split(sentences, config, rng)
    held_noise = derive_rng(config.seed, 31, 0)
    held_items = [denoising_example(s, vocab, config, held_noise) for s in held_out]

    def noised_epoch(epoch: int) -> List[S2SExample]:
        noise = derive_rng(config.seed, 31, epoch)
        return [denoising_example(s, vocab, config, noise) for s in train]

    def held_out_loss() -> float:
        return mean_loss(model, held_items, seq2seq_loss, config.batch_size)

    result = _fit(model, seq2seq_loss, noised_epoch, held_out_loss, config, rng, "Denoising pretraining")
    result.metrics["held_out_loss"] = result.history[result.best_epoch - 1]
    result.metrics["reconstruction_accuracy"] = reconstruction_accuracy(
        model, held_items, config.batch_size
    )
    return result
