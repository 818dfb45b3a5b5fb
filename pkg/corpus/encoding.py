"""
Id sequences for the two generator families, and training-set subsetting.

Causal LM:  [BOS] (tag) src [SEP] tgt [EOS]
Seq2seq:    encoder [BOS] (tag) src [EOS]; decoder input [BOS] tgt;
            decoder target tgt [EOS]
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from autodiff.seeding import derive_rng
from corpus.types import ParallelPair, Sentence
from corpus.vocabulary import BOS_ID, EOS_ID, SEP_ID, Vocabulary
from errors import ConfigError, EmptySentenceError


@dataclass(frozen=True)
class LMSequence:
    """
    ids[i] is predicted from ids[:i] wherever loss_mask[i] is True.
    sep_index is the position of [SEP].
    """

    ids: np.ndarray
    loss_mask: np.ndarray
    sep_index: int

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class S2SExample:
    encoder_ids: np.ndarray
    decoder_input: np.ndarray
    decoder_target: np.ndarray


def _check_nonempty(pair: ParallelPair) -> None:
    if not pair.source.tokens:
        raise EmptySentenceError("source sentence is empty")
    if not pair.target.tokens:
        raise EmptySentenceError("target sentence is empty")


def prefix_ids(vocab: Vocabulary, domain_tag: Optional[str], use_tag: bool) -> List[int]:
    """
    [BOS], followed by the domain tag when tags are enabled.
    """

    if not use_tag:
        return [BOS_ID]
    if domain_tag is None:
        raise ConfigError("domain tags are enabled but the item has no domain")
    return [BOS_ID, vocab.tag_id(domain_tag)]


def lm_prompt(
    source: Sentence,
    vocab: Vocabulary,
    domain_tag: Optional[str] = None,
    use_tag: bool = False,
) -> List[int]:
    """
    The causal LM's generation prompt: [BOS] (tag) src [SEP].
    """

    if not source.tokens:
        raise EmptySentenceError("source sentence is empty")
    return prefix_ids(vocab, domain_tag, use_tag) + vocab.encode(source) + [SEP_ID]


def encode_lm_sequence(
    pair: ParallelPair,
    vocab: Vocabulary,
    use_tag: bool = False,
) -> LMSequence:
    """
    Encode a pair for the causal LM. Every position after the prefix is a
    prediction target: source tokens, [SEP], target tokens and [EOS].

    Raises:
        EmptySentenceError: If either side is empty.
    """

    _check_nonempty(pair)
    prefix = prefix_ids(vocab, pair.domain_tag, use_tag)
    source = vocab.encode(pair.source)
    ids = prefix + source + [SEP_ID] + vocab.encode(pair.target) + [EOS_ID]
    mask = np.ones(len(ids), dtype=bool)
    mask[: len(prefix)] = False
    return LMSequence(
        ids=np.asarray(ids, dtype=np.int64),
        loss_mask=mask,
        sep_index=len(prefix) + len(source),
    )


def decode_lm_sequence(ids: Sequence[int], vocab: Vocabulary) -> Tuple[Sentence, Sentence]:
    """
    Split an encoded causal LM sequence back into (source, target).
    """

    ids = [int(i) for i in ids]
    sep = ids.index(SEP_ID)
    body = ids[:sep]
    while body and vocab.is_special(body[0]):
        body = body[1:]
    target = ids[sep + 1 :]
    if EOS_ID in target:
        target = target[: target.index(EOS_ID)]
    return vocab.decode(body), vocab.decode(target)


def encode_s2s_source(
    source: Sentence,
    vocab: Vocabulary,
    domain_tag: Optional[str] = None,
    use_tag: bool = False,
) -> List[int]:
    if not source.tokens:
        raise EmptySentenceError("source sentence is empty")
    return prefix_ids(vocab, domain_tag, use_tag) + vocab.encode(source) + [EOS_ID]


def encode_s2s_pair(
    pair: ParallelPair,
    vocab: Vocabulary,
    use_tag: bool = False,
) -> S2SExample:
    """
    Raises:
        EmptySentenceError: If either side is empty.
    """

    _check_nonempty(pair)
    target = vocab.encode(pair.target)
    return S2SExample(
        encoder_ids=np.asarray(
            encode_s2s_source(pair.source, vocab, pair.domain_tag, use_tag), dtype=np.int64
        ),
        decoder_input=np.asarray([BOS_ID] + target, dtype=np.int64),
        decoder_target=np.asarray(target + [EOS_ID], dtype=np.int64),
    )


def decode_s2s_target(ids: Sequence[int], vocab: Vocabulary) -> Sentence:
    ids = [int(i) for i in ids]
    if EOS_ID in ids:
        ids = ids[: ids.index(EOS_ID)]
    return vocab.decode(ids)


def subset_fraction(pairs: Sequence, fraction: float, seed: int) -> list:
    """
    Uniform sample without replacement of ceil(fraction * N) items, kept in
    their original order. fraction=1 returns every item.

    Raises:
        ConfigError: If fraction is not in (0, 1].
    """

    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return list(pairs)
    size = math.ceil(round(fraction * len(pairs), 9))
    chosen = derive_rng(seed).choice(len(pairs), size=size, replace=False)
    return [pairs[i] for i in sorted(chosen.tolist())]
