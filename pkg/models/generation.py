"""
Greedy and multinomial decoding for both generator families, and the
teacher-forced log-probability of a candidate continuation.

A causal prompt is [BOS] (tag) src [SEP] and decoding stops at [EOS]; when
regenerating a source segment the prompt is [BOS] (tag) and decoding stops
at [SEP]. A seq2seq prompt is the encoder input; its decoder always starts
from [BOS] and stops at [EOS]. Rows are decoded together and each row keeps
its own length limit.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from autodiff import Tensor, derive_rng, global_rng, no_grad, ops
from corpus import BOS_ID, EOS_ID, SEP_ID, Sentence, Vocabulary
from corpus import decode_s2s_target, encode_s2s_source, lm_prompt, prefix_ids
from models.causal import MiniCausalLM
from models.config import GenerationConfig
from models.losses import pad_rows
from models.seq2seq import MiniSeq2Seq

logger = logging.getLogger(__name__)

Generator = Union[MiniCausalLM, MiniSeq2Seq]


@dataclass
class Generation:
    """
    ids are the emitted tokens, the stop token included when it was reached.
    logprobs[i] is the untempered log-softmax value of ids[i].
    """

    ids: List[int]
    logprobs: np.ndarray
    finished: bool

    @property
    def total_logprob(self) -> float:
        return float(self.logprobs.sum())

    def body(self) -> List[int]:
        return self.ids[:-1] if self.finished else list(self.ids)


def _log_softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - row.max()
    return shifted - np.log(np.exp(shifted).sum())


def _choose(logits: np.ndarray, config: GenerationConfig, rng: np.random.Generator) -> int:
    if config.mode == "greedy":
        return int(logits.argmax())
    scaled = _log_softmax(logits / config.temperature)
    probs = np.exp(scaled)
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def _resolve_rng(config: GenerationConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    if rng is not None:
        return rng
    if config.seed is not None:
        return derive_rng(config.seed)
    return global_rng()


def decode(
    model: Generator,
    prompts: Sequence[Sequence[int]],
    limits: Sequence[int],
    config: GenerationConfig,
    stop_id: int = EOS_ID,
    rng: Optional[np.random.Generator] = None,
) -> List[Generation]:
    """
    Extend every prompt one token at a time until it emits stop_id or has
    produced limits[i] tokens. Limits are clipped to the context window.
    Sampling draws happen row by row in batch order at each step.
    """

    rng = _resolve_rng(config, rng)
    seq2seq = isinstance(model, MiniSeq2Seq)
    prompts = [[int(t) for t in p] for p in prompts]
    if seq2seq:
        room = [model.context for _ in prompts]
    else:
        room = [model.context - len(p) for p in prompts]
    caps = [max(0, min(limit, r)) for limit, r in zip(limits, room)]

    outputs: List[List[int]] = [[] for _ in prompts]
    logprobs: List[List[float]] = [[] for _ in prompts]
    done = [cap == 0 for cap in caps]

    with no_grad():
        if seq2seq:
            source_ids, source_lengths = pad_rows(prompts)
            memory = model.encode(source_ids, source_lengths)
        while True:
            active = [i for i, finished in enumerate(done) if not finished]
            if not active:
                break
            if seq2seq:
                rows = [[BOS_ID] + outputs[i] for i in active]
                ids, lengths = pad_rows(rows)
                logits = model.decode(
                    Tensor(memory.data[active]), source_lengths[active], ids
                ).data
            else:
                rows = [prompts[i] + outputs[i] for i in active]
                ids, lengths = pad_rows(rows)
                logits = model.logits(ids).data
            for row, i in enumerate(active):
                step_logits = logits[row, lengths[row] - 1]
                token = _choose(step_logits, config, rng)
                outputs[i].append(token)
                logprobs[i].append(float(_log_softmax(step_logits)[token]))
                if token == stop_id or len(outputs[i]) >= caps[i]:
                    done[i] = True

    return [
        Generation(
            ids=out,
            logprobs=np.asarray(lp, dtype=np.float64),
            finished=bool(out) and out[-1] == stop_id,
        )
        for out, lp in zip(outputs, logprobs)
    ]


def sequence_logprobs(
    model: Generator,
    prompts: Sequence[Sequence[int]],
    candidates: Sequence[Sequence[int]],
) -> Tensor:
    """
    (B,) teacher-forced log P(candidate | prompt), differentiable with
    respect to the model parameters. An empty candidate scores 0.
    """

    prompts = [[int(t) for t in p] for p in prompts]
    candidates = [[int(t) for t in c] for c in candidates]

    if isinstance(model, MiniSeq2Seq):
        source_ids, source_lengths = pad_rows(prompts)
        decoder_ids, _ = pad_rows([[BOS_ID] + c[:-1] if c else [BOS_ID] for c in candidates])
        targets, target_lengths = pad_rows([c if c else [EOS_ID] for c in candidates])
        weights = np.arange(targets.shape[1])[None, :] < target_lengths[:, None]
        weights &= np.asarray([bool(c) for c in candidates])[:, None]
        log_probs = ops.log_softmax(model.logits(source_ids, source_lengths, decoder_ids))
    else:
        ids, _ = pad_rows([p + c for p, c in zip(prompts, candidates)])
        length = ids.shape[1]
        positions = np.arange(1, length)[None, :]
        starts = np.asarray([len(p) for p in prompts])[:, None]
        ends = starts + np.asarray([len(c) for c in candidates])[:, None]
        weights = (positions >= starts) & (positions < ends)
        targets = ids[:, 1:]
        logits = model.logits(ids)
        log_probs = ops.log_softmax(ops.getitem(logits, index=(slice(None), slice(0, length - 1))))

    picked = ops.pick(log_probs, targets)
    return ops.sum(ops.mul(picked, Tensor(weights.astype(np.float64))), axis=1)


def sequence_logprob(model: Generator, prompt: Sequence[int], candidate: Sequence[int]) -> Tensor:
    return ops.sum(sequence_logprobs(model, [prompt], [candidate]))


class Transferer:
    """
    Sentence-level front end: builds prompts from Sentences, decodes and
    turns the emitted ids back into Sentences.
    """

    def __init__(self, model: Generator, vocab: Vocabulary, use_tag: bool = False):
        self.model = model
        self.vocab = vocab
        self.use_tag = use_tag
        self.logger = logger.getChild(self.__class__.__name__)

    def prompt(self, source: Sentence, domain_tag: Optional[str] = None) -> List[int]:
        if isinstance(self.model, MiniSeq2Seq):
            return encode_s2s_source(source, self.vocab, domain_tag, self.use_tag)
        return lm_prompt(source, self.vocab, domain_tag, self.use_tag)

    def source_prompt(self, domain_tag: Optional[str] = None) -> List[int]:
        return prefix_ids(self.vocab, domain_tag, self.use_tag)

    def to_sentence(self, generation: Generation) -> Sentence:
        if isinstance(self.model, MiniSeq2Seq):
            return decode_s2s_target(generation.ids, self.vocab)
        return self.vocab.decode(generation.body())

    def transfer(
        self,
        sources: Sequence[Sentence],
        config: GenerationConfig,
        domain_tags: Optional[Sequence[Optional[str]]] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> List[Generation]:
        tags = list(domain_tags) if domain_tags is not None else [None] * len(sources)
        prompts = [self.prompt(s, t) for s, t in zip(sources, tags)]
        limits = [config.length_limit(len(s)) for s in sources]
        return decode(self.model, prompts, limits, config, stop_id=EOS_ID, rng=rng)

    def regenerate_sources(
        self,
        sources: Sequence[Sentence],
        config: GenerationConfig,
        domain_tags: Optional[Sequence[Optional[str]]] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> List[Generation]:
        """
        Sample x' from [BOS] (tag) for the causal LM, stopping at [SEP].
        """

        tags = list(domain_tags) if domain_tags is not None else [None] * len(sources)
        prompts = [self.source_prompt(t) for t in tags]
        limits = [config.length_limit(len(s)) for s in sources]
        return decode(self.model, prompts, limits, config, stop_id=SEP_ID, rng=rng)


def generate(
    source: Sentence,
    model: Generator,
    vocab: Vocabulary,
    config: Optional[GenerationConfig] = None,
    domain_tag: Optional[str] = None,
    use_tag: bool = False,
) -> Tuple[Sentence, np.ndarray]:
    """
    Transfer a single sentence; returns (output Sentence, per-step logprobs).
    """

    transferer = Transferer(model, vocab, use_tag=use_tag)
    generation = transferer.transfer([source], config or GenerationConfig(), [domain_tag])[0]
    return transferer.to_sentence(generation), generation.logprobs
