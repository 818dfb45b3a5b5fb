"""
The fine-tuning objective: base loss plus one policy-gradient term per
enabled reward.

Per batch the draws happen in a fixed order: regenerated sources x' (causal
LM with the style reward), then samples y^s, both row by row in batch
order. Greedy outputs y' need no draws.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from autodiff import Tensor, global_rng, no_grad, ops
from corpus import ParallelPair, Sentence, Vocabulary, encode_lm_sequence, encode_s2s_pair
from models import GenerationConfig, Transferer, causal_lm_loss, seq2seq_loss, sequence_logprobs
from rewards.config import RewardConfig
from rewards.terms import bleu_reward, policy_gradient_term, style_rewards

logger = logging.getLogger(__name__)


@dataclass
class RewardSample:
    source: Sentence
    sample: Sentence
    greedy: Optional[Sentence] = None
    r_cls: float = 0.0
    r_bleu: float = 0.0
    regenerated: Optional[Sentence] = None
    r_cls_source: float = 0.0


@dataclass
class RewardBatch:
    """
    Everything drawn for one batch. Given this, the surrogate terms are a
    deterministic function of the model parameters.
    """

    prompts: List[List[int]]
    sample_ids: List[List[int]]
    target_rewards: np.ndarray
    source_prompts: List[List[int]] = field(default_factory=list)
    source_ids: List[List[int]] = field(default_factory=list)
    source_rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: List[RewardSample] = field(default_factory=list)


@dataclass
class ObjectiveResult:
    loss: Tensor
    base: Tensor
    terms: Dict[str, Tensor] = field(default_factory=dict)
    rewards: Optional[RewardBatch] = None

    def stats(self) -> Dict[str, float]:
        stats = {"base_loss": self.base.item(), "loss": self.loss.item()}
        if self.rewards is not None and self.rewards.samples:
            samples = self.rewards.samples
            stats["r_cls"] = float(np.mean([s.r_cls for s in samples]))
            stats["r_bleu"] = float(np.mean([s.r_bleu for s in samples]))
            stats["r_cls_source"] = float(np.mean([s.r_cls_source for s in samples]))
        return stats


def base_loss(model, batch: Sequence[ParallelPair], vocab: Vocabulary, use_tag: bool = False) -> Tensor:
    if model.family == "causal":
        return causal_lm_loss(model, [encode_lm_sequence(p, vocab, use_tag) for p in batch])
    return seq2seq_loss(model, [encode_s2s_pair(p, vocab, use_tag) for p in batch])


def draw_rewards(
    batch: Sequence[ParallelPair],
    model,
    vocab: Vocabulary,
    classifier,
    config: RewardConfig,
    use_tag: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> RewardBatch:
    """
    Sample y^s (and x' where it applies) for every pair, repeated
    samples_per_input times, and score them with the enabled rewards.
    """

    rng = rng if rng is not None else global_rng()
    pairs = [pair for pair in batch for _ in range(config.samples_per_input)]
    sources = [p.source for p in pairs]
    tags = [p.domain_tag for p in pairs]
    transferer = Transferer(model, vocab, use_tag=use_tag)
    sampling = GenerationConfig(mode="sample")
    with_source = config.source_term(model.family)

    with no_grad():
        regenerated = transferer.regenerate_sources(sources, sampling, tags, rng) if with_source else []
        sampled = transferer.transfer(sources, sampling, tags, rng)
        greedy = transferer.transfer(sources, GenerationConfig(), tags) if config.bleu_active else []

    samples = [
        RewardSample(source=p.source, sample=transferer.to_sentence(g)) for p, g in zip(pairs, sampled)
    ]
    target_rewards = np.zeros(len(pairs))
    if config.cls_active:
        r_cls = style_rewards(
            [s.sample for s in samples], [p.target_style for p in pairs], classifier, config.lambda_cls
        )
        target_rewards += r_cls
        for sample, value in zip(samples, r_cls):
            sample.r_cls = float(value)
    if config.bleu_active:
        for sample, pair, generation in zip(samples, pairs, greedy):
            sample.greedy = transferer.to_sentence(generation)
            sample.r_bleu = bleu_reward(sample.greedy, sample.sample, pair.target, config.lambda_bleu)
        target_rewards += np.asarray([s.r_bleu for s in samples])

    result = RewardBatch(
        prompts=[transferer.prompt(p.source, p.domain_tag) for p in pairs],
        sample_ids=[g.ids for g in sampled],
        target_rewards=target_rewards,
        samples=samples,
    )
    if with_source:
        x_prime = [transferer.to_sentence(g) for g in regenerated]
        result.source_prompts = [transferer.source_prompt(p.domain_tag) for p in pairs]
        result.source_ids = [g.ids for g in regenerated]
        result.source_rewards = style_rewards(
            x_prime, [p.source_style for p in pairs], classifier, config.lambda_cls
        )
        for sample, sentence, value in zip(samples, x_prime, result.source_rewards):
            sample.regenerated = sentence
            sample.r_cls_source = float(value)
    return result


def reward_terms(model, rewards: RewardBatch) -> Dict[str, Tensor]:
    """
    Surrogate terms for drawn rewards: "target" over y^s and, when x' was
    drawn, "source" over x'.
    """

    terms = {
        "target": policy_gradient_term(
            rewards.target_rewards, sequence_logprobs(model, rewards.prompts, rewards.sample_ids)
        )
    }
    if rewards.source_ids:
        terms["source"] = policy_gradient_term(
            rewards.source_rewards, sequence_logprobs(model, rewards.source_prompts, rewards.source_ids)
        )
    return terms


def total_objective(
    batch: Sequence[ParallelPair],
    model,
    vocab: Vocabulary,
    classifier,
    config: RewardConfig,
    use_tag: bool = False,
    rng: Optional[np.random.Generator] = None,
    with_rewards: bool = True,
) -> ObjectiveResult:
    """
    Base loss plus the enabled policy-gradient terms. With every reward
    inactive (or with_rewards False, as during warm-up) the loss is the base
    loss itself and nothing is sampled.
    """

    base = base_loss(model, batch, vocab, use_tag)
    if not (with_rewards and config.any_active):
        return ObjectiveResult(loss=base, base=base)

    rewards = draw_rewards(batch, model, vocab, classifier, config, use_tag, rng)
    terms = reward_terms(model, rewards)
    loss = base
    for term in terms.values():
        loss = ops.add(loss, term)
    return ObjectiveResult(loss=loss, base=base, terms=terms, rewards=rewards)
