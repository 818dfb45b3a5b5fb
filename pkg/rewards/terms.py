"""
Style and BLEU rewards, and the policy-gradient surrogate they feed.

Rewards are plain floats computed under no_grad; only the log-probability
of the sampled sequence carries gradient. Minimising -R * log P(y^s | x)
ascends the expected reward.
"""

from typing import Sequence, Union

import numpy as np

from autodiff import Tensor, ops
from corpus import Sentence, StyleLabel
from errors import ConfigError, EmptySentenceError, NumericsError
from metrics import sentence_bleu_smoothed


def _style_margin(sentence: Sentence, style: StyleLabel, classifier) -> float:
    if not sentence.tokens:
        raise EmptySentenceError("cannot score the style of an empty sentence")
    confidences = classifier.confidence(sentence)
    return confidences[int(style)] - confidences[int(style.opposite)]


def style_reward_target(
    sample: Sentence,
    target_style: StyleLabel,
    classifier,
    lambda_cls: float = 1.0,
) -> float:
    """
    lambda_cls * (p(target | y) - p(source | y)), in [-lambda_cls, lambda_cls].

    Raises:
        EmptySentenceError: If the sample is empty.
    """

    return lambda_cls * _style_margin(sample, target_style, classifier)


def style_reward_source(
    regenerated: Sentence,
    source_style: StyleLabel,
    classifier,
    lambda_cls: float = 1.0,
    family: str = "causal",
) -> float:
    """
    lambda_cls * (p(source | x') - p(target | x')) for the causal LM's
    regenerated source segment x'.

    Raises:
        ConfigError: If family is not "causal".
        EmptySentenceError: If x' is empty.
    """

    if family != "causal":
        raise ConfigError(f"the source-style reward needs a causal LM, got {family}")
    return lambda_cls * _style_margin(regenerated, source_style, classifier)


def style_rewards(
    sentences: Sequence[Sentence],
    styles: Sequence[StyleLabel],
    classifier,
    lambda_cls: float,
) -> np.ndarray:
    """
    Batched lambda_cls * (p(style) - p(other)). An empty sentence gets the
    minimum, -lambda_cls.
    """

    rewards = np.full(len(sentences), -float(lambda_cls))
    scored = [i for i, s in enumerate(sentences) if s.tokens]
    if scored:
        confidences = classifier.confidences([sentences[i] for i in scored])
        for row, i in enumerate(scored):
            style = int(styles[i])
            rewards[i] = lambda_cls * (confidences[row, style] - confidences[row, 1 - style])
    return rewards


def bleu_reward(greedy: Sentence, sample: Sentence, reference: Sentence, lambda_bleu: float = 0.2) -> float:
    """
    Self-critical BLEU reward lambda_bleu * (bleu(y', y) - bleu(y^s, y)).
    Positive when the greedy output beats the sample.

    Raises:
        DataError: If the reference is empty.
    """

    return lambda_bleu * (sentence_bleu_smoothed(greedy, reference) - sentence_bleu_smoothed(sample, reference))


def policy_gradient_term(
    rewards: Union[float, Sequence[float], np.ndarray],
    logprobs: Tensor,
) -> Tensor:
    """
    -mean(R * log P) over the N samples. Rewards are constants.

    Raises:
        NumericsError: If a reward or a log-probability is not finite.
    """

    rewards = np.atleast_1d(np.asarray(rewards, dtype=np.float64))
    if not np.all(np.isfinite(rewards)):
        raise NumericsError("non-finite reward in the policy-gradient term")
    if not np.all(np.isfinite(logprobs.data)):
        raise NumericsError("non-finite log-probability in the policy-gradient term")
    if logprobs.ndim == 0:
        logprobs = ops.reshape(logprobs, (1,))
    return ops.neg(ops.mean(ops.mul(logprobs, Tensor(rewards))))
