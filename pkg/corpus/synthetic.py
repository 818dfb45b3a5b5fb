"""
Deterministic synthetic stand-in for a GYAFC domain.
"""

import logging
from typing import List, Optional, Set

import numpy as np

from autodiff.seeding import derive_rng
from corpus.grammar import (
    DOMAIN_NOUNS,
    formal_references,
    grammar_size,
    informalize,
    sample_formal,
)
from corpus.types import Corpus, EvalItem, ParallelPair, Sentence, StyleLabel
from errors import ConfigError

logger = logging.getLogger(__name__)

_DOMAIN_KEYS = {None: 0, "E&M": 1, "F&R": 2}


class _DistinctSampler:
    """
    Draws formal sentences never drawn before by this sampler.
    """

    def __init__(self, rng: np.random.Generator, domains: List[str]):
        self.rng = rng
        self.domains = domains
        self.seen: Set[Sentence] = set()
        self.capacity = sum(grammar_size(d) for d in domains)

    def draw(self, count: int) -> List[Sentence]:
        if len(self.seen) + count > self.capacity:
            raise ConfigError(
                f"the grammar has {self.capacity} distinct sentences, "
                f"{len(self.seen) + count} requested"
            )
        drawn = []
        while len(drawn) < count:
            domain = self.domains[int(self.rng.integers(len(self.domains)))]
            sentence = sample_formal(self.rng, domain)
            if sentence in self.seen:
                continue
            self.seen.add(sentence)
            drawn.append(sentence)
        return drawn


def generate_synthetic_corpus(
    seed: int,
    n_train_pairs: int,
    n_eval_items: int,
    n_unpaired: int,
    domain: Optional[str] = None,
) -> Corpus:
    """
    Generate a corpus whose formal side comes from the template grammar and
    whose informal side comes from the rule transducer.

    Args:
        seed: Any 64-bit integer; equal seeds give identical corpora.
        n_train_pairs: Parallel (informal, formal) training pairs.
        n_eval_items: Items per evaluation split and direction.
        n_unpaired: Unpaired sentences, split evenly between the styles
            (the formal side takes the odd one).
        domain: "E&M" or "F&R" to restrict nouns to one domain and tag every
            item with it; None mixes both pools untagged.

    Training, evaluation and unpaired sentences are pairwise disjoint.
    Informal sources use the stochastic transducer; informal references use
    the oracle.
    """

    for name, value in (
        ("n_train_pairs", n_train_pairs),
        ("n_eval_items", n_eval_items),
        ("n_unpaired", n_unpaired),
    ):
        if value < 1:
            raise ConfigError(f"{name} must be at least 1, got {value}")
    if domain is not None and domain not in DOMAIN_NOUNS:
        raise ConfigError(f"unknown domain '{domain}', expected one of {list(DOMAIN_NOUNS)}")

    rng = derive_rng(seed, _DOMAIN_KEYS[domain])
    sampler = _DistinctSampler(rng, [domain] if domain else list(DOMAIN_NOUNS))

    def noisy(sentence: Sentence) -> Sentence:
        return informalize(sentence, mode="stochastic", seed=int(rng.integers(2**63)))

    train = tuple(
        ParallelPair(
            source=noisy(formal),
            target=formal,
            source_style=StyleLabel.INFORMAL,
            domain_tag=domain,
        )
        for formal in sampler.draw(n_train_pairs)
    )

    def eval_split() -> tuple:
        forward = [
            EvalItem(
                source=noisy(formal),
                source_style=StyleLabel.INFORMAL,
                references=tuple(formal_references(formal)),
                domain_tag=domain,
            )
            for formal in sampler.draw(n_eval_items)
        ]
        backward = [
            EvalItem(
                source=formal,
                source_style=StyleLabel.FORMAL,
                references=tuple(
                    informalize(ref, mode="oracle") for ref in formal_references(formal)
                ),
                domain_tag=domain,
            )
            for formal in sampler.draw(n_eval_items)
        ]
        return tuple(forward + backward)

    valid = eval_split()
    test = eval_split()

    n_formal = (n_unpaired + 1) // 2
    unpaired_formal = tuple(sampler.draw(n_formal))
    unpaired_informal = tuple(noisy(s) for s in sampler.draw(n_unpaired - n_formal))

    corpus = Corpus(
        train=train,
        valid=valid,
        test=test,
        unpaired_formal=unpaired_formal,
        unpaired_informal=unpaired_informal,
        domain=domain,
    )
    logger.info("Generated synthetic corpus (seed %d, domain %s): %s", seed, domain, corpus.counts())
    return corpus
