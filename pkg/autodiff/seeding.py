"""
The single seeded generator of a run.

Draw order within one run: parameter initialisation, then one permutation
per epoch for batch shuffling, then per-step sampling (sources x' before
targets y^s, in batch order). Anything that takes an explicit seed (corpus
generation, subsets, denoising noise) uses its own generator instead.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

_generator = np.random.default_rng(0)


def seed_everything(seed: int) -> np.random.Generator:
    global _generator
    _generator = np.random.default_rng(seed % 2**64)
    logger.debug("Global generator seeded with %d", seed)
    return _generator


def global_rng() -> np.random.Generator:
    return _generator


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    An independent generator for (seed, keys...), used where an operation
    takes an explicit seed.
    """

    return np.random.default_rng([seed % 2**64, *keys])
