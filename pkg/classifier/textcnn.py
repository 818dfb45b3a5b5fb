"""
TextCNN binary style classifier.

Embedding lookup, one bank of 1-D convolutions per filter width, ReLU,
max-over-time pooling over real positions only, and a linear layer to two
logits. Inputs shorter than the widest filter are extended with PAD. The
output layer starts at zero.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from autodiff import Module, Tensor, no_grad, normal_init, ops
from corpus import PAD_ID, Sentence, StyleLabel, Vocabulary
from errors import EmptySentenceError
from settings import section

logger = logging.getLogger(__name__)


class ClassifierConfig(BaseModel):
    """
    TextCNN sizes and training hyperparameters.
    """

    model_config = ConfigDict(extra="forbid")

    embed_dim: int = Field(default=64, ge=1)
    filter_widths: List[int] = Field(default_factory=lambda: [3, 4, 5], min_length=1)
    n_filters: int = Field(default=100, ge=1)
    init_std: float = Field(default=0.1, gt=0)
    lr: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, ge=1)
    max_epochs: int = Field(default=20, ge=1)
    patience: int = Field(default=3, ge=1)
    held_out_fraction: float = Field(default=0.1, gt=0, lt=1)
    seed: int = 0

    @classmethod
    def from_settings(cls, **overrides) -> "ClassifierConfig":
        return cls(**{**section("classifier"), **overrides})


class TextCNN(Module):
    def __init__(self, vocab_size: int, config: ClassifierConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        std = config.init_std
        e, f = config.embed_dim, config.n_filters
        self.embedding = self.parameter("embedding", normal_init(rng, (vocab_size, e), std))
        self.convs = []
        for width in config.filter_widths:
            weight = self.parameter(f"conv{width}.weight", normal_init(rng, (width, e, f), std))
            bias = self.parameter(f"conv{width}.bias", np.zeros(f))
            self.convs.append((width, weight, bias))
        n_features = f * len(config.filter_widths)
        # Symmetric in the two labels: flipped-label training mirrors exactly.
        self.out_weight = self.parameter("out.weight", np.zeros((n_features, 2)))
        self.out_bias = self.parameter("out.bias", np.zeros(2))

    @property
    def max_width(self) -> int:
        return max(self.config.filter_widths)

    def logits(self, ids: np.ndarray, lengths: np.ndarray) -> Tensor:
        """
        ids: (B, T) PAD-filled token ids; lengths: (B,) real token counts.
        Returns (B, 2) logits.
        """

        ids = np.asarray(ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        batch, length = ids.shape
        if length < self.max_width:
            pad = np.full((batch, self.max_width - length), PAD_ID, dtype=np.int64)
            ids = np.concatenate([ids, pad], axis=1)
            length = self.max_width

        embedded = ops.embedding(self.embedding, ids)
        features = []
        for width, weight, bias in self.convs:
            activation = ops.relu(ops.conv1d(embedded, weight, bias))
            n_windows = length - width + 1
            last = np.maximum(lengths - width + 1, 1)
            valid = np.arange(n_windows)[None, :] < last[:, None]
            features.append(ops.max_over_time(activation, valid))
        pooled = ops.concat(features, axis=1)
        return ops.linear(pooled, self.out_weight, self.out_bias)


def pad_batch(rows: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray]:
    lengths = np.asarray([len(r) for r in rows], dtype=np.int64)
    ids = np.full((len(rows), int(lengths.max())), PAD_ID, dtype=np.int64)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = row
    return ids, lengths


class StyleClassifier:
    """
    A TextCNN with its vocabulary, scoring sentences of either style.

    Once frozen its parameters never change; one instance serves as both the
    reward oracle and the evaluation classifier.
    """

    def __init__(self, model: TextCNN, vocab: Vocabulary):
        self.logger = logger.getChild(self.__class__.__name__)
        self.model = model
        self.vocab = vocab

    @property
    def config(self) -> ClassifierConfig:
        return self.model.config

    def freeze(self) -> "StyleClassifier":
        self.model.freeze()
        return self

    def encode(self, sentences: Sequence[Sentence]) -> Tuple[np.ndarray, np.ndarray]:
        for sentence in sentences:
            if not sentence.tokens:
                raise EmptySentenceError("cannot classify an empty sentence")
        return pad_batch([self.vocab.encode(s) for s in sentences])

    def confidences(self, sentences: Sequence[Sentence], batch_size: int = 256) -> np.ndarray:
        """
        (N, 2) array of (p(informal), p(formal)) per sentence.

        Raises:
            EmptySentenceError: If any sentence has no tokens.
        """

        if not sentences:
            return np.zeros((0, 2))
        out = []
        with no_grad():
            for start in range(0, len(sentences), batch_size):
                ids, lengths = self.encode(sentences[start : start + batch_size])
                out.append(ops.softmax(self.model.logits(ids, lengths)).data)
        return np.concatenate(out, axis=0)

    def confidence(self, sentence: Sentence) -> Tuple[float, float]:
        p = self.confidences([sentence])[0]
        return float(p[0]), float(p[1])

    def predict_labels(self, sentences: Sequence[Sentence]) -> List[StyleLabel]:
        """
        Argmax of the confidences; an exact tie goes to INFORMAL (label 0).
        """

        p = self.confidences(sentences)
        return [StyleLabel.FORMAL if row[1] > row[0] else StyleLabel.INFORMAL for row in p]

    def predict_label(self, sentence: Sentence) -> StyleLabel:
        return self.predict_labels([sentence])[0]


def confidence(sentence: Sentence, classifier: StyleClassifier) -> Tuple[float, float]:
    return classifier.confidence(sentence)


def predict_label(sentence: Sentence, classifier: StyleClassifier) -> StyleLabel:
    return classifier.predict_label(sentence)
