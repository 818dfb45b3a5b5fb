import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from autodiff import AdamState, adam_step, backward, derive_rng, early_stopping_check, ops
from classifier.textcnn import ClassifierConfig, StyleClassifier, TextCNN
from corpus import Sentence, StyleLabel, Vocabulary, build_vocabulary
from errors import DataError, EmptySentenceError

logger = logging.getLogger(__name__)


@dataclass
class ClassifierTrainResult:
    classifier: StyleClassifier
    held_out_accuracy: float
    history: List[float] = field(default_factory=list)
    best_epoch: int = 1


def accuracy(classifier: StyleClassifier, labeled: Sequence[Tuple[Sentence, StyleLabel]]) -> float:
    if not labeled:
        raise DataError("no sentences to score")
    predicted = classifier.predict_labels([s for s, _ in labeled])
    return float(np.mean([p == label for p, (_, label) in zip(predicted, labeled)]))


def train_textcnn(
    labeled: Sequence[Tuple[Sentence, StyleLabel]],
    config: Optional[ClassifierConfig] = None,
    vocab: Optional[Vocabulary] = None,
) -> ClassifierTrainResult:
    """
    Train a TextCNN on labeled sentences and return it frozen.

    A held_out_fraction of the data is set aside; training uses Adam on the
    mean cross-entropy and stops early on held-out accuracy. The parameters
    of the best epoch are restored. Every draw (split, initialisation,
    shuffles) comes from a generator seeded with config.seed.

    Raises:
        DataError: If the data holds fewer than two sentences or one label only.
    """

    config = config or ClassifierConfig.from_settings()
    labeled = list(labeled)
    if any(not s.tokens for s, _ in labeled):
        raise EmptySentenceError("training data contains an empty sentence")
    labels = {int(label) for _, label in labeled}
    if labels != {0, 1}:
        raise DataError(f"classifier training needs both labels, got {sorted(labels)}")
    if len(labeled) < 2:
        raise DataError("classifier training needs at least two sentences")

    rng = derive_rng(config.seed, 17)
    order = rng.permutation(len(labeled))
    n_held = min(max(1, round(config.held_out_fraction * len(labeled))), len(labeled) - 1)
    held_out = [labeled[i] for i in order[:n_held]]
    train = [labeled[i] for i in order[n_held:]]

    vocab = vocab or build_vocabulary(s for s, _ in train)
    model = TextCNN(len(vocab), config, rng)
    classifier = StyleClassifier(model, vocab)
    params = model.parameters()
    state = AdamState(lr=config.lr)

    history: List[float] = []
    best_state = model.state_dict()
    for epoch in range(1, config.max_epochs + 1):
        permutation = rng.permutation(len(train))
        losses = []
        for start in range(0, len(train), config.batch_size):
            batch = [train[i] for i in permutation[start : start + config.batch_size]]
            ids, lengths = classifier.encode([s for s, _ in batch])
            targets = np.asarray([int(label) for _, label in batch])
            loss = ops.cross_entropy(model.logits(ids, lengths), targets)
            backward(loss, params)
            adam_step(params, [p.grad for p in params], state)
            losses.append(loss.item())

        held_out_accuracy = accuracy(classifier, held_out)
        history.append(held_out_accuracy)
        decision = early_stopping_check(history, config.patience)
        if decision.best_epoch == epoch:
            best_state = model.state_dict()
        logger.info(
            "Classifier epoch %d: loss %.4f, held-out accuracy %.4f",
            epoch,
            float(np.mean(losses)),
            held_out_accuracy,
        )
        if decision.stop:
            logger.info("Early stopping after epoch %d, best epoch %d", epoch, decision.best_epoch)
            break

    model.load_state_dict(best_state)
    classifier.freeze()
    decision = early_stopping_check(history, config.patience)
    return ClassifierTrainResult(
        classifier=classifier,
        held_out_accuracy=decision.best_value,
        history=history,
        best_epoch=decision.best_epoch,
    )
