import math
from typing import Sequence

import numpy as np

from corpus import Sentence, StyleLabel
from errors import DataError, RangeError


def style_accuracy(outputs: Sequence[Sentence], target_styles: Sequence[StyleLabel], classifier) -> float:
    """
    Fraction of outputs the frozen classifier labels as their target style.
    An empty output never counts as transferred.

    Raises:
        DataError: If there are no outputs, or fewer styles than outputs.
    """

    if not outputs:
        raise DataError("no outputs to classify")
    if len(outputs) != len(target_styles):
        raise DataError(f"{len(outputs)} outputs but {len(target_styles)} target styles")
    scored = [i for i, sentence in enumerate(outputs) if sentence.tokens]
    correct = np.zeros(len(outputs), dtype=bool)
    if scored:
        predicted = classifier.predict_labels([outputs[i] for i in scored])
        correct[scored] = [p == target_styles[i] for p, i in zip(predicted, scored)]
    return float(correct.mean())


def harmonic_mean(acc: float, bleu: float) -> float:
    """
    2ab / (a + b), and 0 when both are 0.

    Raises:
        RangeError: If either value lies outside [0, 1].
    """

    for name, value in (("acc", acc), ("bleu", bleu)):
        if math.isnan(value) or not 0.0 <= value <= 1.0:
            raise RangeError(f"{name} must be in [0, 1], got {value}")
    if acc + bleu == 0:
        return 0.0
    return 2.0 * acc * bleu / (acc + bleu)
