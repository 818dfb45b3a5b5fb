from .textcnn import (
    ClassifierConfig,
    StyleClassifier,
    TextCNN,
    confidence,
    pad_batch,
    predict_label,
)
from .training import ClassifierTrainResult, accuracy, train_textcnn

__all__ = [
    "ClassifierConfig",
    "ClassifierTrainResult",
    "StyleClassifier",
    "TextCNN",
    "accuracy",
    "confidence",
    "pad_batch",
    "predict_label",
    "train_textcnn",
]
