from .bleu import (
    BleuStats,
    closest_ref_length,
    corpus_bleu,
    corpus_stats,
    ngrams,
    segment_stats,
    sentence_bleu_smoothed,
)
from .scores import harmonic_mean, style_accuracy
from .report import (
    POOLED,
    DirectionScores,
    EvalReport,
    evaluate_outputs,
    evaluate_system,
    transfer_items,
)

__all__ = [
    "BleuStats",
    "DirectionScores",
    "EvalReport",
    "POOLED",
    "closest_ref_length",
    "corpus_bleu",
    "corpus_stats",
    "evaluate_outputs",
    "evaluate_system",
    "harmonic_mean",
    "ngrams",
    "segment_stats",
    "sentence_bleu_smoothed",
    "style_accuracy",
    "transfer_items",
]
