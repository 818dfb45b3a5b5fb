"""
Evaluation reports: BLEU, ACC and HM per transfer direction and pooled
over all items.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from corpus import DIRECTIONS, EvalItem, Sentence, Vocabulary
from errors import AlignmentError, DataError
from metrics.bleu import corpus_bleu
from metrics.scores import harmonic_mean, style_accuracy
from models import GenerationConfig, Transferer

logger = logging.getLogger(__name__)

POOLED = "all"


@dataclass(frozen=True)
class DirectionScores:
    count: int
    bleu: float
    bleu_first_ref: float
    acc: float

    @property
    def hm(self) -> float:
        return harmonic_mean(self.acc, self.bleu)


@dataclass
class EvalReport:
    """
    rows maps "0to1", "1to0" (when present) and "all" to their scores.
    config echoes the settings the outputs were produced with.
    """

    rows: Dict[str, DirectionScores]
    config: Dict[str, str] = field(default_factory=dict)

    @property
    def pooled(self) -> DirectionScores:
        return self.rows[POOLED]

    @property
    def bleu(self) -> float:
        return self.pooled.bleu

    @property
    def acc(self) -> float:
        return self.pooled.acc

    @property
    def hm(self) -> float:
        return self.pooled.hm

    @property
    def bleu_first_ref(self) -> float:
        return self.pooled.bleu_first_ref

    def records(self) -> List[Tuple[str, str]]:
        records = [(f"config.{key}", str(self.config[key])) for key in sorted(self.config)]
        for name, row in self.rows.items():
            records.append((f"{name}.count", str(row.count)))
            for metric in ("bleu", "bleu_first_ref", "acc", "hm"):
                records.append((f"{name}.{metric}", f"{getattr(row, metric):.6f}"))
        return records

    def to_tsv(self) -> str:
        """
        One key<TAB>value line per metric, LF-terminated.
        """

        return "".join(f"{key}\t{value}\n" for key, value in self.records())

    def to_text(self) -> str:
        lines = [f"{'direction':<10}{'n':>6}{'BLEU':>10}{'BLEU@1':>10}{'ACC':>10}{'HM':>10}"]
        for name, row in self.rows.items():
            lines.append(
                f"{name:<10}{row.count:>6}{row.bleu:>10.4f}{row.bleu_first_ref:>10.4f}"
                f"{row.acc:>10.4f}{row.hm:>10.4f}"
            )
        return "\n".join(lines) + "\n"


def _score(items: Sequence[EvalItem], outputs: Sequence[Sentence], classifier) -> DirectionScores:
    return DirectionScores(
        count=len(items),
        bleu=corpus_bleu(outputs, [item.references for item in items]),
        bleu_first_ref=corpus_bleu(outputs, [item.references[:1] for item in items]),
        acc=style_accuracy(outputs, [item.target_style for item in items], classifier),
    )


def evaluate_outputs(
    items: Sequence[EvalItem],
    outputs: Sequence[Sentence],
    classifier,
    config: Optional[Mapping[str, object]] = None,
) -> EvalReport:
    """
    Score system outputs against their evaluation items.

    Raises:
        AlignmentError: If outputs and items differ in length.
        DataError: If there are no items.
    """

    if len(items) != len(outputs):
        raise AlignmentError(f"{len(items)} items but {len(outputs)} outputs")
    if not items:
        raise DataError("nothing to evaluate")

    rows: Dict[str, DirectionScores] = {}
    for direction in DIRECTIONS:
        chosen = [i for i, item in enumerate(items) if item.direction == direction]
        if chosen:
            rows[direction] = _score([items[i] for i in chosen], [outputs[i] for i in chosen], classifier)
    rows[POOLED] = _score(items, outputs, classifier)
    return EvalReport(rows=rows, config={k: str(v) for k, v in (config or {}).items()})


def transfer_items(
    model,
    vocab: Vocabulary,
    items: Sequence[EvalItem],
    use_tag: bool = False,
    batch_size: int = 32,
) -> List[Sentence]:
    """
    Greedy outputs for every item, in item order.
    """

    transferer = Transferer(model, vocab, use_tag=use_tag)
    config = GenerationConfig(mode="greedy")
    outputs: List[Sentence] = []
    for start in range(0, len(items), batch_size):
        batch = items[start : start + batch_size]
        generations = transferer.transfer(
            [item.source for item in batch], config, [item.domain_tag for item in batch]
        )
        outputs.extend(transferer.to_sentence(g) for g in generations)
    return outputs


def evaluate_system(
    model,
    vocab: Vocabulary,
    items: Sequence[EvalItem],
    classifier,
    use_tag: bool = False,
    config: Optional[Mapping[str, object]] = None,
    batch_size: int = 32,
) -> Tuple[EvalReport, List[Sentence]]:
    """
    Greedy-decode every item and score the outputs. Deterministic for a
    fixed model.
    """

    if not items:
        raise DataError("nothing to evaluate")
    outputs = transfer_items(model, vocab, items, use_tag=use_tag, batch_size=batch_size)
    report = evaluate_outputs(items, outputs, classifier, config)
    logger.debug("Evaluated %d items: BLEU %.4f ACC %.4f HM %.4f", len(items), report.bleu, report.acc, report.hm)
    return report, outputs
