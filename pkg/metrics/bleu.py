"""
BLEU with multi-bleu.perl semantics, plus the smoothed sentence-level
variant used as a training reward.

Tokens are whitespace tokens compared case-sensitively. For each segment
the reference length is the reference closest in length to the hypothesis,
the shorter one on a tie.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

from corpus import Sentence
from errors import AlignmentError, DataError

MAX_ORDER = 4


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def closest_ref_length(hyp_length: int, ref_lengths: Iterable[int]) -> int:
    return min(ref_lengths, key=lambda ref_length: (abs(ref_length - hyp_length), ref_length))


@dataclass(frozen=True)
class BleuStats:
    """
    Clipped n-gram matches and hypothesis n-gram totals for n = 1..4, and
    the summed hypothesis and reference lengths. Corpus statistics are the
    sum of segment statistics.
    """

    matches: Tuple[int, ...] = field(default=(0,) * MAX_ORDER)
    totals: Tuple[int, ...] = field(default=(0,) * MAX_ORDER)
    hyp_length: int = 0
    ref_length: int = 0

    def __add__(self, other: "BleuStats") -> "BleuStats":
        return BleuStats(
            matches=tuple(a + b for a, b in zip(self.matches, other.matches)),
            totals=tuple(a + b for a, b in zip(self.totals, other.totals)),
            hyp_length=self.hyp_length + other.hyp_length,
            ref_length=self.ref_length + other.ref_length,
        )

    def brevity_penalty(self) -> float:
        if self.hyp_length == 0:
            return 0.0
        if self.hyp_length < self.ref_length:
            return math.exp(1.0 - self.ref_length / self.hyp_length)
        return 1.0

    def score(self) -> float:
        """
        Geometric mean of the four precisions times the brevity penalty;
        0 when any order has no match.
        """

        if self.hyp_length == 0 or min(self.matches) == 0:
            return 0.0
        log_precision = sum(math.log(m / t) for m, t in zip(self.matches, self.totals)) / MAX_ORDER
        return self.brevity_penalty() * math.exp(log_precision)


def _tokens(sentence) -> Tuple[str, ...]:
    return sentence.tokens if isinstance(sentence, Sentence) else tuple(sentence)


def segment_stats(hypothesis, references: Sequence) -> BleuStats:
    """
    Statistics of one hypothesis against its reference set. Each n-gram
    count is clipped to its largest count in any single reference.

    Raises:
        DataError: If the reference set is empty.
    """

    if not references:
        raise DataError("a segment needs at least one reference")
    hyp = _tokens(hypothesis)
    refs = [_tokens(r) for r in references]
    matches, totals = [], []
    for n in range(1, MAX_ORDER + 1):
        counts = ngrams(hyp, n)
        max_ref_counts: Counter = Counter()
        for ref in refs:
            max_ref_counts |= ngrams(ref, n)
        matches.append(sum(min(count, max_ref_counts[gram]) for gram, count in counts.items()))
        totals.append(sum(counts.values()))
    return BleuStats(
        matches=tuple(matches),
        totals=tuple(totals),
        hyp_length=len(hyp),
        ref_length=closest_ref_length(len(hyp), (len(r) for r in refs)),
    )


def corpus_stats(hypotheses: Sequence, reference_sets: Sequence[Sequence]) -> BleuStats:
    if len(hypotheses) != len(reference_sets):
        raise AlignmentError(
            f"{len(hypotheses)} hypotheses but {len(reference_sets)} reference sets"
        )
    total = BleuStats()
    for hypothesis, references in zip(hypotheses, reference_sets):
        total = total + segment_stats(hypothesis, references)
    return total


def corpus_bleu(hypotheses: Sequence, reference_sets: Sequence[Sequence]) -> float:
    """
    Corpus BLEU in [0, 1] over aligned hypotheses and reference sets.

    Raises:
        AlignmentError: If the two sequences differ in length.
        DataError: If a reference set is empty.
    """

    return corpus_stats(hypotheses, reference_sets).score()


def sentence_bleu_smoothed(hypothesis, reference) -> float:
    """
    Single-reference BLEU of one segment with add-one smoothing on the
    precisions of orders 2..4. An empty hypothesis scores 0.

    Raises:
        DataError: If the reference is empty.
    """

    ref = _tokens(reference)
    if not ref:
        raise DataError("reference sentence is empty")
    stats = segment_stats(hypothesis, [ref])
    if stats.hyp_length == 0 or stats.matches[0] == 0:
        return 0.0
    precisions: List[float] = [stats.matches[0] / stats.totals[0]]
    precisions += [(m + 1) / (t + 1) for m, t in zip(stats.matches[1:], stats.totals[1:])]
    log_precision = sum(math.log(p) for p in precisions) / MAX_ORDER
    return stats.brevity_penalty() * math.exp(log_precision)
