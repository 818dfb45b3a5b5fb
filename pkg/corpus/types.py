"""
Immutable corpus records shared by every package.
"""

import enum
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from errors import ConfigError, DataError


class StyleLabel(enum.IntEnum):
    INFORMAL = 0
    FORMAL = 1

    @property
    def opposite(self) -> "StyleLabel":
        return StyleLabel(1 - int(self))

    @property
    def direction(self) -> str:
        """
        Direction name of a transfer starting in this style ("0to1" or "1to0").
        """

        return f"{int(self)}to{int(self.opposite)}"


DIRECTIONS = ("0to1", "1to0")


def style_of_direction(direction: str) -> StyleLabel:
    """
    Source style of a direction name.
    """

    if direction not in DIRECTIONS:
        raise ConfigError(f"unknown direction '{direction}', expected 0to1 or 1to0")
    return StyleLabel(int(direction[0]))


@dataclass(frozen=True)
class Sentence:
    """
    A pretokenized sentence. Tokens never contain whitespace.
    """

    tokens: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for token in self.tokens:
            if not token or any(ch.isspace() for ch in token):
                raise ValueError(f"invalid token {token!r}")

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(tuple(text.split()))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class ParallelPair:
    source: Sentence
    target: Sentence
    source_style: StyleLabel
    domain_tag: Optional[str] = None

    @property
    def target_style(self) -> StyleLabel:
        return self.source_style.opposite

    def reversed(self) -> "ParallelPair":
        return ParallelPair(
            source=self.target,
            target=self.source,
            source_style=self.target_style,
            domain_tag=self.domain_tag,
        )


@dataclass(frozen=True)
class EvalItem:
    """
    A source sentence with exactly four target-style references.
    """

    source: Sentence
    source_style: StyleLabel
    references: Tuple[Sentence, ...]
    domain_tag: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "references", tuple(self.references))
        if len(self.references) != 4:
            raise DataError(f"an eval item needs 4 references, got {len(self.references)}")

    @property
    def target_style(self) -> StyleLabel:
        return self.source_style.opposite

    @property
    def direction(self) -> str:
        return self.source_style.direction


@dataclass(frozen=True)
class Corpus:
    """
    Parallel training pairs (informal source, formal target), evaluation items
    for both directions, and unpaired text of each style for pretraining.

    valid and test list the 0to1 items before the 1to0 items.
    """

    train: Tuple[ParallelPair, ...] = ()
    valid: Tuple[EvalItem, ...] = ()
    test: Tuple[EvalItem, ...] = ()
    unpaired_formal: Tuple[Sentence, ...] = ()
    unpaired_informal: Tuple[Sentence, ...] = ()
    domain: Optional[str] = None

    def split(self, name: str) -> Tuple[EvalItem, ...]:
        if name not in ("valid", "test"):
            raise ConfigError(f"unknown evaluation split '{name}'")
        return getattr(self, name)

    def eval_items(self, name: str, direction: Optional[str] = None) -> List[EvalItem]:
        items = self.split(name)
        if direction is None:
            return list(items)
        source_style = style_of_direction(direction)
        return [item for item in items if item.source_style == source_style]

    def training_pairs(self, directions: str = "0to1") -> List[ParallelPair]:
        """
        Training pairs oriented for the requested directions: "0to1", "1to0",
        or "both" (every pair followed by its reverse).
        """

        if directions == "both":
            pairs = []
            for pair in self.train:
                pairs.extend([pair, pair.reversed()])
            return pairs
        source_style = style_of_direction(directions)
        return [
            pair if pair.source_style == source_style else pair.reversed()
            for pair in self.train
        ]

    def labeled_sentences(self) -> List[Tuple[Sentence, StyleLabel]]:
        """
        Every sentence of known style: unpaired text first, then both sides of
        the training pairs.
        """

        labeled = [(s, StyleLabel.FORMAL) for s in self.unpaired_formal]
        labeled += [(s, StyleLabel.INFORMAL) for s in self.unpaired_informal]
        for pair in self.train:
            labeled.append((pair.source, pair.source_style))
            labeled.append((pair.target, pair.target_style))
        return labeled

    def sentences(self) -> Iterable[Sentence]:
        """
        Every sentence in the corpus, references included; used to build the
        shared vocabulary.
        """

        for pair in self.train:
            yield pair.source
            yield pair.target
        for item in self.valid + self.test:
            yield item.source
            yield from item.references
        yield from self.unpaired_formal
        yield from self.unpaired_informal

    def counts(self) -> Dict[str, int]:
        """
        Split sizes in the order GYAFC statistics are usually quoted.
        """

        return {
            "train": len(self.train),
            "valid": len(self.valid),
            "test": len(self.test),
            "unpaired_formal": len(self.unpaired_formal),
            "unpaired_informal": len(self.unpaired_informal),
        }


def merge_corpora(corpora: Iterable[Corpus]) -> Corpus:
    """
    Concatenate corpora of several domains, keeping each item's domain tag.
    Evaluation items stay grouped 0to1 before 1to0.
    """

    corpora = list(corpora)
    if not corpora:
        raise DataError("nothing to merge")

    def ordered(name: str) -> Tuple[EvalItem, ...]:
        items = [item for c in corpora for item in getattr(c, name)]
        forward = [i for i in items if i.source_style == StyleLabel.INFORMAL]
        backward = [i for i in items if i.source_style == StyleLabel.FORMAL]
        return tuple(forward + backward)

    return Corpus(
        train=tuple(p for c in corpora for p in c.train),
        valid=ordered("valid"),
        test=ordered("test"),
        unpaired_formal=tuple(s for c in corpora for s in c.unpaired_formal),
        unpaired_informal=tuple(s for c in corpora for s in c.unpaired_informal),
        domain=None if len(corpora) > 1 else corpora[0].domain,
    )
