"""
Whitespace-token vocabulary with fixed special ids.
"""

import collections
import itertools
from typing import Dict, Iterable, List, Optional, Sequence

from corpus.types import Sentence
from errors import ConfigError, FormatError
from settings import settings

PAD, UNK, BOS, SEP, EOS = "[PAD]", "[UNK]", "[BOS]", "[SEP]", "[EOS]"
SPECIALS = (PAD, UNK, BOS, SEP, EOS)
PAD_ID, UNK_ID, BOS_ID, SEP_ID, EOS_ID = range(len(SPECIALS))

DEFAULT_DOMAIN_TAGS = tuple(settings.get("domain_tags", ["E&M", "F&R"]))


def tag_token(tag: str) -> str:
    return f"<{tag}>"


class Vocabulary:
    """
    Dense token <-> id map. Ids 0-4 are PAD, UNK, [BOS], [SEP], [EOS]; one
    token per domain tag follows, then the corpus tokens.
    """

    def __init__(self, tokens: Sequence[str], domain_tags: Sequence[str] = DEFAULT_DOMAIN_TAGS):
        self.domain_tags = tuple(domain_tags)
        expected = list(SPECIALS) + [tag_token(t) for t in self.domain_tags]
        if list(tokens[: len(expected)]) != expected:
            raise FormatError("vocabulary does not start with the reserved tokens")
        if len(set(tokens)) != len(tokens):
            raise FormatError("vocabulary has duplicate tokens")
        self.tokens: List[str] = list(tokens)
        self.ids: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        self.n_reserved = len(expected)

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __contains__(self, token: str) -> bool:
        return token in self.ids

    def id_of(self, token: str) -> int:
        return self.ids.get(token, UNK_ID)

    def token_of(self, index: int) -> str:
        return self.tokens[index]

    def tag_id(self, tag: str) -> int:
        token = tag_token(tag)
        if token not in self.ids:
            raise ConfigError(f"domain tag '{tag}' is not in the vocabulary")
        return self.ids[token]

    def encode(self, sentence: Sentence) -> List[int]:
        return [self.id_of(t) for t in sentence.tokens]

    def decode(self, ids: Iterable[int]) -> Sentence:
        """
        Tokens for ids, dropping PAD, the structural specials and domain tags.
        UNK is kept.
        """

        skip = {PAD_ID, BOS_ID, SEP_ID, EOS_ID, *range(len(SPECIALS), self.n_reserved)}
        return Sentence(tuple(self.tokens[int(i)] for i in ids if int(i) not in skip))

    def is_special(self, index: int) -> bool:
        return index < self.n_reserved

    def to_bytes(self) -> bytes:
        return "\n".join(self.tokens).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes, domain_tags: Optional[Sequence[str]] = None) -> "Vocabulary":
        tokens = data.decode("utf-8").split("\n") if data else []
        if domain_tags is None:
            domain_tags = [
                t[1:-1]
                for t in itertools.takewhile(
                    lambda t: t.startswith("<") and t.endswith(">"),
                    tokens[len(SPECIALS):],
                )
            ]
        return cls(tokens, domain_tags)


def build_vocabulary(
    sentences: Iterable[Sentence],
    domain_tags: Sequence[str] = DEFAULT_DOMAIN_TAGS,
) -> Vocabulary:
    """
    Reserved tokens first, then corpus tokens by (frequency desc, token asc).
    """

    counts = collections.Counter()
    for sentence in sentences:
        counts.update(sentence.tokens)
    reserved = list(SPECIALS) + [tag_token(t) for t in domain_tags]
    for token in reserved:
        counts.pop(token, None)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return Vocabulary(reserved + [token for token, _ in ordered], domain_tags)
