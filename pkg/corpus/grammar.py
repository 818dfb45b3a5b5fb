"""
The synthetic formality grammar: a closed template grammar for formal
sentences, the rule transducer that informalizes them, and the synonym table
that yields four references per evaluation item.

Typical usage:
    formal = Sentence.from_text("Please watch it because it is excellent .")
    informalize(formal, mode="oracle").text
    # 'plz watch it cuz it is excellent !!!'
"""

import logging
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from corpus.types import Sentence
from errors import ConfigError, UnknownTokenError

logger = logging.getLogger(__name__)

DOMAIN_NOUNS: Dict[str, Tuple[str, ...]] = {
    "E&M": (
        "movie",
        "song",
        "show",
        "album",
        "band",
        "concert",
        "game",
        "actor",
        "book",
        "series",
    ),
    "F&R": (
        "mother",
        "father",
        "sister",
        "brother",
        "friend",
        "husband",
        "wife",
        "family",
        "cousin",
        "neighbour",
    ),
}

# Each group has four members; reference k rotates every member by k places.
SYNONYMS: Dict[str, Tuple[str, ...]] = {
    "good": ("excellent", "wonderful", "superb", "great"),
    "bad": ("terrible", "awful", "dreadful", "poor"),
    "like": ("enjoy", "appreciate", "love", "adore"),
    "think": ("believe", "think", "feel", "suppose"),
    "watch": ("watch", "view", "see", "try"),
    "very": ("very", "quite", "truly", "extremely"),
    "important": ("important", "essential", "crucial", "vital"),
    "help": ("help", "assist", "support", "aid"),
}

OPENERS: Tuple[Tuple[str, ...], ...] = (
    (),
    ("honestly", ","),
    ("in", "my", "opinion", ","),
    ("of", "course", ","),
    ("to", "be", "honest", ","),
)

# Templates are lowercase; "{noun}" takes the domain's noun pool and
# "{group}" any synonym group.
TEMPLATES: Dict[str, Tuple[str, ...]] = {
    "E&M": (
        "please {watch} this {noun} because it is {good} .",
        "i {think} that the {noun} is {very} {good} .",
        "i {like} this {noun} , and people {like} it too .",
        "indeed , the {noun} was {very} {bad} .",
        "people say that the {noun} is {very} {good} .",
        "thanks for telling me about this {very} {good} {noun} .",
        "you should {watch} the {noun} because it is {very} {good} .",
        "i really {like} the {noun} , but the ending is {bad} .",
    ),
    "F&R": (
        "you should {help} your {noun} because it is {important} .",
        "i {think} that my {noun} is {very} {good} .",
        "please {help} your {noun} when they are {very} sad .",
        "it is {very} {important} to talk to your {noun} .",
        "certainly , my {noun} is a {very} {good} person .",
        "i really {like} my {noun} because they are {good} .",
        "thanks for being such a {very} {good} {noun} .",
        "people {think} that your {noun} is {very} {bad} .",
    ),
}

ABBREVIATIONS: Dict[str, str] = {
    "you": "u",
    "are": "r",
    "to": "2",
    "for": "4",
    "please": "plz",
    "thanks": "thx",
    "really": "rly",
    "because": "cuz",
    "people": "ppl",
}
POLITENESS = frozenset({"indeed", "certainly"})
STOCHASTIC_ENDINGS = ("!!", "!!!", "...")
ORACLE_ENDING = "!!!"
INTERJECTIONS = ("lol", "omg", "hey")
INTERJECTION_PROB = 0.5

INFORMAL_MARKERS: FrozenSet[str] = frozenset(
    set(ABBREVIATIONS.values()) | set(STOCHASTIC_ENDINGS) | set(INTERJECTIONS)
)

MODES = ("oracle", "stochastic")


def _slot_options(slot: str, domain: str) -> Tuple[str, ...]:
    if slot == "noun":
        return DOMAIN_NOUNS[domain]
    return SYNONYMS[slot]


def _template_words() -> List[str]:
    words = []
    for domain, templates in TEMPLATES.items():
        for template in templates:
            for part in template.split():
                if part.startswith("{"):
                    words.extend(_slot_options(part[1:-1], domain))
                else:
                    words.append(part)
    for opener in OPENERS:
        words.extend(opener)
    return words


def _capitalised(token: str) -> str:
    return token[:1].upper() + token[1:]


def _build_vocabularies() -> Tuple[FrozenSet[str], FrozenSet[str]]:
    lower = set(_template_words())
    formal = set(lower) | {_capitalised(w) for w in lower} | {"I"}
    informal = (
        (lower - POLITENESS)
        | set(ABBREVIATIONS.values())
        | set(STOCHASTIC_ENDINGS)
        | set(INTERJECTIONS)
    )
    return frozenset(formal), frozenset(informal)


FORMAL_VOCAB, INFORMAL_VOCAB = _build_vocabularies()
GRAMMAR_VOCAB = FORMAL_VOCAB | INFORMAL_VOCAB

SYNONYM_INDEX: Dict[str, Tuple[str, int]] = {
    word: (group, position)
    for group, members in SYNONYMS.items()
    for position, word in enumerate(members)
}


def render_formal(words: List[str]) -> Sentence:
    """
    Apply formal casing to lowercase grammar words: "i" is always "I" and the
    first word is capitalised.
    """

    tokens = ["I" if w == "i" else w for w in words]
    tokens[0] = _capitalised(tokens[0])
    return Sentence(tuple(tokens))


def sample_formal(rng: np.random.Generator, domain: str) -> Sentence:
    """
    Draw one formal sentence of the domain: template, then opener, then each
    slot left to right.
    """

    templates = TEMPLATES[domain]
    template = templates[int(rng.integers(len(templates)))]
    opener = OPENERS[int(rng.integers(len(OPENERS)))]
    words = list(opener)
    for part in template.split():
        if part.startswith("{"):
            options = _slot_options(part[1:-1], domain)
            words.append(options[int(rng.integers(len(options)))])
        else:
            words.append(part)
    return render_formal(words)


def synonym_variant(sentence: Sentence, shift: int) -> Sentence:
    """
    Rotate every synonym-table word of a formal sentence by shift places
    within its group. shift 0 returns the sentence unchanged.
    """

    tokens = []
    for i, token in enumerate(sentence.tokens):
        key = token.lower() if i == 0 else token
        if key in SYNONYM_INDEX:
            group, position = SYNONYM_INDEX[key]
            members = SYNONYMS[group]
            replacement = members[(position + shift) % len(members)]
            token = _capitalised(replacement) if i == 0 and token != key else replacement
        tokens.append(token)
    return Sentence(tuple(tokens))


def formal_references(sentence: Sentence, count: int = 4) -> List[Sentence]:
    """
    The sentence itself followed by count - 1 synonym variants.
    """

    return [synonym_variant(sentence, shift) for shift in range(count)]


def informalize(
    formal: Sentence,
    mode: str = "oracle",
    seed: Optional[int] = None,
) -> Sentence:
    """
    Rewrite a grammar sentence in the informal register.

    Rules, in the order applied: lowercase every token; delete the politeness
    tokens "indeed" and "certainly"; abbreviate (you -> u, are -> r, to -> 2,
    for -> 4, please -> plz, thanks -> thx, really -> rly, because -> cuz,
    people -> ppl); replace a terminal "." by "!!!" (oracle) or by one of
    "!!", "!!!", "..." (stochastic); in stochastic mode, prepend one of
    "lol", "omg", "hey" with probability 0.5.

    Oracle mode is deterministic and idempotent. Stochastic mode draws the
    ending first and the interjection second from a generator seeded with
    seed.

    Raises:
        UnknownTokenError: If a token is outside the grammar vocabulary.
    """

    if mode not in MODES:
        raise ConfigError(f"unknown informalize mode '{mode}'")
    unknown = [t for t in formal.tokens if t not in GRAMMAR_VOCAB]
    if unknown:
        raise UnknownTokenError(f"tokens outside the grammar: {unknown}")

    tokens = [t.lower() for t in formal.tokens]
    tokens = [t for t in tokens if t not in POLITENESS]
    tokens = [ABBREVIATIONS.get(t, t) for t in tokens]

    if mode == "oracle":
        if tokens and tokens[-1] == ".":
            tokens[-1] = ORACLE_ENDING
        return Sentence(tuple(tokens))

    rng = np.random.default_rng(0 if seed is None else seed % 2**64)
    if tokens and tokens[-1] == ".":
        tokens[-1] = STOCHASTIC_ENDINGS[int(rng.integers(len(STOCHASTIC_ENDINGS)))]
    if rng.random() < INTERJECTION_PROB:
        tokens.insert(0, INTERJECTIONS[int(rng.integers(len(INTERJECTIONS)))])
    return Sentence(tuple(tokens))


def has_informal_marker(sentence: Sentence) -> bool:
    return any(token in INFORMAL_MARKERS for token in sentence.tokens)


def grammar_size(domain: str) -> int:
    """
    Number of distinct formal sentences the domain's grammar can produce.
    """

    total = 0
    for template in TEMPLATES[domain]:
        count = 1
        for part in template.split():
            if part.startswith("{"):
                count *= len(_slot_options(part[1:-1], domain))
        total += count
    return total * len(OPENERS)
