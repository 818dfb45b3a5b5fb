from .types import (
    DIRECTIONS,
    Corpus,
    EvalItem,
    ParallelPair,
    Sentence,
    StyleLabel,
    merge_corpora,
    style_of_direction,
)
from .grammar import has_informal_marker, informalize
from .synthetic import generate_synthetic_corpus
from .gyafc import DOMAIN_DIRS, load_combined, load_gyafc_dir, write_gyafc_dir
from .vocabulary import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    SEP_ID,
    UNK_ID,
    Vocabulary,
    build_vocabulary,
)
from .encoding import (
    LMSequence,
    S2SExample,
    decode_lm_sequence,
    decode_s2s_target,
    encode_lm_sequence,
    encode_s2s_pair,
    encode_s2s_source,
    lm_prompt,
    prefix_ids,
    subset_fraction,
)

__all__ = [
    "BOS_ID",
    "Corpus",
    "DIRECTIONS",
    "DOMAIN_DIRS",
    "EOS_ID",
    "EvalItem",
    "LMSequence",
    "PAD_ID",
    "ParallelPair",
    "S2SExample",
    "SEP_ID",
    "Sentence",
    "StyleLabel",
    "UNK_ID",
    "Vocabulary",
    "build_vocabulary",
    "decode_lm_sequence",
    "decode_s2s_target",
    "encode_lm_sequence",
    "encode_s2s_pair",
    "encode_s2s_source",
    "generate_synthetic_corpus",
    "has_informal_marker",
    "informalize",
    "lm_prompt",
    "load_combined",
    "load_gyafc_dir",
    "merge_corpora",
    "prefix_ids",
    "style_of_direction",
    "subset_fraction",
    "write_gyafc_dir",
]
