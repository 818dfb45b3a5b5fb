import unittest

import numpy as np

from corpus import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    SEP_ID,
    UNK_ID,
    ParallelPair,
    Sentence,
    StyleLabel,
    Vocabulary,
    build_vocabulary,
    decode_lm_sequence,
    decode_s2s_target,
    encode_lm_sequence,
    encode_s2s_pair,
    subset_fraction,
)
from errors import ConfigError, EmptySentenceError, FormatError


def _pair(source: str, target: str, tag=None) -> ParallelPair:
    return ParallelPair(
        source=Sentence.from_text(source),
        target=Sentence.from_text(target),
        source_style=StyleLabel.INFORMAL,
        domain_tag=tag,
    )


class VocabularyTest(unittest.TestCase):
    def test_reserved_ids(self):
        vocab = build_vocabulary([Sentence.from_text("u r great")])
        self.assertEqual(
            vocab.tokens[:7],
            ["[PAD]", "[UNK]", "[BOS]", "[SEP]", "[EOS]", "<E&M>", "<F&R>"],
        )
        self.assertEqual((PAD_ID, UNK_ID, BOS_ID, SEP_ID, EOS_ID), (0, 1, 2, 3, 4))

    def test_frequency_then_alphabetical_order(self):
        vocab = build_vocabulary(
            [Sentence.from_text("b a c"), Sentence.from_text("c a"), Sentence.from_text("d")]
        )
        self.assertEqual(vocab.tokens[7:], ["a", "c", "b", "d"])

    def test_unknown_token_encodes_to_unk(self):
        vocab = build_vocabulary([Sentence.from_text("hello there")])
        self.assertEqual(vocab.encode(Sentence.from_text("hello stranger")), [vocab.id_of("hello"), UNK_ID])

    def test_decode_drops_reserved_tokens_except_unk(self):
        vocab = build_vocabulary([Sentence.from_text("u r great")])
        great = vocab.id_of("great")
        ids = [BOS_ID, vocab.tag_id("E&M"), great, UNK_ID, vocab.tag_id("F&R"), SEP_ID, PAD_ID, EOS_ID]
        self.assertEqual(vocab.decode(ids), Sentence(("great", "[UNK]")))
        self.assertEqual(decode_s2s_target([vocab.tag_id("F&R"), great, EOS_ID, great], vocab), Sentence(("great",)))

    def test_bytes_are_stable(self):
        sentences = [Sentence.from_text("one two two three")]
        first, second = build_vocabulary(sentences), build_vocabulary(sentences)
        self.assertEqual(first.to_bytes(), second.to_bytes())
        self.assertEqual(Vocabulary.from_bytes(first.to_bytes()), first)

    def test_rejects_missing_reserved_tokens(self):
        with self.assertRaises(FormatError):
            Vocabulary(["a", "b"])


class EncodingTest(unittest.TestCase):
    def setUp(self):
        self.vocab = build_vocabulary(
            [Sentence.from_text("u r you are great !!! Great .")]
        )

    def _tokens(self, ids):
        return [self.vocab.token_of(int(i)) for i in ids]

    def test_lm_layout(self):
        seq = encode_lm_sequence(_pair("u r", "you are"), self.vocab)
        self.assertEqual(self._tokens(seq.ids), ["[BOS]", "u", "r", "[SEP]", "you", "are", "[EOS]"])
        self.assertEqual(seq.loss_mask.tolist(), [False, True, True, True, True, True, True])
        self.assertEqual(seq.sep_index, 3)

    def test_lm_layout_with_tag(self):
        seq = encode_lm_sequence(_pair("u r", "you are", tag="F&R"), self.vocab, use_tag=True)
        self.assertEqual(
            self._tokens(seq.ids),
            ["[BOS]", "<F&R>", "u", "r", "[SEP]", "you", "are", "[EOS]"],
        )
        self.assertEqual(seq.loss_mask[:2].tolist(), [False, False])

    def test_tag_required_when_enabled(self):
        with self.assertRaises(ConfigError):
            encode_lm_sequence(_pair("u r", "you are"), self.vocab, use_tag=True)

    def test_lm_round_trip(self):
        pair = _pair("u r great !!!", "you are Great .", tag="E&M")
        seq = encode_lm_sequence(pair, self.vocab, use_tag=True)
        self.assertEqual(decode_lm_sequence(seq.ids, self.vocab), (pair.source, pair.target))

    def test_s2s_shift(self):
        pair = _pair("u r great", "you are great .")
        example = encode_s2s_pair(pair, self.vocab)
        self.assertEqual(self._tokens(example.encoder_ids), ["[BOS]", "u", "r", "great", "[EOS]"])
        np.testing.assert_array_equal(example.decoder_target[:-1], example.decoder_input[1:])
        self.assertEqual(len(example.decoder_target), len(pair.target) + 1)
        self.assertEqual(example.decoder_target[-1], EOS_ID)
        self.assertEqual(decode_s2s_target(example.decoder_target, self.vocab), pair.target)

    def test_empty_sentences(self):
        for source, target in (("", "you"), ("u", "")):
            with self.subTest(source=source, target=target):
                with self.assertRaises(EmptySentenceError):
                    encode_lm_sequence(_pair(source, target), self.vocab)
                with self.assertRaises(EmptySentenceError):
                    encode_s2s_pair(_pair(source, target), self.vocab)


class SubsetFractionTest(unittest.TestCase):
    def test_subset_fraction(self):
        items = list(range(1000))
        test_cases = [
            {"fraction": 1.0, "want_len": 1000},
            {"fraction": 0.1, "want_len": 100},
            {"fraction": 0.5, "want_len": 500},
            {"fraction": 0.0015, "want_len": 2},
        ]
        for tc in test_cases:
            subset = subset_fraction(items, tc["fraction"], seed=0)
            with self.subTest(fraction=tc["fraction"]):
                self.assertEqual(len(subset), tc["want_len"])
                self.assertEqual(subset, sorted(subset))
                self.assertEqual(subset, subset_fraction(items, tc["fraction"], seed=0))

    def test_identity(self):
        items = [3, 1, 2]
        self.assertEqual(subset_fraction(items, 1.0, seed=5), items)

    def test_ceiling_is_exact(self):
        self.assertEqual(len(subset_fraction(list(range(10)), 0.7, seed=1)), 7)

    def test_out_of_range(self):
        for fraction in (0.0, -0.1, 1.5):
            with self.assertRaises(ConfigError):
                subset_fraction([1, 2], fraction, seed=0)


if __name__ == "__main__":
    unittest.main()
