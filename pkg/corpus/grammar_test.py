import unittest

import numpy as np

from corpus import Sentence, generate_synthetic_corpus, has_informal_marker, informalize
from corpus.grammar import (
    FORMAL_VOCAB,
    formal_references,
    grammar_size,
    sample_formal,
)
from errors import UnknownTokenError


class InformalizeTest(unittest.TestCase):
    def test_oracle(self):
        test_cases = [
            {
                "formal": "Please watch it because it is excellent .",
                "want": "plz watch it cuz it is excellent !!!",
            },
            {
                "formal": "I believe that the movie is very excellent .",
                "want": "i believe that the movie is very excellent !!!",
            },
            {
                "formal": "Indeed , the song was quite awful .",
                "want": ", the song was quite awful !!!",
            },
            {
                "formal": "To be honest , thanks for being such a truly great friend .",
                "want": "2 be honest , thx 4 being such a truly great friend !!!",
            },
            {
                "formal": "People think that your sister is very poor",
                "want": "ppl think that your sister is very poor",
            },
        ]
        for tc in test_cases:
            got = informalize(Sentence.from_text(tc["formal"]), mode="oracle")
            with self.subTest(formal=tc["formal"]):
                self.assertEqual(got.text, tc["want"])

    def test_oracle_is_idempotent(self):
        rng = np.random.default_rng(0)
        for i in range(500):
            formal = sample_formal(rng, "E&M" if i % 2 else "F&R")
            once = informalize(formal, mode="oracle")
            with self.subTest(sentence=formal.text):
                self.assertEqual(informalize(once, mode="oracle"), once)

    def test_stochastic_is_seed_deterministic(self):
        formal = Sentence.from_text("I really enjoy the movie , but the ending is awful .")
        outputs = {informalize(formal, mode="stochastic", seed=s).text for s in range(40)}
        self.assertGreater(len(outputs), 1)
        for seed in range(10):
            first = informalize(formal, mode="stochastic", seed=seed)
            second = informalize(formal, mode="stochastic", seed=seed)
            self.assertEqual(first, second)
            self.assertIn(first.tokens[-1], ("!!", "!!!", "..."))

    def test_unknown_token(self):
        with self.assertRaises(UnknownTokenError):
            informalize(Sentence.from_text("Hello world ."), mode="oracle")


class GrammarTest(unittest.TestCase):
    def test_samples_are_formal(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            sentence = sample_formal(rng, "E&M")
            self.assertEqual(sentence.tokens[-1], ".")
            self.assertTrue(sentence.tokens[0][0].isupper())
            self.assertTrue(set(sentence.tokens) <= FORMAL_VOCAB)
            self.assertFalse(has_informal_marker(sentence))

    def test_references_are_distinct(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            sentence = sample_formal(rng, "F&R")
            references = formal_references(sentence)
            self.assertEqual(references[0], sentence)
            self.assertEqual(len(set(references)), 4)

    def test_grammar_is_large_enough_for_defaults(self):
        for domain in ("E&M", "F&R"):
            self.assertGreater(grammar_size(domain), 8000)

    def test_informal_side_carries_markers(self):
        corpus = generate_synthetic_corpus(
            seed=0, n_train_pairs=10000, n_eval_items=1, n_unpaired=2
        )
        informal = [pair.source for pair in corpus.train]
        marked = sum(has_informal_marker(s) for s in informal)
        self.assertGreaterEqual(marked / len(informal), 0.99)


if __name__ == "__main__":
    unittest.main()
