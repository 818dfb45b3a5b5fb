import unittest

from corpus import StyleLabel, generate_synthetic_corpus, merge_corpora
from errors import ConfigError


class GenerateSyntheticCorpusTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.corpus = generate_synthetic_corpus(
            seed=7, n_train_pairs=300, n_eval_items=40, n_unpaired=200
        )

    def test_deterministic(self):
        again = generate_synthetic_corpus(
            seed=7, n_train_pairs=300, n_eval_items=40, n_unpaired=200
        )
        self.assertEqual(again, self.corpus)
        other = generate_synthetic_corpus(
            seed=8, n_train_pairs=300, n_eval_items=40, n_unpaired=200
        )
        self.assertNotEqual(other.train, self.corpus.train)

    def test_sizes(self):
        self.assertEqual(
            self.corpus.counts(),
            {
                "train": 300,
                "valid": 80,
                "test": 80,
                "unpaired_formal": 100,
                "unpaired_informal": 100,
            },
        )

    def test_eval_items_have_four_references(self):
        for item in self.corpus.valid + self.corpus.test:
            self.assertEqual(len(item.references), 4)

    def test_eval_items_grouped_by_direction(self):
        styles = [item.source_style for item in self.corpus.valid]
        self.assertEqual(styles, [StyleLabel.INFORMAL] * 40 + [StyleLabel.FORMAL] * 40)
        self.assertEqual(len(self.corpus.eval_items("test", "1to0")), 40)

    def test_pairs_cross_style(self):
        for pair in self.corpus.train:
            self.assertNotEqual(pair.source_style, pair.target_style)
            self.assertEqual(pair.target.tokens[-1], ".")

    def test_references_mostly_distinct(self):
        items = self.corpus.valid + self.corpus.test
        distinct = sum(len(set(item.references)) == 4 for item in items)
        self.assertGreaterEqual(distinct / len(items), 0.95)

    def test_splits_are_disjoint(self):
        train_formal = {pair.target for pair in self.corpus.train}
        eval_formal = set()
        for item in self.corpus.valid + self.corpus.test:
            if item.source_style == StyleLabel.INFORMAL:
                eval_formal.add(item.references[0])
            else:
                eval_formal.add(item.source)
        unpaired = set(self.corpus.unpaired_formal)
        self.assertFalse(train_formal & eval_formal)
        self.assertFalse(train_formal & unpaired)
        self.assertFalse(eval_formal & unpaired)
        informal_sources = {pair.source for pair in self.corpus.train}
        self.assertFalse(informal_sources & set(self.corpus.unpaired_informal))

    def test_domain_tags(self):
        em = generate_synthetic_corpus(seed=1, n_train_pairs=20, n_eval_items=5, n_unpaired=10, domain="E&M")
        fr = generate_synthetic_corpus(seed=1, n_train_pairs=20, n_eval_items=5, n_unpaired=10, domain="F&R")
        self.assertTrue(all(p.domain_tag == "E&M" for p in em.train))
        merged = merge_corpora([em, fr])
        self.assertEqual(len(merged.train), 40)
        self.assertEqual({p.domain_tag for p in merged.train}, {"E&M", "F&R"})
        self.assertIsNone(merged.domain)

    def test_training_pairs_directions(self):
        both = self.corpus.training_pairs("both")
        self.assertEqual(len(both), 600)
        self.assertEqual(both[1], both[0].reversed())
        backward = self.corpus.training_pairs("1to0")
        self.assertTrue(all(p.source_style == StyleLabel.FORMAL for p in backward))

    def test_invalid_sizes(self):
        test_cases = [
            {"n_train_pairs": 0, "n_eval_items": 1, "n_unpaired": 1},
            {"n_train_pairs": 1, "n_eval_items": 0, "n_unpaired": 1},
            {"n_train_pairs": 1, "n_eval_items": 1, "n_unpaired": 10**7},
        ]
        for tc in test_cases:
            with self.subTest(**tc):
                with self.assertRaises(ConfigError):
                    generate_synthetic_corpus(seed=0, **tc)


if __name__ == "__main__":
    unittest.main()
