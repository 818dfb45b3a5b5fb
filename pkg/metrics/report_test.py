import math
import unittest
from pathlib import Path

import numpy as np

from classifier import ClassifierConfig, StyleClassifier, TextCNN
from corpus import EvalItem, Sentence, StyleLabel, build_vocabulary, generate_synthetic_corpus
from errors import AlignmentError, DataError, RangeError
from metrics import evaluate_outputs, evaluate_system, harmonic_mean, style_accuracy
from models import MiniSeq2Seq, ModelConfig

TESTDATA = Path(__file__).resolve().parent / "testdata"


class FixedClassifier:
    """
    Labels sentences from a lookup table; anything unknown is informal.
    """

    def __init__(self, labels):
        self.labels = labels

    def predict_labels(self, sentences):
        return [self.labels.get(s.text, StyleLabel.INFORMAL) for s in sentences]


def _item(source: str, style: StyleLabel, references) -> EvalItem:
    return EvalItem(Sentence.from_text(source), style, tuple(Sentence.from_text(r) for r in references))


FIXTURE = [
    (
        _item(
            "u r funny",
            StyleLabel.INFORMAL,
            ["You are funny .", "You are amusing .", "You are very funny .", "You are so funny ."],
        ),
        "You are funny .",
    ),
    (
        _item(
            "plz help me",
            StyleLabel.INFORMAL,
            ["Please help me .", "Please assist me .", "Help me , please .", "Could you help me ?"],
        ),
        "Please help me .",
    ),
    (
        _item("You are funny .", StyleLabel.FORMAL, ["u r funny lol", "ur funny", "u r so funny", "lol u r funny"]),
        "u r funny lol",
    ),
    (
        _item("Please help me .", StyleLabel.FORMAL, ["plz help me", "pls help me", "help me plz", "plz help me !!!"]),
        "plz help me",
    ),
]

FIXTURE_LABELS = {
    "You are funny .": StyleLabel.FORMAL,
    "Please help me .": StyleLabel.FORMAL,
    "u r funny lol": StyleLabel.INFORMAL,
    "plz help me": StyleLabel.FORMAL,
}


class HarmonicMeanTest(unittest.TestCase):
    def test_reported_values(self):
        test_cases = [
            {"acc": 0.577, "bleu": 0.859, "hm": 0.690},
            {"acc": 0.542, "bleu": 0.923, "hm": 0.683},
            {"acc": 0.745, "bleu": 0.937, "hm": 0.830},
        ]
        for case in test_cases:
            with self.subTest(**case):
                self.assertAlmostEqual(harmonic_mean(case["acc"], case["bleu"]), case["hm"], delta=5e-4)

    def test_symmetry_and_ordering(self):
        rng = np.random.default_rng(0)
        for a, b in rng.random((200, 2)):
            hm = harmonic_mean(a, b)
            self.assertAlmostEqual(harmonic_mean(b, a), hm, delta=1e-15)
            self.assertLessEqual(hm, (a + b) / 2 + 1e-15)
            self.assertLessEqual(hm, max(a, b) + 1e-15)
            self.assertGreaterEqual(hm, min(a, b) - 1e-15)
        for x in (0.0, 0.3, 1.0):
            self.assertAlmostEqual(harmonic_mean(x, x), x, delta=1e-15)

    def test_out_of_range(self):
        for acc, bleu in ((1.2, 0.5), (0.5, -0.1), (float("nan"), 0.5)):
            with self.subTest(acc=acc, bleu=bleu), self.assertRaises(RangeError):
                harmonic_mean(acc, bleu)


class StyleAccuracyTest(unittest.TestCase):
    def test_single_correct_item(self):
        classifier = FixedClassifier({"You are funny .": StyleLabel.FORMAL})
        self.assertEqual(style_accuracy([Sentence.from_text("You are funny .")], [StyleLabel.FORMAL], classifier), 1.0)

    def test_empty_output_is_wrong(self):
        classifier = FixedClassifier({})
        outputs = [Sentence(()), Sentence.from_text("lol")]
        self.assertEqual(style_accuracy(outputs, [StyleLabel.INFORMAL] * 2, classifier), 0.5)

    def test_no_outputs(self):
        with self.assertRaises(DataError):
            style_accuracy([], [], FixedClassifier({}))


class EvaluateOutputsTest(unittest.TestCase):
    def test_golden_report(self):
        items = [item for item, _ in FIXTURE]
        outputs = [Sentence.from_text(output) for _, output in FIXTURE]
        report = evaluate_outputs(items, outputs, FixedClassifier(FIXTURE_LABELS), {"model": "fixture"})
        expected = (TESTDATA / "report_golden.tsv").read_bytes()
        self.assertEqual(report.to_tsv().encode("utf-8"), expected)
        self.assertIn("1to0", report.to_text())

    def test_first_reference_bleu(self):
        items = [
            FIXTURE[2][0],
            _item("Please help me .", StyleLabel.FORMAL, ["plz help me !!!", "pls help me .", "a", "b"]),
        ]
        outputs = [Sentence.from_text("u r funny lol"), Sentence.from_text("pls help me .")]
        report = evaluate_outputs(items, outputs, FixedClassifier({}))
        self.assertEqual(report.rows["1to0"].bleu, 1.0)
        self.assertAlmostEqual(report.rows["1to0"].bleu_first_ref, 2 ** -0.75, delta=1e-12)
        self.assertNotIn("0to1", report.rows)

    def test_reference_outputs_score_one(self):
        items = [item for item, _ in FIXTURE]
        outputs = [item.references[3] for item in items]
        report = evaluate_outputs(items, outputs, FixedClassifier({}))
        self.assertEqual(report.bleu, 1.0)

    def test_misaligned(self):
        with self.assertRaises(AlignmentError):
            evaluate_outputs([FIXTURE[0][0]], [], FixedClassifier({}))


class EvaluateSystemTest(unittest.TestCase):
    def test_deterministic(self):
        corpus = generate_synthetic_corpus(seed=0, n_train_pairs=4, n_eval_items=3, n_unpaired=4)
        vocab = build_vocabulary(corpus.sentences())
        config = ModelConfig(d_model=8, n_layers=1, n_heads=2, d_ff=16, context=64)
        model = MiniSeq2Seq(len(vocab), config, np.random.default_rng(0))
        cnn_config = ClassifierConfig(embed_dim=4, filter_widths=[2], n_filters=2)
        classifier = StyleClassifier(TextCNN(len(vocab), cnn_config, np.random.default_rng(0)), vocab).freeze()

        first, outputs = evaluate_system(model, vocab, corpus.test, classifier, batch_size=4)
        second, _ = evaluate_system(model, vocab, corpus.test, classifier, batch_size=2)
        self.assertEqual(first.to_tsv(), second.to_tsv())
        self.assertEqual(len(outputs), len(corpus.test))
        self.assertEqual(first.rows["all"].count, 6)
        self.assertTrue(math.isfinite(first.hm))


if __name__ == "__main__":
    unittest.main()
