import math
import unittest

import numpy as np

from autodiff import Tensor, check_gradients
from corpus import PAD_ID, LMSequence, ParallelPair, S2SExample, Sentence, StyleLabel, build_vocabulary
from corpus import encode_lm_sequence, encode_s2s_pair
from errors import LengthError
from models import MiniCausalLM, MiniSeq2Seq, ModelConfig, causal_lm_loss, pad_rows, seq2seq_loss

TINY = ModelConfig(d_model=8, n_layers=1, n_heads=2, d_ff=16, context=16, init_std=0.3)


def _pairs():
    texts = [
        ("u r funny lol", "You are funny ."),
        ("plz help me", "Please help me ."),
        ("i think it is good", "I think it is good ."),
    ]
    return [
        ParallelPair(Sentence.from_text(s), Sentence.from_text(t), StyleLabel.INFORMAL)
        for s, t in texts
    ]


def _forced_logits(ids: np.ndarray, vocab_size: int, shift: int) -> Tensor:
    """
    Logits that put all mass on the token `shift` positions ahead.
    """

    batch, length = ids.shape
    logits = np.zeros((batch, length, vocab_size))
    for b in range(batch):
        for t in range(length - shift):
            logits[b, t, ids[b, t + shift]] = 1e3
    return Tensor(logits)


class CausalLossTest(unittest.TestCase):
    def setUp(self):
        self.pairs = _pairs()
        self.vocab = build_vocabulary([p.source for p in self.pairs] + [p.target for p in self.pairs])
        self.sequences = [encode_lm_sequence(p, self.vocab) for p in self.pairs]
        self.model = MiniCausalLM(len(self.vocab), TINY, np.random.default_rng(0))

    def test_uniform_predictor(self):
        self.model.token_embedding.data[:] = 0.0
        loss = causal_lm_loss(self.model, self.sequences)
        self.assertAlmostEqual(loss.item(), math.log(len(self.vocab)), delta=1e-9)

    def test_certain_predictor(self):
        self.model.logits = lambda ids: _forced_logits(ids, len(self.vocab), shift=1)
        self.assertAlmostEqual(causal_lm_loss(self.model, self.sequences).item(), 0.0, delta=1e-9)

    def test_two_token_enumeration(self):
        model = MiniCausalLM(2, TINY, np.random.default_rng(1))
        seq = LMSequence(
            ids=np.array([0, 1, 1, 0]),
            loss_mask=np.array([False, True, True, True]),
            sep_index=2,
        )
        logits = model.logits(seq.ids[None, :]).data[0]
        probs = np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True)
        expected = -np.mean([math.log(probs[t, seq.ids[t + 1]]) for t in range(3)])
        self.assertAlmostEqual(causal_lm_loss(model, seq).item(), expected, delta=1e-12)

    def test_mask_excludes_prefix(self):
        tagged = [
            ParallelPair(p.source, p.target, p.source_style, domain_tag="E&M") for p in self.pairs
        ]
        sequences = [encode_lm_sequence(p, self.vocab, use_tag=True) for p in tagged]

        def wrong_about_the_tag(ids):
            logits = _forced_logits(ids, len(self.vocab), shift=1)
            logits.data[:, 0, :] = 0.0
            logits.data[:, 0, PAD_ID] = 1e3
            return logits

        self.model.logits = wrong_about_the_tag
        self.assertAlmostEqual(causal_lm_loss(self.model, sequences).item(), 0.0, delta=1e-9)

    def test_loss_is_non_negative(self):
        rng = np.random.default_rng(2)
        for seed in range(5):
            model = MiniCausalLM(len(self.vocab), TINY, np.random.default_rng(seed))
            batch = [self.sequences[i] for i in rng.permutation(3)[:2]]
            self.assertGreaterEqual(causal_lm_loss(model, batch).item(), 0.0)

    def test_padding_does_not_change_a_row(self):
        alone = causal_lm_loss(self.model, self.sequences[1]).item()
        short, long_ = self.sequences[1], self.sequences[2]
        batched = causal_lm_loss(self.model, [short, long_]).item()
        n_short, n_long = int(short.loss_mask[1:].sum()), int(long_.loss_mask[1:].sum())
        other = causal_lm_loss(self.model, long_).item()
        self.assertAlmostEqual(batched, (alone * n_short + other * n_long) / (n_short + n_long), delta=1e-12)

    def test_overlong_sequence(self):
        long_pair = ParallelPair(
            Sentence(("lol",) * 10), Sentence(("lol",) * 10), StyleLabel.INFORMAL
        )
        with self.assertRaises(LengthError):
            causal_lm_loss(self.model, encode_lm_sequence(long_pair, self.vocab))

    def test_gradients(self):
        report = check_gradients(
            lambda: causal_lm_loss(self.model, self.sequences[:2]),
            dict(self.model.named_parameters()),
            max_entries=6,
        )
        self.assertTrue(report.passed, str(report))


class Seq2SeqLossTest(unittest.TestCase):
    def setUp(self):
        self.pairs = _pairs()
        self.vocab = build_vocabulary([p.source for p in self.pairs] + [p.target for p in self.pairs])
        self.examples = [encode_s2s_pair(p, self.vocab) for p in self.pairs]
        self.model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))

    def test_uniform_predictor(self):
        self.model.token_embedding.data[:] = 0.0
        loss = seq2seq_loss(self.model, self.examples)
        self.assertAlmostEqual(loss.item(), math.log(len(self.vocab)), delta=1e-9)

    def test_certain_predictor(self):
        def forced(source_ids, source_lengths, decoder_ids):
            targets, _ = pad_rows([ex.decoder_target for ex in self.examples])
            logits = np.zeros(targets.shape + (len(self.vocab),))
            for b in range(targets.shape[0]):
                logits[b, np.arange(targets.shape[1]), targets[b]] = 1e3
            return Tensor(logits)

        self.model.logits = forced
        self.assertAlmostEqual(seq2seq_loss(self.model, self.examples).item(), 0.0, delta=1e-9)

    def test_two_token_enumeration(self):
        model = MiniSeq2Seq(2, TINY, np.random.default_rng(1))
        example = S2SExample(
            encoder_ids=np.array([0, 1, 1]),
            decoder_input=np.array([0, 1]),
            decoder_target=np.array([1, 0]),
        )
        logits = model.logits(example.encoder_ids[None, :], np.array([3]), example.decoder_input[None, :]).data[0]
        probs = np.exp(logits) / np.exp(logits).sum(axis=-1, keepdims=True)
        expected = -np.mean([math.log(probs[t, example.decoder_target[t]]) for t in range(2)])
        self.assertAlmostEqual(seq2seq_loss(model, example).item(), expected, delta=1e-12)

    def test_overlong_sequence(self):
        long_pair = ParallelPair(Sentence(("lol",) * 20), Sentence(("lol",)), StyleLabel.INFORMAL)
        with self.assertRaises(LengthError):
            seq2seq_loss(self.model, encode_s2s_pair(long_pair, self.vocab))

    def test_gradients(self):
        report = check_gradients(
            lambda: seq2seq_loss(self.model, self.examples[:2]),
            dict(self.model.named_parameters()),
            max_entries=4,
        )
        self.assertTrue(report.passed, str(report))


if __name__ == "__main__":
    unittest.main()
