import os
import sys
import tempfile
import types
import unittest
from unittest import mock

import numpy as np

from classifier import ClassifierConfig, StyleClassifier, TextCNN, train_textcnn
from corpus import build_vocabulary, generate_synthetic_corpus, subset_fraction
from errors import ConfigError, DataError, NumericsError
from metrics import evaluate_system
from models import MiniSeq2Seq, ModelConfig, PretrainConfig, pretrain_denoising
from trainer import TrainConfig, build_generator, early_stopping_check, finetune, load_training_state
from trainer.checkpoint import decode_checkpoint, encode_checkpoint

TINY = ModelConfig(d_model=8, n_layers=1, n_heads=2, d_ff=16, context=64, init_std=0.1)


def _fixture():
    corpus = generate_synthetic_corpus(seed=0, n_train_pairs=8, n_eval_items=2, n_unpaired=8)
    vocab = build_vocabulary(corpus.sentences())
    cnn = TextCNN(len(vocab), ClassifierConfig(embed_dim=4, filter_widths=[2], n_filters=3), np.random.default_rng(0))
    classifier = StyleClassifier(cnn, vocab).freeze()
    return corpus, vocab, classifier


def _config(**overrides) -> TrainConfig:
    values = {"model": "seq2seq-scratch", "sizes": TINY, "lr": 1e-3, "batch_size": 4, "max_epochs": 2, "patience": 2}
    return TrainConfig(**{**values, **overrides})


class EarlyStoppingTest(unittest.TestCase):
    def test_patience_rule(self):
        test_cases = [
            {"history": [0.3, 0.4, 0.5], "stop": False, "best": 3},
            {"history": [0.5, 0.5, 0.5, 0.5], "stop": True, "best": 1},
            {"history": [0.5, 0.6, 0.6, 0.6, 0.6], "stop": True, "best": 2},
            {"history": [0.5, 0.6, 0.6, 0.6], "stop": False, "best": 2},
        ]
        for case in test_cases:
            with self.subTest(**case):
                decision = early_stopping_check(case["history"], 3)
                self.assertEqual(decision.stop, case["stop"])
                self.assertEqual(decision.best_epoch, case["best"])


class FinetuneTest(unittest.TestCase):
    def setUp(self):
        self.corpus, self.vocab, self.classifier = _fixture()
        self.pairs = self.corpus.training_pairs("both")

    def _run(self, config: TrainConfig):
        model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
        result = finetune(
            model, self.vocab, self.pairs, self.corpus.valid, self.classifier, config, np.random.default_rng(1)
        )
        return model, result

    def test_deterministic(self):
        for rewards in ([], ["sc", "bleu"]):
            with self.subTest(rewards=rewards):
                first_model, first = self._run(_config(rewards=rewards))
                second_model, second = self._run(_config(rewards=rewards))
                self.assertEqual(first.metrics_tsv(), second.metrics_tsv())
                self.assertEqual(encode_checkpoint(first_model, self.vocab), encode_checkpoint(second_model, self.vocab))

    def test_zero_weights_match_plain_finetuning(self):
        _, plain = self._run(_config())
        _, zero = self._run(_config(rewards=["sc", "bleu"], lambda_cls=0.0, lambda_bleu=0.0))
        self.assertEqual(plain.metrics_tsv(), zero.metrics_tsv())

    def test_metrics_log(self):
        _, result = self._run(_config(rewards=["sc"], max_epochs=1))
        keys = [key for key, _ in result.records]
        for key in ("epoch1.loss", "epoch1.base_loss", "epoch1.r_cls", "epoch1.valid_hm", "best_epoch", "steps"):
            self.assertIn(key, keys)
        self.assertEqual(dict(result.records)["steps"], str(result.steps))
        self.assertEqual(result.steps, 4)
        self.assertTrue(all("\t" not in key for key in keys))

    def test_returns_the_best_epoch(self):
        model, result = self._run(_config(max_epochs=3, patience=3))
        self.assertEqual(result.best_hm, max(result.history))
        self.assertEqual(result.best_epoch, result.history.index(max(result.history)) + 1)
        report, _ = evaluate_system(model, self.vocab, self.corpus.valid, self.classifier, batch_size=4)
        self.assertEqual(report.hm, result.best_hm)

    def test_stops_after_patience_epochs(self):
        snapshots = []

        def flat_report(model, *args, **kwargs):
            snapshots.append(model.state_dict())
            return types.SimpleNamespace(bleu=0.5, acc=0.5, hm=0.5), []

        model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
        with mock.patch.object(sys.modules["trainer.finetune"], "evaluate_system", side_effect=flat_report):
            result = finetune(
                model,
                self.vocab,
                self.pairs,
                self.corpus.valid,
                self.classifier,
                _config(max_epochs=10, patience=3),
                np.random.default_rng(1),
            )
        self.assertEqual(len(result.history), 4)
        self.assertEqual(result.best_epoch, 1)
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(value, snapshots[0][name])
        self.assertTrue(any(not np.array_equal(snapshots[0][n], snapshots[-1][n]) for n in snapshots[0]))

    def test_classifier_is_untouched(self):
        before = encode_checkpoint(self.classifier)
        self._run(_config(rewards=["sc", "bleu"]))
        self.assertEqual(encode_checkpoint(self.classifier), before)

    def test_errors(self):
        model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
        with self.assertRaises(DataError):
            finetune(model, self.vocab, [], self.corpus.valid, self.classifier, _config())
        with self.assertRaises(DataError):
            finetune(model, self.vocab, self.pairs, [], self.classifier, _config())

        thawed = StyleClassifier(TextCNN(len(self.vocab), self.classifier.config, np.random.default_rng(0)), self.vocab)
        with self.assertRaises(ConfigError):
            finetune(model, self.vocab, self.pairs, self.corpus.valid, thawed, _config())

        model.parameters()[0].data[:] = np.nan
        with self.assertRaises(NumericsError) as ctx:
            finetune(model, self.vocab, self.pairs, self.corpus.valid, self.classifier, _config())
        self.assertIn("at step 1 (epoch 1)", str(ctx.exception))

    def test_resume_matches_an_uninterrupted_run(self):
        config = _config(rewards=["sc", "bleu"], max_epochs=3, patience=3)
        straight_model, straight = self._run(config)

        calls = []

        def crash_on_second_epoch(*args, **kwargs):
            calls.append(1)
            if len(calls) == 2:
                raise KeyboardInterrupt
            return evaluate_system(*args, **kwargs)

        with tempfile.TemporaryDirectory() as tmp:
            state_path = os.path.join(tmp, "train_state.npz")
            model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
            finetune_module = sys.modules["trainer.finetune"]
            with mock.patch.object(finetune_module, "evaluate_system", side_effect=crash_on_second_epoch):
                with self.assertRaises(KeyboardInterrupt):
                    finetune(
                        model,
                        self.vocab,
                        self.pairs,
                        self.corpus.valid,
                        self.classifier,
                        config,
                        np.random.default_rng(1),
                        state_path=state_path,
                    )
            saved = load_training_state(state_path)
            self.assertEqual(saved.epoch, 1)

            resumed_model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
            resumed = finetune(
                resumed_model,
                self.vocab,
                self.pairs,
                self.corpus.valid,
                self.classifier,
                config,
                np.random.default_rng(99),
                state_path=state_path,
                resume=saved,
            )

        self.assertEqual(resumed.metrics_tsv(), straight.metrics_tsv())
        self.assertEqual(resumed.steps, straight.steps)
        self.assertEqual(encode_checkpoint(resumed_model, self.vocab), encode_checkpoint(straight_model, self.vocab))

    def test_resume_refuses_another_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            state_path = os.path.join(tmp, "train_state.npz")
            model = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(0))
            finetune(
                model,
                self.vocab,
                self.pairs,
                self.corpus.valid,
                self.classifier,
                _config(max_epochs=1),
                state_path=state_path,
            )
            saved = load_training_state(state_path)
        with self.assertRaises(ConfigError):
            finetune(
                model, self.vocab, self.pairs, self.corpus.valid, self.classifier, _config(lr=2e-3), resume=saved
            )


class BuildGeneratorTest(unittest.TestCase):
    def setUp(self):
        self.corpus, self.vocab, _ = _fixture()

    def test_scratch_model(self):
        model = build_generator(_config(), self.vocab)
        self.assertEqual(model.family, "seq2seq")
        self.assertEqual(model.config, TINY)

    def test_pretrained_models(self):
        pretrained = MiniSeq2Seq(len(self.vocab), TINY, np.random.default_rng(3))
        init = decode_checkpoint(encode_checkpoint(pretrained, self.vocab))
        model = build_generator(_config(model="seq2seq"), self.vocab, init)
        for name, value in model.state_dict().items():
            np.testing.assert_array_equal(value, pretrained.state_dict()[name])

        with self.assertRaises(ConfigError):
            build_generator(_config(model="seq2seq"), self.vocab)
        with self.assertRaises(ConfigError):
            build_generator(_config(model="causal"), self.vocab, init)


class TrendTest(unittest.TestCase):
    @unittest.skipUnless(os.environ.get("FORMALRL_SLOW"), "slow: pretraining and two fine-tuning runs")
    def test_pretrained_on_a_tenth_beats_scratch_on_everything(self):
        corpus = generate_synthetic_corpus(seed=0, n_train_pairs=400, n_eval_items=30, n_unpaired=2000)
        vocab = build_vocabulary(corpus.sentences())
        classifier = train_textcnn(corpus.labeled_sentences(), ClassifierConfig(seed=0), vocab).classifier
        sizes = ModelConfig(d_model=32, n_layers=2, n_heads=4, d_ff=64, context=64)
        pairs = corpus.training_pairs("both")

        pretrained = MiniSeq2Seq(len(vocab), sizes, np.random.default_rng(0))
        unpaired = list(corpus.unpaired_formal + corpus.unpaired_informal)
        pretrain_denoising(unpaired, pretrained, vocab, PretrainConfig(lr=3e-3, max_epochs=10, seed=0))
        config = TrainConfig(model="seq2seq", sizes=sizes, lr=1e-3, max_epochs=15, seed=0, fraction=0.1)
        finetune(pretrained, vocab, subset_fraction(pairs, 0.1, 0), corpus.valid, classifier, config, np.random.default_rng(0))

        scratch = MiniSeq2Seq(len(vocab), sizes, np.random.default_rng(0))
        scratch_config = config.model_copy(update={"model": "seq2seq-scratch", "fraction": 1.0})
        finetune(scratch, vocab, pairs, corpus.valid, classifier, scratch_config, np.random.default_rng(0))

        tuned, _ = evaluate_system(pretrained, vocab, corpus.test, classifier)
        baseline, _ = evaluate_system(scratch, vocab, corpus.test, classifier)
        self.assertGreater(tuned.bleu, baseline.bleu)

    @unittest.skipUnless(os.environ.get("FORMALRL_SLOW"), "slow: pretraining and two fine-tuning runs")
    def test_style_reward_raises_accuracy_on_a_tenth(self):
        corpus = generate_synthetic_corpus(seed=0, n_train_pairs=400, n_eval_items=30, n_unpaired=2000)
        vocab = build_vocabulary(corpus.sentences())
        classifier = train_textcnn(corpus.labeled_sentences(), ClassifierConfig(seed=0), vocab).classifier
        sizes = ModelConfig(d_model=32, n_layers=2, n_heads=4, d_ff=64, context=64)
        pairs = subset_fraction(corpus.training_pairs("both"), 0.1, 0)

        pretrained = MiniSeq2Seq(len(vocab), sizes, np.random.default_rng(0))
        unpaired = list(corpus.unpaired_formal + corpus.unpaired_informal)
        pretrain_denoising(unpaired, pretrained, vocab, PretrainConfig(lr=3e-3, max_epochs=10, seed=0))
        init = pretrained.state_dict()

        accuracy = {}
        for rewards in ([], ["sc"]):
            model = MiniSeq2Seq(len(vocab), sizes, np.random.default_rng(0))
            model.load_state_dict(init)
            config = TrainConfig(model="seq2seq", sizes=sizes, lr=1e-3, max_epochs=15, seed=0, fraction=0.1, rewards=rewards)
            finetune(model, vocab, pairs, corpus.valid, classifier, config, np.random.default_rng(0))
            report, _ = evaluate_system(model, vocab, corpus.test, classifier)
            accuracy[tuple(rewards)] = report.acc
        self.assertGreaterEqual(accuracy[("sc",)], accuracy[()] + 0.02)


if __name__ == "__main__":
    unittest.main()
