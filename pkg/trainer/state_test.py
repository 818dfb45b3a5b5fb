import tempfile
import unittest
from pathlib import Path

import numpy as np

from autodiff import AdamState
from errors import ConfigError, FormatError, IoError
from trainer import TrainingState, load_training_state, save_training_state


def _state() -> TrainingState:
    rng = np.random.default_rng(5)
    rng.random(3)
    params = {"token_embedding": rng.normal(size=(4, 3)), "ln_decoder.gamma": np.ones(3)}
    adam = AdamState(lr=5e-5, step=7, m=[rng.normal(size=(4, 3)), np.zeros(3)], v=[rng.random((4, 3)), np.ones(3)])
    return TrainingState(
        config_hash="abc",
        epoch=2,
        step=14,
        history=[0.25, 0.5],
        records=[("epoch1.loss", "1.000000000"), ("epoch2.loss", "0.500000000")],
        adam=adam,
        params=params,
        best_params={k: v * 2 for k, v in params.items()},
        rng_state=rng.bit_generator.state,
        stopped=True,
    )


class TrainingStateTest(unittest.TestCase):
    def test_save_and_load(self):
        state = _state()
        with tempfile.TemporaryDirectory() as tmp:
            path = save_training_state(state, Path(tmp) / "run" / "train_state.npz")
            self.assertFalse(path.with_name(path.name + ".partial").exists())
            loaded = load_training_state(path)

        for field in ("config_hash", "epoch", "step", "history", "records", "stopped", "rng_state"):
            with self.subTest(field=field):
                self.assertEqual(getattr(loaded, field), getattr(state, field))
        for name, value in state.params.items():
            self.assertEqual(loaded.params[name].tobytes(), value.tobytes())
            self.assertEqual(loaded.best_params[name].tobytes(), state.best_params[name].tobytes())
        self.assertEqual((loaded.adam.lr, loaded.adam.step), (5e-5, 7))
        for restored, original in zip(loaded.adam.m + loaded.adam.v, state.adam.m + state.adam.v):
            np.testing.assert_array_equal(restored, original)

    def test_restored_generator_continues_the_stream(self):
        rng = np.random.default_rng(11)
        rng.permutation(10)
        state = _state()
        state.rng_state = rng.bit_generator.state
        expected = rng.permutation(10)
        with tempfile.TemporaryDirectory() as tmp:
            loaded = load_training_state(save_training_state(state, Path(tmp) / "s.npz"))
        restored = np.random.default_rng(0)
        restored.bit_generator.state = loaded.rng_state
        np.testing.assert_array_equal(restored.permutation(10), expected)

    def test_check_config(self):
        state = _state()
        state.check_config("abc")
        with self.assertRaises(ConfigError):
            state.check_config("def")

    def test_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(IoError):
                load_training_state(Path(tmp) / "missing.npz")

            garbage = Path(tmp) / "garbage.npz"
            garbage.write_bytes(b"not an archive")
            with self.assertRaises(FormatError):
                load_training_state(garbage)

            no_meta = Path(tmp) / "no_meta.npz"
            np.savez(no_meta, x=np.zeros(2))
            with self.assertRaises(FormatError):
                load_training_state(no_meta)

            blocker = Path(tmp) / "blocker"
            blocker.write_text("", encoding="utf-8")
            with self.assertRaises(IoError):
                save_training_state(_state(), blocker / "train_state.npz")


if __name__ == "__main__":
    unittest.main()
