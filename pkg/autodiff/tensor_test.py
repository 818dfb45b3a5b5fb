import unittest

import numpy as np

from autodiff import Tape, Tensor, backward, check_gradients, no_grad, ops
from errors import ShapeError


def _mlp(rng, sizes):
    weights = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(Tensor(rng.normal(size=(fan_in, fan_out)), requires_grad=True))
        weights.append(Tensor(rng.normal(size=fan_out), requires_grad=True))
    return weights


class BackwardTest(unittest.TestCase):
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        backward(ops.sum(x))
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_dot_gradient_is_twice_input(self):
        x = Tensor(np.array([0.5, -1.0, 2.0, 4.0]), requires_grad=True)
        backward(ops.dot(x, x))
        np.testing.assert_array_equal(x.grad, 2 * x.data)

    def test_three_layer_composite_matches_finite_differences(self):
        for trial in range(20):
            rng = np.random.default_rng(trial)
            sizes = [int(s) for s in rng.integers(1, 5, size=4)]
            params = _mlp(rng, sizes)
            x = Tensor(rng.normal(size=(3, sizes[0])))
            targets = rng.integers(0, sizes[-1], size=3)

            def loss(params=params, x=x, targets=targets):
                h = x
                for i in range(0, len(params) - 2, 2):
                    h = ops.gelu(ops.linear(h, params[i], params[i + 1]))
                logits = ops.linear(h, params[-2], params[-1])
                return ops.cross_entropy(logits, targets)

            report = check_gradients(loss, params)
            with self.subTest(trial=trial):
                self.assertTrue(report.passed, str(report))

    def test_disconnected_parameter_gets_zero_gradient(self):
        used = Tensor(np.ones(3), requires_grad=True)
        unused = Tensor(np.full((2, 2), 7.0), requires_grad=True)
        backward(ops.sum(ops.mul(used, used)), params=[used, unused])
        np.testing.assert_array_equal(unused.grad, np.zeros((2, 2)))
        np.testing.assert_array_equal(used.grad, 2 * np.ones(3))

    def test_non_scalar_loss(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with self.assertRaises(ShapeError):
            backward(ops.mul(x, x))

    def test_gradients_are_overwritten(self):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        backward(ops.sum(x))
        backward(ops.sum(x))
        np.testing.assert_array_equal(x.grad, np.ones(2))

    def test_reused_tensor_accumulates_within_one_pass(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        y = ops.add(ops.mul(x, x), x)
        backward(ops.sum(y))
        np.testing.assert_array_equal(x.grad, np.array([7.0]))

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with no_grad():
            y = ops.mul(x, x)
        self.assertTrue(y.is_leaf)
        self.assertFalse(y.requires_grad)


class TapeTest(unittest.TestCase):
    def _graph(self, seed):
        rng = np.random.default_rng(seed)
        w = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        x = Tensor(rng.normal(size=(2, 4)))
        out = ops.sum(ops.softmax(ops.matmul(x, w)) * ops.relu(ops.matmul(x, w)))
        return out, w

    def test_topological_order(self):
        out, _ = self._graph(0)
        tape = Tape.trace(out)
        position = {entry.output_id: i for i, entry in enumerate(tape)}
        for i, entry in enumerate(tape):
            for tensor in entry.inputs:
                if tensor.id in position:
                    self.assertLess(position[tensor.id], i)

    def test_replay_is_bit_identical(self):
        out, _ = self._graph(1)
        tape = Tape.trace(out)
        first = tape.replay()
        second = tape.replay()
        self.assertEqual(first.tobytes(), second.tobytes())
        self.assertEqual(first.tobytes(), out.data.tobytes())

    def test_identical_inputs_give_identical_outputs(self):
        a, _ = self._graph(2)
        b, _ = self._graph(2)
        self.assertEqual(a.data.tobytes(), b.data.tobytes())

    def test_replay_follows_leaf_changes(self):
        out, w = self._graph(3)
        tape = Tape.trace(out)
        self.assertIn(w, tape.leaves())
        w.data = w.data * 2.0
        self.assertNotEqual(tape.replay().tobytes(), out.data.tobytes())


if __name__ == "__main__":
    unittest.main()
