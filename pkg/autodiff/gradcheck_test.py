import unittest

import numpy as np

from autodiff import Tensor, check_gradients, ops
from errors import ConfigError, DeterminismError


class CheckGradientsTest(unittest.TestCase):
    def test_quadratic_form(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(4, 4))
        matrix = Tensor(a @ a.T)
        x = Tensor(rng.normal(size=(4, 1)), requires_grad=True)

        def quadratic():
            return ops.sum(ops.matmul(ops.transpose(x), ops.matmul(matrix, x)))

        report = check_gradients(quadratic, {"x": x})
        self.assertLess(report.max_error, 1e-8)
        self.assertEqual(list(report.errors), ["x"])

    def test_softmax_cross_entropy_head(self):
        rng = np.random.default_rng(1)
        w = Tensor(rng.normal(size=(5, 3)), requires_grad=True)
        b = Tensor(rng.normal(size=3), requires_grad=True)
        x = Tensor(rng.normal(size=(6, 5)))
        targets = rng.integers(0, 3, size=6)

        report = check_gradients(
            lambda: ops.cross_entropy(ops.linear(x, w, b), targets), [w, b]
        )
        self.assertTrue(report.passed)
        self.assertLessEqual(report.max_error, 1e-4)

    def test_constant_function(self):
        x = Tensor(np.ones(3), requires_grad=True)
        report = check_gradients(lambda: ops.sum(Tensor(np.ones(2))), [x])
        self.assertEqual(report.max_error, 0.0)
        np.testing.assert_array_equal(x.grad, np.zeros(3))

    def test_non_deterministic_function(self):
        rng = np.random.default_rng(2)
        x = Tensor(np.ones(3), requires_grad=True)

        def noisy():
            return ops.sum(ops.mul(x, Tensor(rng.normal(size=3))))

        with self.assertRaises(DeterminismError):
            check_gradients(noisy, [x])

    def test_subsampled_entries(self):
        x = Tensor(np.random.default_rng(3).normal(size=(20, 20)), requires_grad=True)
        report = check_gradients(lambda: ops.sum(ops.gelu(x)), [x], max_entries=10)
        self.assertTrue(report.passed)

    def test_rejects_non_positive_step(self):
        x = Tensor(np.ones(1), requires_grad=True)
        with self.assertRaises(ConfigError):
            check_gradients(lambda: ops.sum(x), [x], h=0.0)


if __name__ == "__main__":
    unittest.main()
