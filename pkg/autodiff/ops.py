"""
Differentiable primitives and the composites built from them.

Each primitive is an Op subclass with a module-level singleton and a thin
function wrapper. Arguments that are never differentiated (integer ids,
targets, masks, axes) are passed as keyword attributes.
"""

import math
from typing import Any, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autodiff.tensor import Op, Tensor, as_tensor
from errors import ConfigError, ShapeError

MASK_VALUE = -1e9
GELU_C = math.sqrt(2.0 / math.pi)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """
    Sum out the dimensions numpy broadcasting added so grad matches shape.
    """

    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for dim, size in enumerate(shape):
        if size == 1 and grad.shape[dim] != 1:
            grad = grad.sum(axis=dim, keepdims=True)
    return grad


def _broadcast_check(name: str, a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not broadcast")


def _expand(grad: np.ndarray, shape: Tuple[int, ...], axis, keepdims: bool):
    if axis is not None and not keepdims:
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(a % len(shape) for a in axes)
        for a in sorted(axes):
            grad = np.expand_dims(grad, a)
    return np.broadcast_to(grad, shape).copy()


# Elementwise arithmetic


class Add(Op):
    name = "add"

    def check(self, a, b):
        _broadcast_check(self.name, a, b)

    def forward(self, a, b):
        return a + b, None

    def backward(self, grad, saved, a, b):
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


class Sub(Op):
    name = "sub"

    def check(self, a, b):
        _broadcast_check(self.name, a, b)

    def forward(self, a, b):
        return a - b, None

    def backward(self, grad, saved, a, b):
        return unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)


class Mul(Op):
    name = "mul"

    def check(self, a, b):
        _broadcast_check(self.name, a, b)

    def forward(self, a, b):
        return a * b, None

    def backward(self, grad, saved, a, b):
        return unbroadcast(grad * b, a.shape), unbroadcast(grad * a, b.shape)


class Neg(Op):
    name = "neg"

    def forward(self, a):
        return -a, None

    def backward(self, grad, saved, a):
        return (-grad,)


class MatMul(Op):
    """
    Batched matrix product with numpy broadcasting over leading dimensions.
    Both operands need at least two dimensions.
    """

    name = "matmul"

    def check(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError(f"matmul: needs 2+ dims, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul: inner sizes differ, {a.shape} @ {b.shape}")
        try:
            np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        except ValueError:
            raise ShapeError(f"matmul: batch dims {a.shape} and {b.shape} differ")

    def forward(self, a, b):
        return np.matmul(a, b), None

    def backward(self, grad, saved, a, b):
        grad_a = np.matmul(grad, np.swapaxes(b, -1, -2))
        grad_b = np.matmul(np.swapaxes(a, -1, -2), grad)
        return unbroadcast(grad_a, a.shape), unbroadcast(grad_b, b.shape)


# Reductions and reshaping


class Sum(Op):
    name = "sum"

    def forward(self, a, axis=None, keepdims=False):
        return np.sum(a, axis=axis, keepdims=keepdims), None

    def backward(self, grad, saved, a, axis=None, keepdims=False):
        return (_expand(grad, a.shape, axis, keepdims),)


class Mean(Op):
    name = "mean"

    def forward(self, a, axis=None, keepdims=False):
        return np.mean(a, axis=axis, keepdims=keepdims), None

    def backward(self, grad, saved, a, axis=None, keepdims=False):
        count = a.size / max(np.mean(a, axis=axis, keepdims=keepdims).size, 1)
        return (_expand(grad, a.shape, axis, keepdims) / count,)


class Reshape(Op):
    name = "reshape"

    def check(self, a, shape):
        try:
            np.empty(a.shape).reshape(shape)
        except ValueError:
            raise ShapeError(f"reshape: cannot view {a.shape} as {shape}")

    def forward(self, a, shape):
        return a.reshape(shape), None

    def backward(self, grad, saved, a, shape):
        return (grad.reshape(a.shape),)


class Transpose(Op):
    name = "transpose"

    def forward(self, a, axes=None):
        return np.transpose(a, axes), None

    def backward(self, grad, saved, a, axes=None):
        if axes is None:
            return (np.transpose(grad),)
        return (np.transpose(grad, np.argsort(axes)),)


class GetItem(Op):
    name = "getitem"

    def forward(self, a, index):
        return np.array(a[index], dtype=np.float64), None

    def backward(self, grad, saved, a, index):
        out = np.zeros_like(a)
        np.add.at(out, index, grad)
        return (out,)


class Concat(Op):
    name = "concat"

    def check(self, *arrays, axis=0):
        if not arrays:
            raise ShapeError("concat: nothing to concatenate")
        first = arrays[0]
        for other in arrays[1:]:
            if other.ndim != first.ndim:
                raise ShapeError("concat: rank mismatch")
            for dim in range(first.ndim):
                if dim != axis % first.ndim and other.shape[dim] != first.shape[dim]:
                    raise ShapeError(
                        f"concat: shapes {first.shape} and {other.shape} differ "
                        f"outside axis {axis}"
                    )

    def forward(self, *arrays, axis=0):
        return np.concatenate(arrays, axis=axis), None

    def backward(self, grad, saved, *arrays, axis=0):
        bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return tuple(np.split(grad, bounds, axis=axis))


class Take(Op):
    """
    Gather rows along the first axis. With a (V, D) table and integer ids this
    is the embedding lookup.
    """

    name = "take"

    def check(self, table, ids):
        ids = np.asarray(ids)
        if not np.issubdtype(ids.dtype, np.integer):
            raise ShapeError("take: ids must be integers")
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise ShapeError(f"take: id out of range for table of {table.shape[0]}")

    def forward(self, table, ids):
        return table[np.asarray(ids)], None

    def backward(self, grad, saved, table, ids):
        out = np.zeros_like(table)
        np.add.at(out, np.asarray(ids), grad)
        return (out,)


class Pick(Op):
    """
    Select one entry along the last axis per leading position:
    out[..., ] = x[..., index[...]].
    """

    name = "pick"

    def check(self, x, index):
        index = np.asarray(index)
        if index.shape != x.shape[:-1]:
            raise ShapeError(f"pick: index shape {index.shape} vs {x.shape[:-1]}")
        if index.size and (index.min() < 0 or index.max() >= x.shape[-1]):
            raise ShapeError("pick: index out of range")

    def forward(self, x, index):
        index = np.asarray(index)[..., None]
        return np.take_along_axis(x, index, axis=-1)[..., 0], None

    def backward(self, grad, saved, x, index):
        out = np.zeros_like(x)
        np.put_along_axis(out, np.asarray(index)[..., None], grad[..., None], axis=-1)
        return (out,)


# Nonlinearities and normalisation


class ReLU(Op):
    name = "relu"

    def forward(self, a):
        return np.maximum(a, 0.0), None

    def backward(self, grad, saved, a):
        return (grad * (a > 0),)


class GELU(Op):
    """
    The tanh approximation used by GPT-2.
    """

    name = "gelu"

    def forward(self, a):
        inner = GELU_C * (a + 0.044715 * a**3)
        t = np.tanh(inner)
        return 0.5 * a * (1.0 + t), t

    def backward(self, grad, t, a):
        d_inner = GELU_C * (1.0 + 3.0 * 0.044715 * a**2)
        local = 0.5 * (1.0 + t) + 0.5 * a * (1.0 - t**2) * d_inner
        return (grad * local,)


class LayerNorm(Op):
    name = "layer_norm"

    def check(self, x, gamma, beta, eps=1e-5):
        if gamma.shape != x.shape[-1:] or beta.shape != x.shape[-1:]:
            raise ShapeError(
                f"layer_norm: gamma/beta {gamma.shape}/{beta.shape} vs {x.shape}"
            )

    def forward(self, x, gamma, beta, eps=1e-5):
        mu = x.mean(axis=-1, keepdims=True)
        var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x - mu) * inv_std
        return x_hat * gamma + beta, (x_hat, inv_std)

    def backward(self, grad, saved, x, gamma, beta, eps=1e-5):
        x_hat, inv_std = saved
        lead = tuple(range(x.ndim - 1))
        grad_gamma = (grad * x_hat).sum(axis=lead)
        grad_beta = grad.sum(axis=lead)
        d_hat = grad * gamma
        grad_x = inv_std * (
            d_hat
            - d_hat.mean(axis=-1, keepdims=True)
            - x_hat * (d_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta


def _log_softmax(a: np.ndarray, axis: int) -> np.ndarray:
    shifted = a - a.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


class Softmax(Op):
    name = "softmax"

    def forward(self, a, axis=-1):
        shifted = np.exp(a - a.max(axis=axis, keepdims=True))
        out = shifted / shifted.sum(axis=axis, keepdims=True)
        return out, out

    def backward(self, grad, out, a, axis=-1):
        return (out * (grad - (grad * out).sum(axis=axis, keepdims=True)),)


class LogSoftmax(Op):
    name = "log_softmax"

    def forward(self, a, axis=-1):
        out = _log_softmax(a, axis)
        return out, out

    def backward(self, grad, out, a, axis=-1):
        return (grad - np.exp(out) * grad.sum(axis=axis, keepdims=True),)


class CrossEntropy(Op):
    """
    Weighted negative log-likelihood of integer targets:
    sum_i weights[i] * -log softmax(logits[i])[targets[i]].

    Mean reduction is weights = mask / mask.sum().
    """

    name = "cross_entropy"

    def check(self, logits, targets, weights):
        targets = np.asarray(targets)
        weights = np.asarray(weights)
        if logits.ndim != 2:
            raise ShapeError(f"cross_entropy: logits must be (N, V), got {logits.shape}")
        if targets.shape != (logits.shape[0],) or weights.shape != targets.shape:
            raise ShapeError(
                f"cross_entropy: targets {targets.shape} / weights {weights.shape} "
                f"vs logits {logits.shape}"
            )
        if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
            raise ShapeError("cross_entropy: target id out of range")

    def forward(self, logits, targets, weights):
        targets = np.asarray(targets)
        log_probs = _log_softmax(logits, axis=-1)
        picked = log_probs[np.arange(len(targets)), targets]
        return np.array(-(np.asarray(weights) * picked).sum()), log_probs

    def backward(self, grad, log_probs, logits, targets, weights):
        targets = np.asarray(targets)
        local = np.exp(log_probs)
        local[np.arange(len(targets)), targets] -= 1.0
        return (grad * np.asarray(weights)[:, None] * local,)


class Conv1d(Op):
    """
    Valid 1-D convolution over time.

    x: (B, T, E), weight: (W, E, F), bias: (F,) -> (B, T - W + 1, F).
    """

    name = "conv1d"

    def check(self, x, weight, bias):
        if x.ndim != 3 or weight.ndim != 3:
            raise ShapeError(f"conv1d: x {x.shape}, weight {weight.shape}")
        width, embed, filters = weight.shape
        if x.shape[2] != embed or bias.shape != (filters,):
            raise ShapeError(f"conv1d: x {x.shape} vs weight {weight.shape}")
        if x.shape[1] < width:
            raise ShapeError(f"conv1d: sequence of {x.shape[1]} shorter than width {width}")

    def forward(self, x, weight, bias):
        width, embed, filters = weight.shape
        windows = sliding_window_view(x, width, axis=1)  # (B, L, E, W)
        windows = np.swapaxes(windows, 2, 3).reshape(x.shape[0], -1, width * embed)
        out = windows @ weight.reshape(width * embed, filters) + bias
        return out, windows

    def backward(self, grad, windows, x, weight, bias):
        width, embed, filters = weight.shape
        batch, length, _ = grad.shape
        grad_w = np.einsum("blk,blf->kf", windows, grad).reshape(weight.shape)
        grad_b = grad.sum(axis=(0, 1))
        grad_win = (grad @ weight.reshape(width * embed, filters).T).reshape(
            batch, length, width, embed
        )
        grad_x = np.zeros_like(x)
        for k in range(width):
            grad_x[:, k : k + length, :] += grad_win[:, :, k, :]
        return grad_x, grad_w, grad_b


class MaxOverTime(Op):
    """
    Max-pool (B, T, F) over T, restricted to positions where valid is True.
    Every row needs at least one valid position.
    """

    name = "max_over_time"

    def check(self, x, valid):
        valid = np.asarray(valid, dtype=bool)
        if x.ndim != 3 or valid.shape != x.shape[:2]:
            raise ShapeError(f"max_over_time: x {x.shape}, valid {valid.shape}")
        if not valid.any(axis=1).all():
            raise ShapeError("max_over_time: a row has no valid position")

    def forward(self, x, valid):
        valid = np.asarray(valid, dtype=bool)
        masked = np.where(valid[:, :, None], x, -np.inf)
        index = masked.argmax(axis=1)  # (B, F)
        out = np.take_along_axis(x, index[:, None, :], axis=1)[:, 0, :]
        return out, index

    def backward(self, grad, index, x, valid):
        out = np.zeros_like(x)
        np.put_along_axis(out, index[:, None, :], grad[:, None, :], axis=1)
        return (out,)


add = Add()
sub = Sub()
mul = Mul()
neg = Neg()
matmul = MatMul()
relu = ReLU()
gelu = GELU()

_sum = Sum()
_mean = Mean()
_reshape = Reshape()
_transpose = Transpose()
_getitem = GetItem()
_concat = Concat()
_take = Take()
_pick = Pick()
_layer_norm = LayerNorm()
_softmax = Softmax()
_log_softmax_op = LogSoftmax()
_cross_entropy = CrossEntropy()
_conv1d = Conv1d()
_max_over_time = MaxOverTime()


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return _sum(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    return _mean(x, axis=axis, keepdims=keepdims)


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    return _reshape(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Optional[Tuple[int, ...]] = None) -> Tensor:
    return _transpose(x, axes=axes)


def swap_last(x: Tensor) -> Tensor:
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return _transpose(x, axes=tuple(axes))


def getitem(x: Tensor, index: Any) -> Tensor:
    return _getitem(x, index=index)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return _concat(*tensors, axis=axis)


def take(table: Tensor, ids: Any) -> Tensor:
    return _take(table, ids=np.asarray(ids))


def embedding(table: Tensor, ids: Any) -> Tensor:
    return take(table, ids)


def pick(x: Tensor, index: Any) -> Tensor:
    return _pick(x, index=np.asarray(index))


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    return _layer_norm(x, gamma, beta, eps=eps)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return _softmax(x, axis=axis)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return _log_softmax_op(x, axis=axis)


def cross_entropy(
    logits: Tensor,
    targets: Any,
    weights: Optional[Any] = None,
) -> Tensor:
    """
    Weighted NLL of integer targets. Without weights the result is the mean.
    """

    targets = np.asarray(targets)
    if weights is None:
        weights = np.full(targets.shape, 1.0 / max(len(targets), 1))
    return _cross_entropy(
        logits, targets=targets, weights=np.asarray(weights, dtype=np.float64)
    )


def conv1d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return _conv1d(x, weight, bias)


def max_over_time(x: Tensor, valid: Any) -> Tensor:
    return _max_over_time(x, valid=np.asarray(valid, dtype=bool))


# Composites


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight) if x.ndim >= 2 else matmul(reshape(x, (1, -1)), weight)
    if bias is not None:
        out = add(out, bias)
    return out


def dot(a: Tensor, b: Tensor) -> Tensor:
    return sum(mul(a, b))


def scale(x: Tensor, factor: float) -> Tensor:
    return mul(x, as_tensor(float(factor)))


def scaled_dot_product_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """
    softmax(q k^T / sqrt(d) + mask) v, built from primitives.

    mask is an additive array broadcastable to the score shape, 0 where a key
    is visible and MASK_VALUE where it is not.
    """

    scores = scale(matmul(q, swap_last(k)), 1.0 / math.sqrt(q.shape[-1]))
    if mask is not None:
        scores = add(scores, Tensor(mask))
    return matmul(softmax(scores, axis=-1), v)


def causal_mask(length: int) -> np.ndarray:
    """
    (length, length) additive mask letting position i see keys <= i.
    """

    upper = np.triu(np.ones((length, length), dtype=bool), k=1)
    return np.where(upper, MASK_VALUE, 0.0)


def key_padding_mask(key_valid: np.ndarray) -> np.ndarray:
    """
    (B, 1, 1, S) additive mask hiding keys where key_valid is False.
    """

    key_valid = np.asarray(key_valid, dtype=bool)
    return np.where(key_valid, 0.0, MASK_VALUE)[:, None, None, :]


PRIMITIVES = {
    op.name: op
    for op in (
        add,
        sub,
        mul,
        neg,
        matmul,
        relu,
        gelu,
        _sum,
        _mean,
        _reshape,
        _transpose,
        _getitem,
        _concat,
        _take,
        _pick,
        _layer_norm,
        _softmax,
        _log_softmax_op,
        _cross_entropy,
        _conv1d,
        _max_over_time,
    )
}


def forward(op_kind: str, inputs: Sequence[Tensor], **attrs: Any) -> Tensor:
    """
    Apply the primitive named op_kind, e.g. forward("matmul", [a, b]).

    Raises:
        ConfigError: If no primitive has that name.
    """

    if op_kind not in PRIMITIVES:
        raise ConfigError(f"unknown primitive '{op_kind}'")
    return PRIMITIVES[op_kind](*inputs, **attrs)
