"""
Reverse-mode automatic differentiation over float64 numpy arrays.

Every primitive application records a TapeEntry on the tensor it produces.
backward() collects the entries reachable from a scalar loss into a Tape,
ordered by creation id (an input is always created before its consumer), and
walks that Tape in reverse. The tape is rebuilt on every forward pass, so
sequence lengths may change from one batch to the next.

Typical usage:
    w = Tensor(np.ones((3, 2)), requires_grad=True)
    loss = ops.sum(ops.matmul(x, w))
    backward(loss)
    w.grad  # same shape as w
"""

import contextlib
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import NumericsError, ShapeError

logger = logging.getLogger(__name__)

_tensor_ids = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """
    Disable tape recording inside the block. Used for decoding, reward
    computation and evaluation, where nothing is differentiated.
    """

    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


class Op:
    """
    Base class for differentiable primitives.

    forward() receives the raw arrays of the input tensors plus keyword
    attributes (integer ids, masks, axes) that are never differentiated. It
    returns the output array and whatever it wants to keep for backward().

    backward() receives the gradient of the loss with respect to the output
    and returns one gradient per input tensor (None when an input gets none).
    """

    name = "op"

    def check(self, *inputs: np.ndarray, **attrs: Any) -> None:
        """
        Validate input shapes and attributes. Raises ShapeError.
        """

    def forward(self, *inputs: np.ndarray, **attrs: Any) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError(f"{self.name}: forward not implemented")

    def backward(
        self,
        grad: np.ndarray,
        saved: Any,
        *inputs: np.ndarray,
        **attrs: Any,
    ) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{self.name}: backward not implemented")

    def __call__(self, *tensors: "Tensor", **attrs: Any) -> "Tensor":
        return apply(self, tensors, attrs)

    def __repr__(self) -> str:
        return f"<op {self.name}>"


@dataclass
class TapeEntry:
    """
    One primitive application: op kind, input tensors, output id and the
    activations the op saved for its backward pass.
    """

    op: Op
    inputs: Tuple["Tensor", ...]
    output_id: int
    attrs: Dict[str, Any] = field(default_factory=dict)
    saved: Any = None


class Tensor:
    """
    A dense float64 array that may take part in differentiation.

    Leaves created with requires_grad=True receive a .grad buffer of the same
    shape after backward(). Op outputs carry the TapeEntry that produced them.
    """

    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.entry: Optional[TapeEntry] = None
        self.id = next(_tensor_ids)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def values(self) -> List[float]:
        """
        Row-major list of the tensor's values.
        """

        return self.data.ravel().tolist()

    @property
    def is_leaf(self) -> bool:
        return self.entry is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self) -> int:
        return len(self.data)

    # Operators delegate to the primitives in autodiff.ops.
    def __add__(self, other: Any) -> "Tensor":
        return ops.add(self, as_tensor(other))

    def __radd__(self, other: Any) -> "Tensor":
        return ops.add(as_tensor(other), self)

    def __sub__(self, other: Any) -> "Tensor":
        return ops.sub(self, as_tensor(other))

    def __rsub__(self, other: Any) -> "Tensor":
        return ops.sub(as_tensor(other), self)

    def __mul__(self, other: Any) -> "Tensor":
        return ops.mul(self, as_tensor(other))

    def __rmul__(self, other: Any) -> "Tensor":
        return ops.mul(as_tensor(other), self)

    def __truediv__(self, other: float) -> "Tensor":
        if isinstance(other, Tensor):
            raise TypeError("division is only defined by a constant")
        return ops.mul(self, as_tensor(1.0 / float(other)))

    def __neg__(self) -> "Tensor":
        return ops.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return ops.getitem(self, index=index)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape=tuple(shape))

    def transpose(self, *axes: int) -> "Tensor":
        return ops.transpose(self, axes=tuple(axes) if axes else None)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def apply(op: Op, tensors: Sequence[Tensor], attrs: Dict[str, Any]) -> Tensor:
    """
    Run one primitive forward and record it on the output's tape entry.
    """

    arrays = tuple(t.data for t in tensors)
    for array in arrays:
        if not np.isfinite(array).all():
            raise NumericsError(f"{op.name}: non-finite input")
    op.check(*arrays, **attrs)
    out, saved = op.forward(*arrays, **attrs)
    if not np.isfinite(out).all():
        raise NumericsError(f"{op.name}: produced a non-finite value")

    requires_grad = _grad_enabled and any(t.requires_grad for t in tensors)
    result = Tensor(out, requires_grad=requires_grad)
    if requires_grad:
        result.entry = TapeEntry(
            op=op,
            inputs=tuple(tensors),
            output_id=result.id,
            attrs=attrs,
            saved=saved,
        )
    return result


class Tape:
    """
    The ordered record of primitive applications that produced a tensor.

    Entries are in topological order: every input id precedes the output id
    of its consumer.
    """

    def __init__(self, entries: List[TapeEntry], root: Tensor):
        self.entries = entries
        self.root = root

    @classmethod
    def trace(cls, root: Tensor) -> "Tape":
        entries: Dict[int, TapeEntry] = {}
        stack = [root]
        seen = set()
        while stack:
            tensor = stack.pop()
            if tensor.id in seen:
                continue
            seen.add(tensor.id)
            if tensor.entry is None:
                continue
            entries[tensor.id] = tensor.entry
            stack.extend(tensor.entry.inputs)
        ordered = [entries[key] for key in sorted(entries)]
        return cls(ordered, root)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TapeEntry]:
        return iter(self.entries)

    def leaves(self) -> List[Tensor]:
        """
        Input tensors that no entry on the tape produced, in id order.
        """

        produced = {entry.output_id for entry in self.entries}
        found: Dict[int, Tensor] = {}
        for entry in self.entries:
            for tensor in entry.inputs:
                if tensor.id not in produced:
                    found[tensor.id] = tensor
        return [found[key] for key in sorted(found)]

    def replay(self) -> np.ndarray:
        """
        Re-execute every entry from the current leaf values and return the
        root's recomputed value. Identical leaves give bit-identical output.
        """

        values: Dict[int, np.ndarray] = {}
        for entry in self.entries:
            arrays = tuple(values.get(t.id, t.data) for t in entry.inputs)
            out, _ = entry.op.forward(*arrays, **entry.attrs)
            values[entry.output_id] = np.asarray(out, dtype=np.float64)
        return values.get(self.root.id, self.root.data)


def backward(loss: Tensor, params: Iterable[Tensor] = ()) -> None:
    """
    Populate .grad on every requires_grad leaf that contributes to loss.

    Grad buffers are overwritten, not accumulated. Tensors passed in params
    that the loss does not reach receive an all-zero grad.
    """

    if loss.data.size != 1 or loss.ndim > 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    for param in params:
        param.grad = np.zeros_like(param.data)

    if loss.entry is None:
        if loss.requires_grad:
            loss.grad = np.ones_like(loss.data)
        return

    tape = Tape.trace(loss)
    grads: Dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    for entry in reversed(tape.entries):
        grad = grads.pop(entry.output_id, None)
        if grad is None:
            continue
        arrays = tuple(t.data for t in entry.inputs)
        input_grads = entry.op.backward(grad, entry.saved, *arrays, **entry.attrs)
        for tensor, input_grad in zip(entry.inputs, input_grads):
            if input_grad is None or not tensor.requires_grad:
                continue
            if input_grad.shape != tensor.shape:
                raise ShapeError(
                    f"{entry.op.name}: gradient shape {input_grad.shape} does not "
                    f"match input shape {tensor.shape}"
                )
            if tensor.id in grads:
                grads[tensor.id] = grads[tensor.id] + input_grad
            else:
                grads[tensor.id] = input_grad

    for leaf in tape.leaves():
        if not leaf.requires_grad:
            continue
        leaf.grad = grads.get(leaf.id, np.zeros_like(leaf.data))


from autodiff import ops  # noqa: E402  (ops needs Tensor and Op defined above)
