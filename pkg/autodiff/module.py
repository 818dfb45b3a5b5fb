"""
Parameter containers for the models built on the autodiff core.
"""

from typing import Dict, Iterator, List, Tuple

import numpy as np

from autodiff.tensor import Tensor
from errors import ShapeError


class Module:
    """
    Holds named leaf tensors and child modules, in registration order.
    Parameter names are dotted paths ("blocks.0.attn.w_q").
    """

    def __init__(self):
        self._parameters: Dict[str, Tensor] = {}
        self._modules: Dict[str, "Module"] = {}

    def parameter(self, name: str, data: np.ndarray) -> Tensor:
        tensor = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        self._parameters[name] = tensor
        return tensor

    def submodule(self, name: str, module: "Module") -> "Module":
        self._modules[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._parameters.items():
            yield prefix + name, tensor
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix=f"{prefix}{name}.")

    def parameters(self) -> List[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy arrays into the parameters. Names and shapes must match exactly.

        Raises:
            ShapeError: On a missing, unexpected or mis-shaped entry.
        """

        named = dict(self.named_parameters())
        if set(named) != set(state):
            missing = sorted(set(named) - set(state))
            extra = sorted(set(state) - set(named))
            raise ShapeError(f"state mismatch, missing {missing}, unexpected {extra}")
        for name, tensor in named.items():
            array = np.asarray(state[name], dtype=np.float64)
            if array.shape != tensor.shape:
                raise ShapeError(f"{name}: {array.shape} vs {tensor.shape}")
            tensor.data = array.copy()

    def freeze(self) -> None:
        for tensor in self.parameters():
            tensor.requires_grad = False
            tensor.grad = None

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())


def normal_init(rng: np.random.Generator, shape: Tuple[int, ...], std: float):
    return rng.normal(0.0, std, size=shape)
