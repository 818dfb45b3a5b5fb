"""
Central finite-difference check of analytic gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from autodiff.tensor import Tensor, backward
from errors import ConfigError, DeterminismError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class GradientReport:
    """
    Per-parameter max of |analytic - numeric| / max(1, |numeric|).
    """

    errors: Dict[str, float] = field(default_factory=dict)
    tol: float = 1e-4

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol

    def __str__(self) -> str:
        lines = [f"{name}\t{err:.3e}" for name, err in self.errors.items()]
        return "\n".join(lines)


def _named(params: Union[Sequence[Tensor], Mapping[str, Tensor]]) -> Dict[str, Tensor]:
    if isinstance(params, Mapping):
        return dict(params)
    return {f"param{i}": p for i, p in enumerate(params)}


def _scalar(fn: Callable[[], Tensor]) -> float:
    out = fn()
    if out.data.size != 1:
        raise ShapeError(f"check_gradients needs a scalar function, got {out.shape}")
    return float(out.data.reshape(()))


def check_gradients(
    scalar_fn: Callable[[], Tensor],
    params: Union[Sequence[Tensor], Mapping[str, Tensor]],
    h: float = 1e-5,
    tol: float = 1e-4,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> GradientReport:
    """
    Compare backward() against central differences for every parameter.

    Args:
        scalar_fn: Rebuilds the forward pass and returns a scalar tensor.
        params: Leaf tensors to check, as a list or a name -> tensor mapping.
        h: Finite-difference step.
        tol: Tolerance reported through GradientReport.passed.
        max_entries: Check at most this many randomly chosen entries per
            parameter (all entries when None).

    Raises:
        ConfigError: If h is not positive.
        DeterminismError: If two evaluations of scalar_fn differ.
    """

    if h <= 0:
        raise ConfigError(f"finite-difference step must be positive, got {h}")

    first, second = _scalar(scalar_fn), _scalar(scalar_fn)
    if first != second:
        raise DeterminismError(f"scalar_fn returned {first!r} then {second!r}")

    named = _named(params)
    backward(scalar_fn(), named.values())
    analytic = {name: p.grad.copy() for name, p in named.items()}

    rng = np.random.default_rng(seed)
    report = GradientReport(tol=tol)
    for name, param in named.items():
        flat = param.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))

        worst = 0.0
        for index in indices:
            original = flat[index]
            flat[index] = original + h
            plus = _scalar(scalar_fn)
            flat[index] = original - h
            minus = _scalar(scalar_fn)
            flat[index] = original
            numeric = (plus - minus) / (2.0 * h)
            exact = analytic[name].reshape(-1)[index]
            worst = max(worst, abs(exact - numeric) / max(1.0, abs(numeric)))
        report.errors[name] = worst

    logger.debug("Gradient check max error %.3e", report.max_error)
    return report
