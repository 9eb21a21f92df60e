"""
Masked cross-entropy and token accuracy over teacher-forced logits.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence, Union

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Tensor
from src.utils.exceptions import DimensionError


class LossOutput(NamedTuple):
    value: Tensor
    n_tokens: int

    @property
    def empty(self) -> bool:
        """True when the mask selected nothing and the loss is the constant 0."""
        return self.n_tokens == 0


def _check(op: str, logits_shape, targets: Sequence[int], mask: Sequence[int]) -> None:
    if len(logits_shape) != 2 or logits_shape[0] != len(targets) or len(targets) != len(mask):
        raise DimensionError(op, logits_shape, (len(targets),), (len(mask),),
                             reason="logits [T, V], targets [T] and mask [T] must agree")


def cross_entropy_loss(logits: Tensor, targets: Sequence[int], mask: Sequence[int]) -> LossOutput:
    """Mean of -log softmax(logits_t)[target_t] over masked positions."""
    _check("cross_entropy_loss", logits.shape, targets, mask)
    terms = [
        ops.pick(ops.log_softmax(ops.slice_row(logits, t)), int(targets[t]))
        for t in range(len(targets)) if mask[t]
    ]
    if not terms:
        return LossOutput(ops.constant(0.0), 0)
    return LossOutput(ops.scale(ops.total(terms), -1.0 / len(terms)), len(terms))


def token_hits(logits: Union[Tensor, np.ndarray], targets: Sequence[int], mask: Sequence[int]) -> int:
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    _check("token_accuracy", values.shape, targets, mask)
    predictions = np.argmax(values, axis=1)
    return int(sum(1 for t in range(len(targets)) if mask[t] and predictions[t] == targets[t]))


def token_accuracy(logits: Union[Tensor, np.ndarray], targets: Sequence[int], mask: Sequence[int]) -> float:
    """Fraction of masked positions whose argmax (lowest id on ties) is the target; 0 when none are masked."""
    selected = int(sum(1 for m in mask if m))
    if selected == 0:
        return 0.0
    return token_hits(logits, targets, mask) / selected
