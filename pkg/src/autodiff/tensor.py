"""
Dense float64 tensor and the reverse-mode differentiation tape.

A ``Tensor`` is a thin wrapper over a numpy array. It is *tracked* when it
carries a node id on a ``Tape``; primitive operations (see ``ops.py``)
record themselves on the tape of their tracked operands, and ``backward``
walks the records in reverse to populate leaf gradients.

One tape belongs to one thread. Untracked tensors are never mutated after
creation and may be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.exceptions import DimensionError, NumericFailure, UsageError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """A float64 array, optionally attached to a differentiation tape."""

    __slots__ = ("data", "tape", "node", "name", "grad")

    def __init__(self, data: ArrayLike, tape: Optional["Tape"] = None, node: Optional[int] = None,
                 name: Optional[str] = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.size == 0:
            raise DimensionError("tensor", arr.shape, reason="every dimension must be positive")
        self.data = arr
        self.tape = tape
        self.node = node
        self.name = name
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def tracked(self) -> bool:
        return self.node is not None

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, tracked={self.tracked})"

    # Operator sugar; the primitives live in ops.py.
    def __add__(self, other):
        from src.autodiff import ops
        return ops.add(self, ops.as_tensor(other, like=self))

    def __radd__(self, other):
        from src.autodiff import ops
        return ops.add(ops.as_tensor(other, like=self), self)

    def __sub__(self, other):
        from src.autodiff import ops
        return ops.sub(self, ops.as_tensor(other, like=self))

    def __rsub__(self, other):
        from src.autodiff import ops
        return ops.sub(ops.as_tensor(other, like=self), self)

    def __mul__(self, other):
        from src.autodiff import ops
        return ops.mul(self, ops.as_tensor(other, like=self))

    def __rmul__(self, other):
        from src.autodiff import ops
        return ops.mul(ops.as_tensor(other, like=self), self)

    def __matmul__(self, other):
        from src.autodiff import ops
        return ops.matmul(self, other)


@dataclass
class Record:
    """One primitive application. ``backward`` closes over the saved forward values."""
    op: str
    inputs: Tuple[Optional[int], ...]
    output: int
    backward: BackwardFn


@dataclass
class Tape:
    records: List[Record] = field(default_factory=list)
    leaves: List[Tensor] = field(default_factory=list)
    _next_node: int = 0

    def _allocate(self) -> int:
        node = self._next_node
        self._next_node += 1
        return node

    def watch(self, data: ArrayLike, name: Optional[str] = None) -> Tensor:
        """Register a leaf whose gradient ``backward`` will report."""
        node = self._allocate()
        leaf = Tensor(data, tape=self, node=node, name=name or f"leaf{node}")
        self.leaves.append(leaf)
        return leaf

    def record(self, op: str, operands: Sequence[Tensor], out: np.ndarray, backward: BackwardFn) -> Tensor:
        node = self._allocate()
        inputs = tuple(t.node if t.tape is self else None for t in operands)
        self.records.append(Record(op=op, inputs=inputs, output=node, backward=backward))
        return Tensor(out, tape=self, node=node)

    def __len__(self) -> int:
        return len(self.records)


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """Reverse traversal from a scalar ``loss``.

    Returns the gradient of every leaf on ``tape`` keyed by leaf name and
    also stores it on ``leaf.grad``. Leaves that do not reach the loss get
    zeros of their own shape.
    """
    if loss.data.ndim != 0:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss.tracked and loss.tape is not tape:
        raise UsageError("loss was produced on a different tape")

    grads: Dict[int, np.ndarray] = {}
    if loss.tracked:
        grads[loss.node] = np.ones((), dtype=np.float64)

    for rec in reversed(tape.records):
        g = grads.pop(rec.output, None)
        if g is None:
            continue
        for node, contribution in zip(rec.inputs, rec.backward(g)):
            if node is None or contribution is None:
                continue
            if not np.all(np.isfinite(contribution)):
                raise NumericFailure(f"{rec.op} (backward)")
            previous = grads.get(node)
            grads[node] = contribution if previous is None else previous + contribution

    result: Dict[str, np.ndarray] = {}
    for leaf in tape.leaves:
        g = grads.get(leaf.node)
        leaf.grad = np.zeros_like(leaf.data) if g is None else np.array(g, dtype=np.float64).reshape(leaf.shape)
        result[leaf.name] = leaf.grad
    return result
