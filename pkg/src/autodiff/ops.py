"""
Primitive operations with their analytic backward rules.

The set is fixed: matmul, add, sub, mul, add_row, tanh, sigmoid, exp, log,
softmax, log_softmax, concat, stack, slice_row, embedding_lookup, pick,
sum, mean. Cells, attention and the loss are compositions of these, so
one gradient check covers all of them.

Every forward result is checked for NaN/Inf; a failure raises
``NumericFailure`` naming the primitive.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from src.autodiff.tensor import ArrayLike, BackwardFn, Tape, Tensor
from src.utils.exceptions import DimensionError, NumericFailure, UsageError
from src.utils.validation import require_finite, require_same_shape


def constant(data: ArrayLike) -> Tensor:
    """Untracked tensor."""
    return Tensor(data)


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    if like is not None and np.ndim(value) == 0:
        return Tensor(np.full(like.shape, float(value)))
    return Tensor(value)


def _tape_of(op: str, operands: Sequence[Tensor]) -> Optional[Tape]:
    tape: Optional[Tape] = None
    for t in operands:
        if t.tape is None:
            continue
        if tape is not None and t.tape is not tape:
            raise UsageError(f"{op}: operands belong to different tapes")
        tape = t.tape
    return tape


def _apply(op: str, operands: Sequence[Tensor], out: np.ndarray, backward: BackwardFn) -> Tensor:
    require_finite(op, out)
    tape = _tape_of(op, operands)
    if tape is None:
        return Tensor(out)
    return tape.record(op, operands, out, backward)


# -- linear algebra ---------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product. Also accepts vector @ matrix and matrix @ vector."""
    A, B = a.data, b.data
    if A.ndim not in (1, 2) or B.ndim not in (1, 2) or (A.ndim == 1 and B.ndim == 1):
        raise DimensionError("matmul", A.shape, B.shape, reason="unsupported ranks")
    if A.shape[-1] != B.shape[0]:
        raise DimensionError("matmul", A.shape, B.shape, reason="inner dimensions differ")
    out = A @ B

    if A.ndim == 2 and B.ndim == 2:
        def grad(g):
            return g @ B.T, A.T @ g
    elif A.ndim == 1:
        def grad(g):
            return B @ g, np.outer(A, g)
    else:
        def grad(g):
            return np.outer(g, B), A.T @ g

    return _apply("matmul", (a, b), out, grad)


# -- elementwise binary -------------------------------------------------------

def _check_same(op: str, a: Tensor, b: Tensor) -> None:
    require_same_shape(op, a.data, b.data)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same("add", a, b)
    return _apply("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same("sub", a, b)
    return _apply("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same("mul", a, b)
    A, B = a.data, b.data
    return _apply("mul", (a, b), A * B, lambda g: (g * B, g * A))


def elementwise(a: Tensor, b: Tensor, op: str) -> Tensor:
    table: Dict[str, Callable[[Tensor, Tensor], Tensor]] = {"add": add, "sub": sub, "mul": mul}
    if op not in table:
        raise UsageError(f"unknown elementwise op '{op}'")
    return table[op](a, b)


def add_row(m: Tensor, v: Tensor) -> Tensor:
    """Add vector ``v`` [n] to every row of ``m`` [T, n]."""
    if m.data.ndim != 2 or v.data.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError("add_row", m.shape, v.shape)
    return _apply("add_row", (m, v), m.data + v.data, lambda g: (g, g.sum(axis=0)))


def scale(t: Tensor, c: float) -> Tensor:
    return mul(t, Tensor(np.full(t.shape, float(c))))


# -- elementwise unary ----------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def tanh(t: Tensor) -> Tensor:
    y = np.tanh(t.data)
    return _apply("tanh", (t,), y, lambda g: (g * (1.0 - y * y),))


def sigmoid(t: Tensor) -> Tensor:
    y = _sigmoid(t.data)
    return _apply("sigmoid", (t,), y, lambda g: (g * y * (1.0 - y),))


def exp(t: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = np.exp(t.data)
    return _apply("exp", (t,), y, lambda g: (g * y,))


def log(t: Tensor) -> Tensor:
    x = t.data
    if np.any(x <= 0):
        raise NumericFailure("log", "input outside the numeric domain (values must be > 0)")
    return _apply("log", (t,), np.log(x), lambda g: (g / x,))


def map_unary(t: Tensor, f: str) -> Tensor:
    table: Dict[str, Callable[[Tensor], Tensor]] = {"tanh": tanh, "sigmoid": sigmoid, "exp": exp, "log": log}
    if f not in table:
        raise UsageError(f"unknown unary op '{f}'")
    return table[f](t)


# -- normalisation ----------------------------------------------------------------

def _require_vector(op: str, t: Tensor) -> None:
    if t.data.ndim != 1:
        raise DimensionError(op, t.shape, reason="expected a non-empty vector")


def softmax(v: Tensor) -> Tensor:
    _require_vector("softmax", v)
    shifted = v.data - v.data.max()
    e = np.exp(shifted)
    y = e / e.sum()
    return _apply("softmax", (v,), y, lambda g: (y * (g - np.dot(g, y)),))


def log_softmax(v: Tensor) -> Tensor:
    """Fused, overflow-free log(softmax(v))."""
    _require_vector("log_softmax", v)
    shifted = v.data - v.data.max()
    out = shifted - np.log(np.exp(shifted).sum())
    probs = np.exp(out)
    return _apply("log_softmax", (v,), out, lambda g: (g - probs * g.sum(),))


def log_softmax_values(logits: np.ndarray) -> np.ndarray:
    """Plain-array log-softmax for decoding, same arithmetic as ``log_softmax``."""
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


# -- structure ----------------------------------------------------------------------

def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat", reason="nothing to concatenate")
    arrays = [t.data for t in tensors]
    try:
        out = np.concatenate(arrays, axis=axis)
    except ValueError:
        raise DimensionError("concat", *(a.shape for a in arrays))
    bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]

    def grad(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _apply("concat", tensors, out, grad)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    if not tensors:
        raise DimensionError("stack", reason="nothing to stack")
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise DimensionError("stack", first, t.shape)
    out = np.stack([t.data for t in tensors])
    return _apply("stack", tensors, out, lambda g: tuple(g[i] for i in range(len(tensors))))


def _take(op: str, t: Tensor, index: int) -> Tensor:
    if not 0 <= index < t.shape[0]:
        raise UsageError(f"{op}: index {index} out of range for leading dimension {t.shape[0]}")
    out = np.array(t.data[index])

    def grad(g):
        full = np.zeros_like(t.data)
        full[index] = g
        return (full,)

    return _apply(op, (t,), out, grad)


def slice_row(m: Tensor, index: int) -> Tensor:
    if m.data.ndim != 2:
        raise DimensionError("slice_row", m.shape, reason="expected a matrix")
    return _take("slice_row", m, int(index))


def embedding_lookup(table: Tensor, token_id: int) -> Tensor:
    if table.data.ndim != 2:
        raise DimensionError("embedding_lookup", table.shape, reason="expected a [vocab, dim] table")
    return _take("embedding_lookup", table, int(token_id))


def pick(v: Tensor, index: int) -> Tensor:
    """Scalar element ``v[index]`` of a vector."""
    _require_vector("pick", v)
    return _take("pick", v, int(index))


# -- reductions -------------------------------------------------------------------------

def sum(t: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    shape = t.shape
    return _apply("sum", (t,), np.array(t.data.sum()), lambda g: (np.full(shape, float(g)),))


def mean(t: Tensor) -> Tensor:
    shape, n = t.shape, t.data.size
    return _apply("mean", (t,), np.array(t.data.mean()), lambda g: (np.full(shape, float(g) / n),))


def total(terms: Sequence[Tensor]) -> Tensor:
    """Sum of equally shaped tensors, left to right."""
    if not terms:
        raise DimensionError("total", reason="no terms")
    acc = terms[0]
    for t in terms[1:]:
        acc = add(acc, t)
    return acc


__all__: Tuple[str, ...] = (
    "constant", "as_tensor", "matmul", "add", "sub", "mul", "elementwise", "add_row", "scale",
    "tanh", "sigmoid", "exp", "log", "map_unary", "softmax", "log_softmax", "log_softmax_values",
    "concat", "stack", "slice_row", "embedding_lookup", "pick", "sum", "mean", "total",
)
