"""
Central finite-difference gradient checking.

``f`` is any tensor program taking a dict of named tensors and returning a
scalar tensor. The same ``f`` is run once on a tape (analytic gradients)
and twice per input entry on untracked tensors (numeric gradients).
"""

from __future__ import annotations

from typing import Callable, Dict, Mapping, Tuple

import numpy as np

from src.autodiff.tensor import Tape, Tensor, backward
from src.utils.exceptions import NumericFailure, UsageError

TensorProgram = Callable[[Dict[str, Tensor]], Tensor]


def _scalar(op: str, out: Tensor) -> float:
    if out.data.ndim != 0:
        raise UsageError(f"{op}: program must return a scalar, got shape {out.shape}")
    value = float(out.data)
    if not np.isfinite(value):
        raise NumericFailure(op)
    return value


def analytic_gradients(f: TensorProgram, inputs: Mapping[str, np.ndarray]) -> Tuple[float, Dict[str, np.ndarray]]:
    tape = Tape()
    leaves = {name: tape.watch(np.array(value, dtype=np.float64), name=name) for name, value in inputs.items()}
    out = f(leaves)
    value = _scalar("grad_check", out)
    return value, backward(tape, out)


def numeric_gradients(f: TensorProgram, inputs: Mapping[str, np.ndarray], eps: float = 1e-5) -> Dict[str, np.ndarray]:
    arrays = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}
    tensors = {name: Tensor(a) for name, a in arrays.items()}
    result: Dict[str, np.ndarray] = {}
    for name, a in arrays.items():
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus = _scalar("grad_check (+eps)", f(tensors))
            flat[i] = original - eps
            minus = _scalar("grad_check (-eps)", f(tensors))
            flat[i] = original
            gflat[i] = (plus - minus) / (2.0 * eps)
        result[name] = g
    return result


def compare_gradients(analytic: Mapping[str, np.ndarray], numeric: Mapping[str, np.ndarray]) -> Dict[str, float]:
    """Per-input max of |ga - gn| / max(1, |ga|, |gn|)."""
    errors: Dict[str, float] = {}
    for name, gn in numeric.items():
        ga = np.asarray(analytic[name], dtype=np.float64)
        denom = np.maximum(1.0, np.maximum(np.abs(ga), np.abs(gn)))
        errors[name] = float(np.max(np.abs(ga - gn) / denom)) if gn.size else 0.0
    return errors


def gradient_errors(f: TensorProgram, inputs: Mapping[str, np.ndarray], eps: float = 1e-5) -> Dict[str, float]:
    _, analytic = analytic_gradients(f, inputs)
    numeric = numeric_gradients(f, inputs, eps)
    return compare_gradients(analytic, numeric)


def grad_check(f: TensorProgram, inputs: Mapping[str, np.ndarray], eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    errors = gradient_errors(f, inputs, eps)
    return max(errors.values(), default=0.0)
