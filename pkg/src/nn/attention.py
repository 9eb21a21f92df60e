"""
Additive attention over encoder states.

    e_j = v · tanh(s W_dec + H_j W_enc)
    weights = softmax(e)
    context = Σ_j weights_j H_j

Scores for all T encoder rows come from one matmul per decoder step.
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.autodiff import ops
from src.autodiff.tensor import Tensor
from src.utils.exceptions import DimensionError, UsageError

ATTENTION_PARAM_NAMES = ("W_dec", "W_enc", "v")


def attention_param_shapes(d_h: int, d_a: int) -> Dict[str, Tuple[int, ...]]:
    return {"W_dec": (d_h, d_a), "W_enc": (d_h, d_a), "v": (d_a,)}


class AttentionParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    W_dec: Tensor
    W_enc: Tensor
    v: Tensor

    @property
    def d_a(self) -> int:
        return self.v.shape[0]

    def check(self, d_h: int) -> None:
        for name, shape in attention_param_shapes(d_h, self.d_a).items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"AttentionParams.{name}", actual, shape)


def attention_weights(s: Tensor, H: Tensor, p: AttentionParams) -> Tensor:
    if H.data.ndim != 2:
        raise DimensionError("attention_weights", H.shape, reason="expected encoder states [T, d_h], T >= 1")
    if s.shape != (H.shape[1],):
        raise DimensionError("attention_weights", s.shape, H.shape, reason="decoder state width differs from encoder")
    p.check(H.shape[1])
    hidden = ops.tanh(ops.add_row(ops.matmul(H, p.W_enc), ops.matmul(s, p.W_dec)))
    return ops.softmax(ops.matmul(hidden, p.v))


def context_vector(weights: Tensor, H: Tensor) -> Tensor:
    if weights.data.ndim != 1 or H.data.ndim != 2 or weights.shape[0] != H.shape[0]:
        raise DimensionError("context_vector", weights.shape, H.shape, reason="one weight per encoder row")
    if abs(float(weights.data.sum()) - 1.0) > 1e-9:
        raise UsageError(f"context_vector: weights must sum to 1, got {float(weights.data.sum())!r}")
    return ops.matmul(weights, H)


def attend(s: Tensor, H: Tensor, p: AttentionParams) -> Tuple[Tensor, np.ndarray]:
    """Context vector for decoder state ``s`` plus the weights as a plain array."""
    weights = attention_weights(s, H, p)
    return context_vector(weights, H), weights.data
