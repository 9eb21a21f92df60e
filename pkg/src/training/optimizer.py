"""
Bias-corrected Adam and global-norm gradient clipping.

Updates are functional: new arrays are returned and the inputs are left
untouched, so a saved reference to an earlier parameter set stays valid.
"""

from __future__ import annotations

from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from src.models.training import AdamHyper, AdamState
from src.utils.exceptions import NumericFailure


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: Optional[float]) -> Tuple[Dict[str, np.ndarray], float]:
    """Rescale so the global L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState,
              hyper: AdamHyper) -> Tuple[Dict[str, np.ndarray], AdamState]:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericFailure(f"adam_step[{name}]", "non-finite gradient")

    step = state.step + 1
    b1, b2 = hyper.beta1, hyper.beta2
    correction1 = 1.0 - b1 ** step
    correction2 = 1.0 - b2 ** step

    new_params: Dict[str, np.ndarray] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = b1 * state.m.get(name, np.zeros_like(p)) + (1.0 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(p)) + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = p - hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(step=step, m=new_m, v=new_v)
