"""
Encoder-decoder assembly.

Parameters live as plain float64 arrays in ``ModelParams``; a forward pass
binds them either to a tape (training, gradient checks) or as untracked
constants (inference). Binding never copies, so one ``ModelParams`` can
serve many threads as long as nobody mutates the arrays.

Wiring:
    - the encoder unrolls over the T_enc feature rows;
    - the decoder starts from the encoder's final state ((h, c) for LSTM,
      h for GRU);
    - with attention on, the previous decoder hidden state queries the
      encoder states and the context is concatenated with the new cell
      output before the output projection.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.autodiff import ops
from src.autodiff.tensor import Tape, Tensor
from src.models.model_config import ModelConfig
from src.nn.attention import ATTENTION_PARAM_NAMES, AttentionParams, attend, attention_param_shapes
from src.nn.cells import (
    Cell, CellState, GRU_PARAM_NAMES, LSTM_PARAM_NAMES, build_cell, gru_param_shapes,
    init_uniform, lstm_param_shapes, unroll,
)
from src.text.vocab import START_ID
from src.utils.exceptions import DimensionError, UsageError
from src.utils.random_streams import INIT, derive_rng
from src.utils.validation import require_shape


def expected_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Every parameter name and shape for ``config``, in a fixed order."""
    cell_shapes = lstm_param_shapes if config.cell_kind == "lstm" else gru_param_shapes
    shapes: Dict[str, Tuple[int, ...]] = {}
    for name, shape in cell_shapes(config.d_feat, config.d_h).items():
        shapes[f"encoder.{name}"] = shape
    for name, shape in cell_shapes(config.d_emb, config.d_h).items():
        shapes[f"decoder.{name}"] = shape
    if config.attention:
        for name, shape in attention_param_shapes(config.d_h, config.attention_dim).items():
            shapes[f"attention.{name}"] = shape
    shapes["embedding"] = (config.vocab_size, config.d_emb)
    shapes["output.W"] = (config.projection_in, config.vocab_size)
    shapes["output.b"] = (config.vocab_size,)
    return shapes


class BoundModel:
    """Parameters wrapped as tensors for one forward pass."""

    def __init__(self, config: ModelConfig, tensors: Dict[str, Tensor]):
        self.config = config
        self.tensors = tensors
        names = LSTM_PARAM_NAMES if config.cell_kind == "lstm" else GRU_PARAM_NAMES
        self.encoder: Cell = build_cell(config.cell_kind, {n: tensors[f"encoder.{n}"] for n in names})
        self.decoder: Cell = build_cell(config.cell_kind, {n: tensors[f"decoder.{n}"] for n in names})
        self.attention: Optional[AttentionParams] = None
        if config.attention:
            self.attention = AttentionParams(**{n: tensors[f"attention.{n}"] for n in ATTENTION_PARAM_NAMES})
            self.attention.check(config.d_h)
        self.embedding = tensors["embedding"]
        self.out_w = tensors["output.W"]
        self.out_b = tensors["output.b"]


class ModelParams:
    """Named parameter arrays of one model."""

    def __init__(self, config: ModelConfig, arrays: Dict[str, np.ndarray]):
        shapes = expected_shapes(config)
        missing = [n for n in shapes if n not in arrays]
        if missing:
            raise UsageError(f"missing parameters: {', '.join(missing)}")
        unknown = [n for n in arrays if n not in shapes]
        if unknown:
            raise UsageError(f"unexpected parameters: {', '.join(unknown)}")
        for name, shape in shapes.items():
            if tuple(arrays[name].shape) != shape:
                raise DimensionError(f"param {name}", arrays[name].shape, shape)
        self.config = config
        self.arrays: Dict[str, np.ndarray] = {n: np.asarray(arrays[n], dtype=np.float64) for n in shapes}

    @classmethod
    def initialize(cls, config: ModelConfig, seed: Optional[int] = None) -> "ModelParams":
        rng = derive_rng(config.seed if seed is None else seed, INIT)
        return cls(config, init_uniform(rng, expected_shapes(config), config.d_h))

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ModelParams":
        return cls(config, {n: np.zeros(s) for n, s in expected_shapes(config).items()})

    def names(self) -> List[str]:
        return list(self.arrays)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {n: a.copy() for n, a in self.arrays.items()})

    def bind(self, tape: Optional[Tape] = None) -> BoundModel:
        if tape is None:
            tensors = {n: Tensor(a, name=n) for n, a in self.arrays.items()}
        else:
            tensors = {n: tape.watch(a, name=n) for n, a in self.arrays.items()}
        return BoundModel(self.config, tensors)

    def count(self) -> int:
        return int(sum(a.size for a in self.arrays.values()))


def _as_features(features, config: ModelConfig) -> Tensor:
    t = features if isinstance(features, Tensor) else Tensor(features)
    require_shape("encode", t.data, (config.t_enc, config.d_feat))
    if config.pooled:
        # Every row becomes the column mean.
        averaging = ops.constant(np.full((config.t_enc, config.t_enc), 1.0 / config.t_enc))
        return ops.matmul(averaging, t)
    return t


def encode(features, model: BoundModel, config: Optional[ModelConfig] = None) -> Tuple[Tensor, CellState]:
    """Encoder states [T_enc, d_h] and the final state for decoder init."""
    config = config or model.config
    inputs = _as_features(features, config)
    states, final, _ = unroll(model.encoder, inputs)
    return states, final


def decode_step(prev_token: int, state: CellState, encoder_states: Tensor, model: BoundModel,
                config: Optional[ModelConfig] = None) -> Tuple[Tensor, CellState]:
    """Unnormalised logits [vocab_size] and the next decoder state."""
    config = config or model.config
    if not 0 <= int(prev_token) < config.vocab_size:
        raise UsageError(f"token id {prev_token} outside vocabulary of size {config.vocab_size}")
    x = ops.embedding_lookup(model.embedding, int(prev_token))
    query = model.decoder.hidden(state)
    next_state, _ = model.decoder.step(x, state)
    output = model.decoder.hidden(next_state)
    if model.attention is not None:
        context, _ = attend(query, encoder_states, model.attention)
        output = ops.concat([output, context])
    logits = ops.add(ops.matmul(output, model.out_w), model.out_b)
    return logits, next_state


def teacher_forced_forward(features, target_ids: Sequence[int], model: BoundModel,
                           config: Optional[ModelConfig] = None) -> Tensor:
    """Logits [T, vocab_size]; step 1 reads <start>, step t > 1 reads target_ids[t-1]."""
    config = config or model.config
    T = len(target_ids)
    if T == 0:
        raise UsageError("teacher_forced_forward needs at least one target token")
    if T > config.t_dec_max:
        raise UsageError(f"{T} target tokens exceed t_dec_max={config.t_dec_max}")
    encoder_states, state = encode(features, model, config)
    rows: List[Tensor] = []
    prev = START_ID
    for target in target_ids:
        logits, state = decode_step(prev, state, encoder_states, model, config)
        rows.append(logits)
        prev = int(target)
    return ops.stack(rows)
