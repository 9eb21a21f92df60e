"""
LSTM and GRU single-step cells and sequence unrolling.

LSTM:
    i = σ(x U_i + h W_i + b_i)      f = σ(x U_f + h W_f + b_f)
    o = σ(x U_o + h W_o + b_o)      c' = tanh(x U_g + h W_g + b_g)
    c_t = f ⊙ c_prev + i ⊙ c'       h_t = tanh(c_t) ⊙ o

GRU:
    z = σ(x W_zx + h W_zh + b_z)    r = σ(x W_rx + h W_rh + b_r)
    h' = tanh(x W_hx + (r ⊙ h) W_hh + b_h)
    h_t = z ⊙ h + (1 - z) ⊙ h'

Params are read-only during a step, so many sequences may be stepped
concurrently against one parameter set as long as each uses its own tape.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.autodiff import ops
from src.autodiff.tensor import Tensor
from src.utils.exceptions import DimensionError, UsageError
from src.utils.validation import require_rank

LSTM_PARAM_NAMES = ("U_i", "U_f", "U_o", "U_g", "W_i", "W_f", "W_o", "W_g", "b_i", "b_f", "b_o", "b_g")
GRU_PARAM_NAMES = ("W_zx", "W_rx", "W_hx", "W_zh", "W_rh", "W_hh", "b_z", "b_r", "b_h")


def lstm_param_shapes(d_in: int, d_h: int) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    for gate in "ifog":
        shapes[f"U_{gate}"] = (d_in, d_h)
        shapes[f"W_{gate}"] = (d_h, d_h)
        shapes[f"b_{gate}"] = (d_h,)
    return {name: shapes[name] for name in LSTM_PARAM_NAMES}


def gru_param_shapes(d_in: int, d_h: int) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    for gate in "zrh":
        shapes[f"W_{gate}x"] = (d_in, d_h)
        shapes[f"W_{gate}h"] = (d_h, d_h)
        shapes[f"b_{gate}"] = (d_h,)
    return {name: shapes[name] for name in GRU_PARAM_NAMES}


def init_uniform(rng: np.random.Generator, shapes: Dict[str, Tuple[int, ...]], d_h: int) -> Dict[str, np.ndarray]:
    """uniform(-k, k) with k = 1/sqrt(d_h), drawn in name order."""
    k = 1.0 / np.sqrt(d_h)
    return {name: rng.uniform(-k, k, size=shape) for name, shape in shapes.items()}


class LstmParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    U_i: Tensor
    U_f: Tensor
    U_o: Tensor
    U_g: Tensor
    W_i: Tensor
    W_f: Tensor
    W_o: Tensor
    W_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor

    @property
    def d_in(self) -> int:
        return self.U_i.shape[0]

    @property
    def d_h(self) -> int:
        return self.W_i.shape[0]

    def check(self) -> None:
        expected = lstm_param_shapes(self.d_in, self.d_h)
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"LstmParams.{name}", actual, shape)


class GruParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    W_zx: Tensor
    W_rx: Tensor
    W_hx: Tensor
    W_zh: Tensor
    W_rh: Tensor
    W_hh: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    @property
    def d_in(self) -> int:
        return self.W_zx.shape[0]

    @property
    def d_h(self) -> int:
        return self.W_zh.shape[0]

    def check(self) -> None:
        expected = gru_param_shapes(self.d_in, self.d_h)
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise DimensionError(f"GruParams.{name}", actual, shape)


class LstmState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h: Tensor
    c: Tensor


class GateTrace(BaseModel):
    """Gate activations captured during one step (plain arrays)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    i: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    o: Optional[np.ndarray] = None
    c_cand: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None
    h_cand: Optional[np.ndarray] = None

    def sigmoid_gates(self) -> List[np.ndarray]:
        return [g for g in (self.i, self.f, self.o, self.z, self.r) if g is not None]

    def tanh_outputs(self) -> List[np.ndarray]:
        return [g for g in (self.c_cand, self.h_cand) if g is not None]


def _check_step(op: str, x: Tensor, h: Tensor, d_in: int, d_h: int) -> None:
    if x.shape != (d_in,):
        raise DimensionError(op, x.shape, (d_in,), reason="input does not match params")
    if h.shape != (d_h,):
        raise DimensionError(op, h.shape, (d_h,), reason="hidden state does not match params")


def lstm_step(x: Tensor, prev: LstmState, p: LstmParams) -> Tuple[LstmState, GateTrace]:
    _check_step("lstm_step", x, prev.h, p.d_in, p.d_h)
    if prev.c.shape != prev.h.shape:
        raise DimensionError("lstm_step", prev.c.shape, prev.h.shape, reason="cell state does not match hidden state")

    def pre(U: Tensor, W: Tensor, b: Tensor) -> Tensor:
        return ops.add(ops.add(ops.matmul(x, U), ops.matmul(prev.h, W)), b)

    i = ops.sigmoid(pre(p.U_i, p.W_i, p.b_i))
    f = ops.sigmoid(pre(p.U_f, p.W_f, p.b_f))
    o = ops.sigmoid(pre(p.U_o, p.W_o, p.b_o))
    c_cand = ops.tanh(pre(p.U_g, p.W_g, p.b_g))
    c = ops.add(ops.mul(f, prev.c), ops.mul(i, c_cand))
    h = ops.mul(ops.tanh(c), o)
    trace = GateTrace(i=i.data, f=f.data, o=o.data, c_cand=c_cand.data)
    return LstmState(h=h, c=c), trace


def gru_step(x: Tensor, h_prev: Tensor, p: GruParams) -> Tuple[Tensor, GateTrace]:
    _check_step("gru_step", x, h_prev, p.d_in, p.d_h)
    z = ops.sigmoid(ops.add(ops.add(ops.matmul(x, p.W_zx), ops.matmul(h_prev, p.W_zh)), p.b_z))
    r = ops.sigmoid(ops.add(ops.add(ops.matmul(x, p.W_rx), ops.matmul(h_prev, p.W_rh)), p.b_r))
    h_cand = ops.tanh(ops.add(ops.add(ops.matmul(x, p.W_hx), ops.matmul(ops.mul(r, h_prev), p.W_hh)), p.b_h))
    one_minus_z = ops.sub(ops.constant(np.ones(z.shape)), z)
    h = ops.add(ops.mul(z, h_prev), ops.mul(one_minus_z, h_cand))
    return h, GateTrace(z=z.data, r=r.data, h_cand=h_cand.data)


CellState = Union[LstmState, Tensor]


class LstmCell:
    kind = "lstm"

    def __init__(self, params: LstmParams):
        params.check()
        self.params = params

    @property
    def d_h(self) -> int:
        return self.params.d_h

    def zero_state(self) -> LstmState:
        return LstmState(h=ops.constant(np.zeros(self.d_h)), c=ops.constant(np.zeros(self.d_h)))

    def step(self, x: Tensor, state: LstmState) -> Tuple[LstmState, GateTrace]:
        return lstm_step(x, state, self.params)

    @staticmethod
    def hidden(state: LstmState) -> Tensor:
        return state.h


class GruCell:
    kind = "gru"

    def __init__(self, params: GruParams):
        params.check()
        self.params = params

    @property
    def d_h(self) -> int:
        return self.params.d_h

    def zero_state(self) -> Tensor:
        return ops.constant(np.zeros(self.d_h))

    def step(self, x: Tensor, state: Tensor) -> Tuple[Tensor, GateTrace]:
        return gru_step(x, state, self.params)

    @staticmethod
    def hidden(state: Tensor) -> Tensor:
        return state


Cell = Union[LstmCell, GruCell]


def build_cell(kind: str, tensors: Dict[str, Tensor]) -> Cell:
    if kind == "lstm":
        return LstmCell(LstmParams(**{n: tensors[n] for n in LSTM_PARAM_NAMES}))
    if kind == "gru":
        return GruCell(GruParams(**{n: tensors[n] for n in GRU_PARAM_NAMES}))
    raise UsageError(f"Unsupported cell kind: {kind}", details={"cell_kind": kind})


def unroll(cell: Cell, inputs: Tensor, init: Optional[CellState] = None) -> Tuple[Tensor, CellState, List[GateTrace]]:
    """Fold ``cell`` over the rows of ``inputs`` [T, d_in].

    Returns the stacked hidden states [T, d_h], the final state and one
    gate trace per step. State t depends only on rows 0..t.
    """
    require_rank("unroll", inputs.data, (2,))
    state = cell.zero_state() if init is None else init
    hidden: List[Tensor] = []
    traces: List[GateTrace] = []
    for t in range(inputs.shape[0]):
        state, trace = cell.step(ops.slice_row(inputs, t), state)
        hidden.append(cell.hidden(state))
        traces.append(trace)
    return ops.stack(hidden), state, traces
