"""Parameter containers, forward passes, deterministic initialization and model
file serialization for the three architectures.

Conventions shared by all three models:

* inputs are scaled windows; recurrent cells consume one scalar per time step,
  the dense net consumes the whole window at once;
* the prediction is read out from the last time step only (next-step
  forecasting produces a single value);
* ``hidden_layers`` counts the hidden layers above the input layer.  The
  recurrent models realize the input layer as a first cell layer (so a stack
  has ``hidden_layers + 1`` cells), while the dense net's input layer is the
  feature vector itself (``hidden_layers + 1`` weight layers ending in a
  single output neuron).  Either way the total depth in the usual counting is
  ``hidden_layers + 2``.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field, fields
from typing import BinaryIO, List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import DataError, ShapeError
from .numkit import ActivationKind, activate, as_matrix, as_vector
from .pipeline import Scaler, scale, unscale

MODEL_MAGIC = b"FXCAST1\n"
MODEL_FORMAT_VERSION = 1


class Architecture(enum.Enum):
    LSTM = "lstm"
    BP = "bp"
    RNN = "rnn"


@dataclass(frozen=True)
class ModelSpec:
    """Architecture configuration; ``seed`` fully determines initialization.

    ``input_activation`` is applied to the first recurrent layer's output
    sequence (the dense net has no weighted input layer, so it ignores the
    field).  ``output_activation`` shapes the dense net's final layer; the
    recurrent readout is always linear.
    """

    architecture: Architecture
    window_len: int = 10
    hidden_layers: int = 6
    hidden_size: int = 128
    input_activation: ActivationKind = ActivationKind.RELU
    hidden_activation: ActivationKind = ActivationKind.TANH
    output_activation: ActivationKind = ActivationKind.LINEAR
    dropout_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError(f"window_len must be >= 1, got {self.window_len}")
        if self.hidden_size < 1:
            raise ValueError(f"hidden_size must be >= 1, got {self.hidden_size}")
        if self.hidden_layers < 0:
            raise ValueError(f"hidden_layers must be >= 0, got {self.hidden_layers}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


# ---------------------------------------------------------------------------
# parameter containers


@dataclass
class Readout:
    """Final fully connected map from the last hidden state to a scalar."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = as_vector(self.weights)
        self.bias = as_vector(self.bias)
        if self.bias.shape != (1,):
            raise ShapeError(f"readout bias must have shape (1,), got {self.bias.shape}")


@dataclass
class RnnLayerParams:
    """One simple recurrent cell layer: h_t = f(w_in@x_t + w_rec@h_prev + bias)."""

    w_in: np.ndarray
    w_rec: np.ndarray
    bias: np.ndarray
    activation: ActivationKind = ActivationKind.TANH
    out_activation: ActivationKind = ActivationKind.LINEAR

    def __post_init__(self):
        self.w_in = as_matrix(self.w_in)
        self.w_rec = as_matrix(self.w_rec)
        self.bias = as_vector(self.bias)
        h = self.w_in.shape[0]
        if self.w_rec.shape != (h, h) or self.bias.shape != (h,):
            raise ShapeError(
                f"recurrent layer shapes disagree: w_in {self.w_in.shape}, "
                f"w_rec {self.w_rec.shape}, bias {self.bias.shape}"
            )

    @property
    def hidden_size(self) -> int:
        return self.w_in.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_in.shape[1]


@dataclass
class LstmLayerParams:
    """One LSTM layer; the four gate weights act on the concatenation [h_prev, x_t].

    Gates are stored stacked row-wise in the fixed order forget, input,
    output, candidate, so one matvec evaluates all four; the per-gate views
    ``w_f``/``w_i``/``w_o``/``w_c`` (and the matching biases) share memory
    with the stack.
    """

    w_gates: np.ndarray
    b_gates: np.ndarray
    out_activation: ActivationKind = ActivationKind.LINEAR

    def __post_init__(self):
        self.w_gates = as_matrix(self.w_gates)
        self.b_gates = as_vector(self.b_gates)
        rows = self.w_gates.shape[0]
        if rows % 4 != 0:
            raise ShapeError(f"gate stack must have 4*hidden rows, got {rows}")
        h = rows // 4
        if self.w_gates.shape[1] <= h:
            raise ShapeError(
                f"gate stack must act on [h_prev, x_t]: needs more than {h} "
                f"columns, got {self.w_gates.shape[1]}"
            )
        if self.b_gates.shape != (rows,):
            raise ShapeError(
                f"gate biases must have shape ({rows},), got {self.b_gates.shape}"
            )

    @classmethod
    def from_gates(cls, w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o,
                   out_activation: ActivationKind = ActivationKind.LINEAR):
        mats = [as_matrix(m) for m in (w_f, w_i, w_o, w_c)]
        vecs = [as_vector(v) for v in (b_f, b_i, b_o, b_c)]
        shape = mats[0].shape
        if any(m.shape != shape for m in mats) or any(v.shape != (shape[0],) for v in vecs):
            raise ShapeError("all four gates must share one shape")
        return cls(np.vstack(mats), np.concatenate(vecs), out_activation)

    @property
    def hidden_size(self) -> int:
        return self.w_gates.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_gates.shape[1] - self.hidden_size

    # per-gate views into the stacked arrays (stack order: f, i, o, c)
    @property
    def w_f(self) -> np.ndarray:
        return self.w_gates[: self.hidden_size]

    @property
    def w_i(self) -> np.ndarray:
        h = self.hidden_size
        return self.w_gates[h: 2 * h]

    @property
    def w_o(self) -> np.ndarray:
        h = self.hidden_size
        return self.w_gates[2 * h: 3 * h]

    @property
    def w_c(self) -> np.ndarray:
        h = self.hidden_size
        return self.w_gates[3 * h:]

    @property
    def b_f(self) -> np.ndarray:
        return self.b_gates[: self.hidden_size]

    @property
    def b_i(self) -> np.ndarray:
        h = self.hidden_size
        return self.b_gates[h: 2 * h]

    @property
    def b_o(self) -> np.ndarray:
        h = self.hidden_size
        return self.b_gates[2 * h: 3 * h]

    @property
    def b_c(self) -> np.ndarray:
        h = self.hidden_size
        return self.b_gates[3 * h:]


@dataclass
class MlpLayerParams:
    """One dense layer: out = activation(weights @ in + bias)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationKind

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        self.bias = as_vector(self.bias)
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match weight rows "
                f"{self.weights.shape[0]}"
            )

    @property
    def input_size(self) -> int:
        return self.weights.shape[1]

    @property
    def output_size(self) -> int:
        return self.weights.shape[0]


@dataclass
class RnnParams:
    layers: List[RnnLayerParams]
    readout: Readout
    spec: Optional[ModelSpec] = None

    def __post_init__(self):
        _check_stack_chain([l.input_size for l in self.layers],
                           [l.hidden_size for l in self.layers])
        if self.readout.weights.shape != (self.layers[-1].hidden_size,):
            raise ShapeError("readout width does not match the top layer")

    def named_arrays(self):
        out = []
        for k, layer in enumerate(self.layers):
            out.append((f"layers.{k}.w_in", layer.w_in))
            out.append((f"layers.{k}.w_rec", layer.w_rec))
            out.append((f"layers.{k}.bias", layer.bias))
        out.append(("readout.weights", self.readout.weights))
        out.append(("readout.bias", self.readout.bias))
        return out

    def copy(self) -> "RnnParams":
        return RnnParams(
            [RnnLayerParams(l.w_in.copy(), l.w_rec.copy(), l.bias.copy(),
                            l.activation, l.out_activation) for l in self.layers],
            Readout(self.readout.weights.copy(), self.readout.bias.copy()),
            self.spec,
        )


@dataclass
class LstmParams:
    layers: List[LstmLayerParams]
    readout: Readout
    spec: Optional[ModelSpec] = None

    def __post_init__(self):
        _check_stack_chain([l.input_size for l in self.layers],
                           [l.hidden_size for l in self.layers])
        if self.readout.weights.shape != (self.layers[-1].hidden_size,):
            raise ShapeError("readout width does not match the top layer")

    def named_arrays(self):
        out = []
        for k, layer in enumerate(self.layers):
            out.append((f"layers.{k}.w_gates", layer.w_gates))
            out.append((f"layers.{k}.b_gates", layer.b_gates))
        out.append(("readout.weights", self.readout.weights))
        out.append(("readout.bias", self.readout.bias))
        return out

    def copy(self) -> "LstmParams":
        return LstmParams(
            [LstmLayerParams(l.w_gates.copy(), l.b_gates.copy(), l.out_activation)
             for l in self.layers],
            Readout(self.readout.weights.copy(), self.readout.bias.copy()),
            self.spec,
        )


@dataclass
class MlpParams:
    layers: List[MlpLayerParams]
    spec: Optional[ModelSpec] = None

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.input_size != prev.output_size:
                raise ShapeError(
                    f"layer widths do not chain: {prev.output_size} -> {nxt.input_size}"
                )

    def named_arrays(self):
        out = []
        for k, layer in enumerate(self.layers):
            out.append((f"layers.{k}.weights", layer.weights))
            out.append((f"layers.{k}.bias", layer.bias))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            [MlpLayerParams(l.weights.copy(), l.bias.copy(), l.activation)
             for l in self.layers],
            self.spec,
        )


ModelParams = Union[RnnParams, LstmParams, MlpParams]


def _check_stack_chain(input_sizes, hidden_sizes):
    if not input_sizes:
        raise ShapeError("a recurrent stack needs at least one layer")
    for k in range(1, len(input_sizes)):
        if input_sizes[k] != hidden_sizes[k - 1]:
            raise ShapeError(
                f"layer {k} expects input of size {input_sizes[k]} but layer "
                f"{k - 1} outputs {hidden_sizes[k - 1]}"
            )


# ---------------------------------------------------------------------------
# forward passes


@dataclass
class LstmState:
    """Hidden output and cell state of one LSTM layer."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


@dataclass
class GateCache:
    """Everything one LSTM step must retain for backpropagation through time."""

    hx: np.ndarray       # [h_prev, x_t]
    f: np.ndarray        # forget gate
    i: np.ndarray        # input gate
    o: np.ndarray        # output gate
    ctilde: np.ndarray   # candidate cell state
    c_prev: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h: np.ndarray


@dataclass
class RecurrentLayerCache:
    inputs: list       # per t: vector fed to this layer (after any dropout below)
    preacts: list      # per t: pre-activation z (RNN) or None (LSTM)
    steps: list        # per t: GateCache (LSTM) or None (RNN)
    states: list       # per t: h_t
    outputs: list      # per t: out_activation(h_t)
    out_masks: list    # per t: dropout mask applied to outputs, or None


@dataclass
class RecurrentCache:
    layers: List[RecurrentLayerCache]
    readout_mask: Optional[np.ndarray]
    readout_input: np.ndarray
    prediction: float


@dataclass
class MlpCache:
    x: np.ndarray
    preacts: list      # per layer: I
    outputs: list      # per layer: O
    prediction: float


def rnn_step(layer: RnnLayerParams, x_t, h_prev) -> np.ndarray:
    """One recurrent cell update: activation(w_in@x_t + w_rec@h_prev + bias)."""
    h, _ = _rnn_step_cached(layer, as_vector(x_t), as_vector(h_prev))
    return h


def _rnn_step_cached(layer, x_t, h_prev):
    if x_t.shape[0] != layer.input_size or h_prev.shape[0] != layer.hidden_size:
        raise ShapeError(
            f"recurrent step got input {x_t.shape} and state {h_prev.shape}; "
            f"layer expects ({layer.input_size},) and ({layer.hidden_size},)"
        )
    z = layer.w_in @ x_t + layer.w_rec @ h_prev + layer.bias
    return activate(layer.activation, z), z


def lstm_step(layer: LstmLayerParams, x_t, state: LstmState) -> Tuple[LstmState, GateCache]:
    """One LSTM cell update; returns the new state and the gate cache."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h = layer.hidden_size
    if x_t.shape != (layer.input_size,) or state.h.shape != (h,) or state.c.shape != (h,):
        raise ShapeError(
            f"lstm step got input {x_t.shape}, state ({state.h.shape}, "
            f"{state.c.shape}); layer expects ({layer.input_size},) and ({h},)"
        )
    hx = np.concatenate((state.h, x_t))
    z = layer.w_gates @ hx + layer.b_gates
    gates = expit(z[: 3 * h])
    f = gates[:h]
    i = gates[h: 2 * h]
    o = gates[2 * h:]
    ctilde = np.tanh(z[3 * h:])
    c = f * state.c + i * ctilde
    tanh_c = np.tanh(c)
    h_t = o * tanh_c
    cache = GateCache(hx=hx, f=f, i=i, o=o, ctilde=ctilde,
                      c_prev=state.c, c=c, tanh_c=tanh_c, h=h_t)
    return LstmState(h_t, c), cache


def _dropout_mask(rng, size: int, rate: float) -> np.ndarray:
    # inverted dropout: survivors are scaled so the expectation is unchanged
    return (rng.random(size) >= rate) / (1.0 - rate)


def _window_inputs(window) -> list:
    w = as_vector(window)
    if w.size < 1:
        raise ShapeError("window must contain at least one element")
    return [w[t: t + 1] for t in range(w.size)]


def _apply_out_activation(kind, states):
    if kind is ActivationKind.LINEAR:
        return states
    return [activate(kind, s) for s in states]


def rnn_forward(params: RnnParams, window, dropout_rate: float = 0.0,
                rng=None) -> Tuple[float, RecurrentCache]:
    """Run the recurrent stack over a window; h starts at zero in every layer.

    ``dropout_rate`` > 0 turns on training mode: inverted-dropout masks are
    drawn (from ``rng``) on each layer-to-layer edge and on the final
    hidden-to-readout edge, never on the recurrent path itself.
    """
    return _recurrent_forward(params, window, dropout_rate, rng, is_lstm=False)


def lstm_forward(params: LstmParams, window, dropout_rate: float = 0.0,
                 rng=None) -> Tuple[float, RecurrentCache]:
    """Run the LSTM stack over a window; h and C start at zero in every layer."""
    return _recurrent_forward(params, window, dropout_rate, rng, is_lstm=True)


def _recurrent_forward(params, window, dropout_rate, rng, is_lstm):
    training = dropout_rate > 0.0
    if training and rng is None:
        raise ValueError("dropout requires a random generator")
    inputs = _window_inputs(window)
    steps_count = len(inputs)
    top = len(params.layers) - 1
    caches = []
    for li, layer in enumerate(params.layers):
        states = []
        preacts = []
        steps = []
        if is_lstm:
            state = LstmState.zeros(layer.hidden_size)
            for t in range(steps_count):
                state, gc = lstm_step(layer, inputs[t], state)
                steps.append(gc)
                states.append(state.h)
            preacts = [None] * steps_count
        else:
            h = np.zeros(layer.hidden_size)
            for t in range(steps_count):
                h, z = _rnn_step_cached(layer, inputs[t], h)
                preacts.append(z)
                states.append(h)
            steps = [None] * steps_count
        outputs = _apply_out_activation(layer.out_activation, states)
        out_masks = [None] * steps_count
        caches.append(RecurrentLayerCache(
            inputs=inputs, preacts=preacts, steps=steps, states=states,
            outputs=outputs, out_masks=out_masks,
        ))
        if li < top:
            if training:
                out_masks[:] = [_dropout_mask(rng, layer.hidden_size, dropout_rate)
                                for _ in range(steps_count)]
                inputs = [outputs[t] * out_masks[t] for t in range(steps_count)]
            else:
                inputs = outputs

    readout_mask = None
    readout_input = caches[top].outputs[-1]
    if training:
        readout_mask = _dropout_mask(rng, params.layers[top].hidden_size, dropout_rate)
        readout_input = readout_input * readout_mask
    prediction = float(params.readout.weights @ readout_input + params.readout.bias[0])
    return prediction, RecurrentCache(caches, readout_mask, readout_input, prediction)


def mlp_forward(params: MlpParams, x) -> Tuple[float, MlpCache]:
    """Layered dense evaluation; retains every pre- and post-activation."""
    o = as_vector(x)
    if o.shape[0] != params.layers[0].input_size:
        raise ShapeError(
            f"input has length {o.shape[0]}, first layer expects "
            f"{params.layers[0].input_size}"
        )
    if params.layers[-1].output_size != 1:
        raise ShapeError("prediction needs a single output neuron in the last layer")
    preacts = []
    outputs = []
    for layer in params.layers:
        i = layer.weights @ o + layer.bias
        o = activate(layer.activation, i)
        preacts.append(i)
        outputs.append(o)
    prediction = float(o[0])
    return prediction, MlpCache(as_vector(x), preacts, outputs, prediction)


def forward_prediction(params: ModelParams, window) -> float:
    """Evaluation-mode scalar prediction for any architecture (no dropout)."""
    if isinstance(params, MlpParams):
        return mlp_forward(params, window)[0]
    if isinstance(params, RnnParams):
        return rnn_forward(params, window)[0]
    if isinstance(params, LstmParams):
        return lstm_forward(params, window)[0]
    raise TypeError(f"not a model parameter container: {type(params)!r}")


def predict(params: ModelParams, scaler: Scaler, raw_window) -> float:
    """Scale a raw rate window, run the model, and map the output back to rates."""
    w = as_vector(raw_window)
    if params.spec is not None and w.shape[0] != params.spec.window_len:
        raise ShapeError(
            f"expected a window of length {params.spec.window_len}, got {w.shape[0]}"
        )
    y = forward_prediction(params, scale(scaler, w))
    return float(unscale(scaler, y))


# ---------------------------------------------------------------------------
# initialization


def _uniform_fan(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(spec: ModelSpec) -> ModelParams:
    """Deterministic fan-scaled uniform weights, zero biases.

    The same spec (same seed included) always produces bit-identical
    parameters; draw order is layers bottom-up, then the readout.
    """
    rng = np.random.default_rng(spec.seed)
    h = spec.hidden_size

    if spec.architecture is Architecture.BP:
        widths = [spec.window_len] + [h] * spec.hidden_layers + [1]
        layers = []
        for k in range(len(widths) - 1):
            fan_in, fan_out = widths[k], widths[k + 1]
            act = (spec.hidden_activation if k < len(widths) - 2
                   else spec.output_activation)
            layers.append(MlpLayerParams(
                _uniform_fan(rng, (fan_out, fan_in), fan_in, fan_out),
                np.zeros(fan_out), act))
        return MlpParams(layers, spec)

    n_cells = spec.hidden_layers + 1
    in_sizes = [1] + [h] * (n_cells - 1)
    if spec.architecture is Architecture.RNN:
        layers = []
        for k in range(n_cells):
            out_act = spec.input_activation if k == 0 else ActivationKind.LINEAR
            layers.append(RnnLayerParams(
                _uniform_fan(rng, (h, in_sizes[k]), in_sizes[k], h),
                _uniform_fan(rng, (h, h), h, h),
                np.zeros(h),
                activation=spec.hidden_activation,
                out_activation=out_act))
        readout = Readout(_uniform_fan(rng, (h,), h, 1), np.zeros(1))
        return RnnParams(layers, readout, spec)

    if spec.architecture is Architecture.LSTM:
        layers = []
        for k in range(n_cells):
            out_act = spec.input_activation if k == 0 else ActivationKind.LINEAR
            width = h + in_sizes[k]
            layers.append(LstmLayerParams(
                _uniform_fan(rng, (4 * h, width), width, h),
                np.zeros(4 * h),
                out_activation=out_act))
        readout = Readout(_uniform_fan(rng, (h,), h, 1), np.zeros(1))
        return LstmParams(layers, readout, spec)

    raise ValueError(f"unknown architecture: {spec.architecture!r}")


# ---------------------------------------------------------------------------
# serialization


def _spec_to_dict(spec: Optional[ModelSpec]):
    if spec is None:
        return None
    d = {}
    for f in fields(spec):
        v = getattr(spec, f.name)
        d[f.name] = v.value if isinstance(v, enum.Enum) else v
    return d


def _spec_from_dict(d) -> Optional[ModelSpec]:
    if d is None:
        return None
    kw = dict(d)
    kw["architecture"] = Architecture(kw["architecture"])
    for key in ("input_activation", "hidden_activation", "output_activation"):
        kw[key] = ActivationKind(kw[key])
    return ModelSpec(**kw)


def _layer_meta(params: ModelParams):
    if isinstance(params, MlpParams):
        return [{"activation": l.activation.value} for l in params.layers]
    if isinstance(params, RnnParams):
        return [{"activation": l.activation.value,
                 "out_activation": l.out_activation.value} for l in params.layers]
    return [{"out_activation": l.out_activation.value} for l in params.layers]


def _architecture_of(params: ModelParams) -> Architecture:
    if isinstance(params, MlpParams):
        return Architecture.BP
    if isinstance(params, RnnParams):
        return Architecture.RNN
    return Architecture.LSTM


def save_model(path, params: ModelParams, scaler: Optional[Scaler] = None) -> None:
    """Write a model file: magic, JSON header, then float64 little-endian arrays.

    The byte stream is a pure function of the arguments, so identical models
    serialize identically.
    """
    named = params.named_arrays()
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "architecture": _architecture_of(params).value,
        "spec": _spec_to_dict(params.spec),
        "scaler": None if scaler is None else {"x_min": scaler.x_min,
                                               "x_max": scaler.x_max},
        "layers": _layer_meta(params),
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in named],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in named:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> Tuple[ModelParams, Optional[Scaler]]:
    """Inverse of ``save_model``; round-trips bit-exactly."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise DataError(f"{path}: not a model file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        try:
            header = json.loads(fh.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt model header: {exc}") from None
        if header.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(
                f"{path}: unsupported format version {header.get('format_version')!r}"
            )
        arrays = []
        for meta in header["arrays"]:
            shape = tuple(meta["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise DataError(f"{path}: truncated array {meta['name']!r}")
            arrays.append(np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
        trailing = fh.read(1)
        if trailing:
            raise DataError(f"{path}: trailing bytes after the last array")

    spec = _spec_from_dict(header["spec"])
    scaler = None
    if header["scaler"] is not None:
        scaler = Scaler(header["scaler"]["x_min"], header["scaler"]["x_max"])
    arch = Architecture(header["architecture"])
    metas = header["layers"]

    if arch is Architecture.BP:
        layers = [MlpLayerParams(arrays[2 * k], arrays[2 * k + 1],
                                 ActivationKind(metas[k]["activation"]))
                  for k in range(len(metas))]
        return MlpParams(layers, spec), scaler
    if arch is Architecture.RNN:
        layers = [RnnLayerParams(arrays[3 * k], arrays[3 * k + 1], arrays[3 * k + 2],
                                 ActivationKind(metas[k]["activation"]),
                                 ActivationKind(metas[k]["out_activation"]))
                  for k in range(len(metas))]
        readout = Readout(arrays[-2], arrays[-1])
        return RnnParams(layers, readout, spec), scaler
    layers = [LstmLayerParams(arrays[2 * k], arrays[2 * k + 1],
                              ActivationKind(metas[k]["out_activation"]))
              for k in range(len(metas))]
    readout = Readout(arrays[-2], arrays[-1])
    return LstmParams(layers, readout, spec), scaler
