"""Analytic gradients and the per-sample training loop.

Three gradient routes, all hand-derived and certified against central finite
differences:

* ``mlp_backprop_step``: the classic layer-error recursion for the dense net,
  written in ascent form (errors point toward the target, updates ADD
  ``lr * error * input``);
* ``bptt_gradients``: backpropagation through time for the simple recurrent
  net and the LSTM, written in descent form (derivatives of the squared
  error ``0.5 * (target - prediction)**2``, applied as ``w -= lr * grad``).

The two sign conventions describe the same update and the test suite holds
them together on the dense net.

Training is plain per-sample (online) gradient descent: no mini-batches, no
momentum, no schedules. Dropout regularizes the recurrent stacks only; the
dense net's error recursion is kept exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DataError, NonFiniteGradient, ShapeError, TrainingDiverged
from .models import (
    Architecture,
    LstmParams,
    MlpParams,
    ModelParams,
    ModelSpec,
    RnnParams,
    forward_prediction,
    init_params,
    lstm_forward,
    mlp_forward,
    rnn_forward,
)
from .numkit import ActivationKind, prime_from_output
from .pipeline import WindowedDataset

GRADIENT_CLIP_LIMIT = 5.0
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``learning_rate`` must stay in (0, 0.1] unless ``allow_high_lr`` is set
    (the CLI exposes that acknowledgement as ``--allow-lr-outside-paper``).
    ``bptt_horizon`` limits how many steps the recurrent backward pass
    unrolls; ``None`` means the full window. ``epochs`` may be zero, which
    returns the freshly initialized parameters untouched.
    """

    learning_rate: float = 0.01
    epochs: int = 50
    dropout_rate: float = 0.1
    seed: int = 0
    bptt_horizon: Optional[int] = None
    shuffle_each_epoch: bool = True
    gradient_clip: bool = False
    allow_high_lr: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.learning_rate > 0.1 and not self.allow_high_lr:
            raise ConfigError(
                f"learning_rate {self.learning_rate} is outside the recommended "
                f"interval (0, 0.1]; pass --allow-lr-outside-paper to accept it"
            )
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.bptt_horizon is not None and self.bptt_horizon < 1:
            raise ConfigError(f"bptt_horizon must be >= 1, got {self.bptt_horizon}")


@dataclass
class LossHistory:
    """Per-epoch mean squared error on the scaled training set."""

    train_mse: List[float]
    val_mse: Optional[List[float]] = None

    def __post_init__(self):
        if self.val_mse is not None and len(self.val_mse) != len(self.train_mse):
            raise ValueError("validation history must match the training history length")

    def __len__(self) -> int:
        return len(self.train_mse)


def loss_history_csv(history: LossHistory) -> str:
    """Render a loss history as ``epoch,train_mse,val_mse`` CSV text."""
    lines = ["epoch,train_mse,val_mse"]
    for k, mse in enumerate(history.train_mse):
        val = "" if history.val_mse is None else repr(history.val_mse[k])
        lines.append(f"{k + 1},{mse!r},{val}")
    return "\n".join(lines) + "\n"


def sample_loss(params: ModelParams, window, target: float) -> float:
    """Squared-error loss 0.5*(target - prediction)**2 on one sample."""
    diff = float(target) - forward_prediction(params, window)
    return 0.5 * diff * diff


def apply_dropout(h, rate: float, rng=None):
    """Inverted dropout: zero each component with probability ``rate`` and
    scale survivors by 1/(1-rate) so the expected value is unchanged.

    Rate 0 is the identity (evaluation mode). Masks come from ``rng``, so a
    seeded generator reproduces them exactly.
    """
    h = np.asarray(h, dtype=np.float64)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return h
    if rng is None:
        raise ValueError("dropout with rate > 0 requires a random generator")
    mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
    return h * mask


# ---------------------------------------------------------------------------
# dense net: layer-error recursion


def _mlp_errors(params: MlpParams, cache, target: float) -> List[np.ndarray]:
    """Ascent-form layer errors: output layer activation'(I)*(T - O), hidden
    layers activation'(I) * (W_above^T @ error_above)."""
    layers = params.layers
    errors: List[Optional[np.ndarray]] = [None] * len(layers)
    errors[-1] = prime_from_output(
        layers[-1].activation, cache.outputs[-1], cache.preacts[-1]
    ) * (target - cache.outputs[-1])
    for k in range(len(layers) - 2, -1, -1):
        back = layers[k + 1].weights.T @ errors[k + 1]
        errors[k] = prime_from_output(
            layers[k].activation, cache.outputs[k], cache.preacts[k]
        ) * back
    return errors


def _mlp_step(params: MlpParams, x, target: float, learning_rate: float) -> float:
    """One in-place ascent update on every weight and bias; returns the
    pre-update prediction."""
    pred, cache = mlp_forward(params, x)
    errors = _mlp_errors(params, cache, target)
    below = cache.x
    for k, (layer, err) in enumerate(zip(params.layers, errors)):
        if not np.all(np.isfinite(err)):
            raise NonFiniteGradient(f"non-finite layer error in layers.{k}")
        layer.weights += learning_rate * np.outer(err, below)
        layer.bias += learning_rate * err
        below = cache.outputs[k]
    return pred


def mlp_backprop_step(params: MlpParams, x, target: float,
                      learning_rate: float) -> MlpParams:
    """One per-sample update of the dense net, in place.

    Output error activation'(I)*(T - O), hidden error
    activation'(I) * sum of downstream error * weight, then
    ``W += lr * error * input`` and ``bias += lr * error`` (bias treated as a
    weight on a constant input of one).
    """
    if not learning_rate > 0.0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    _mlp_step(params, x, float(target), learning_rate)
    return params


def mlp_gradients(params: MlpParams, x, target: float) -> Dict[str, np.ndarray]:
    """Descent-form gradients of 0.5*(target - prediction)**2 for the dense
    net, keyed like ``named_arrays``. The negation of the ascent errors."""
    _, cache = mlp_forward(params, x)
    errors = _mlp_errors(params, cache, float(target))
    grads: Dict[str, np.ndarray] = {}
    below = cache.x
    for k, err in enumerate(errors):
        grads[f"layers.{k}.weights"] = -np.outer(err, below)
        grads[f"layers.{k}.bias"] = -err
        below = cache.outputs[k]
    return grads


# ---------------------------------------------------------------------------
# recurrent nets: backpropagation through time


def _through_activation(kind, d, out, pre):
    if kind is ActivationKind.LINEAR:
        return d
    return d * prime_from_output(kind, out, pre)


def _zero_grads(params: ModelParams) -> Dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.named_arrays()}


def _recurrent_backward(params, cache, target: float, grads: Dict[str, np.ndarray],
                        horizon: Optional[int] = None, check: bool = False) -> None:
    """Accumulate squared-error gradients into ``grads`` by walking the
    cached forward pass backward, top layer first, last time step first.

    ``horizon`` truncates the unroll: only the last ``horizon`` time steps
    contribute. ``check`` validates finiteness step by step so failures can
    name the offending layer and time step.
    """
    layers = params.layers
    top = len(layers) - 1
    steps_count = len(cache.layers[0].states)
    start = 0 if horizon is None else max(0, steps_count - horizon)

    d_pred = cache.prediction - target
    grads["readout.weights"] += d_pred * cache.readout_input
    grads["readout.bias"][0] += d_pred
    if check and not np.isfinite(d_pred):
        raise NonFiniteGradient("non-finite gradient in readout at the final step")
    d_v = d_pred * params.readout.weights
    if cache.readout_mask is not None:
        d_v = d_v * cache.readout_mask

    # d_out[t]: gradient w.r.t. the current layer's activated output at t
    d_out: List[Optional[np.ndarray]] = [None] * steps_count
    d_out[-1] = d_v

    for li in range(top, -1, -1):
        layer = layers[li]
        lc = cache.layers[li]
        hidden = layer.hidden_size
        is_lstm = lc.steps[0] is not None
        d_below: List[Optional[np.ndarray]] = [None] * steps_count
        dh_carry = np.zeros(hidden)
        dc_carry = np.zeros(hidden) if is_lstm else None
        if is_lstm:
            g_w = grads[f"layers.{li}.w_gates"]
            g_b = grads[f"layers.{li}.b_gates"]
        else:
            g_in = grads[f"layers.{li}.w_in"]
            g_rec = grads[f"layers.{li}.w_rec"]
            g_bias = grads[f"layers.{li}.bias"]

        for t in range(steps_count - 1, start - 1, -1):
            da = d_out[t]
            if da is None:
                dh = dh_carry
            else:
                dh = dh_carry + _through_activation(
                    layer.out_activation, da, lc.outputs[t], lc.states[t])

            if is_lstm:
                gc = lc.steps[t]
                do = dh * gc.tanh_c
                dc = dc_carry + dh * gc.o * (1.0 - gc.tanh_c * gc.tanh_c)
                df = dc * gc.c_prev
                di = dc * gc.ctilde
                dct = dc * gc.i
                dz = np.concatenate((
                    df * gc.f * (1.0 - gc.f),
                    di * gc.i * (1.0 - gc.i),
                    do * gc.o * (1.0 - gc.o),
                    dct * (1.0 - gc.ctilde * gc.ctilde),
                ))
                if check and not np.all(np.isfinite(dz)):
                    raise NonFiniteGradient(
                        f"non-finite gradient in layers.{li}.w_gates at time step {t}")
                g_w += np.outer(dz, gc.hx)
                g_b += dz
                dhx = layer.w_gates.T @ dz
                dh_carry = dhx[:hidden]
                dc_carry = dc * gc.f
                if li > 0:
                    d_below[t] = dhx[hidden:]
            else:
                dz = _through_activation(layer.activation, dh, lc.states[t], lc.preacts[t])
                if check and not np.all(np.isfinite(dz)):
                    raise NonFiniteGradient(
                        f"non-finite gradient in layers.{li}.w_in at time step {t}")
                g_in += np.outer(dz, lc.inputs[t])
                if t > 0:
                    g_rec += np.outer(dz, lc.states[t - 1])
                g_bias += dz
                dh_carry = layer.w_rec.T @ dz
                if li > 0:
                    d_below[t] = layer.w_in.T @ dz

        if li > 0:
            masks = cache.layers[li - 1].out_masks
            d_out = [
                None if d is None else (d if masks[t] is None else d * masks[t])
                for t, d in enumerate(d_below)
            ]


def bptt_gradients(params, window, target: float,
                   horizon: Optional[int] = None) -> Dict[str, np.ndarray]:
    """Exact gradients of 0.5*(target - prediction)**2 for a recurrent model,
    unrolled over the window (or the last ``horizon`` steps), keyed like
    ``named_arrays``. Dropout is off: this is the evaluation-mode gradient.
    """
    if isinstance(params, RnnParams):
        _, cache = rnn_forward(params, window)
    elif isinstance(params, LstmParams):
        _, cache = lstm_forward(params, window)
    else:
        raise TypeError(f"bptt_gradients needs a recurrent model, got {type(params)!r}")
    grads = _zero_grads(params)
    _recurrent_backward(params, cache, float(target), grads, horizon)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            for buf in grads.values():
                buf.fill(0.0)
            # locate the offending step; raises with layer and time step
            _recurrent_backward(params, cache, float(target), grads, horizon, check=True)
            raise NonFiniteGradient(f"non-finite gradient in {name}")
    return grads


# ---------------------------------------------------------------------------
# training loop


def dataset_mse(params: ModelParams, data: WindowedDataset) -> float:
    """Evaluation-mode mean squared error on a windowed dataset (scaled space)."""
    if len(data) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    sq = 0.0
    for k in range(len(data)):
        diff = forward_prediction(params, data.features[k]) - data.labels[k]
        sq += diff * diff
    return float(sq / len(data))


def train(spec: ModelSpec, cfg: TrainConfig, data: WindowedDataset,
          val_data: Optional[WindowedDataset] = None
          ) -> Tuple[ModelParams, LossHistory]:
    """Per-sample online gradient descent over ``cfg.epochs`` passes.

    Sample order is reshuffled each epoch from a generator seeded with
    ``cfg.seed`` (also the source of dropout masks), so identical inputs
    reproduce bit-identical parameters. The recorded per-epoch MSE is
    accumulated from the training-pass predictions themselves. Training
    aborts with ``TrainingDiverged`` once an epoch MSE goes non-finite or
    exceeds 1e6 times the first epoch's.
    """
    if len(data) == 0:
        raise DataError("training dataset is empty")
    if data.window_len != spec.window_len:
        raise ShapeError(
            f"dataset windows have length {data.window_len}, model expects "
            f"{spec.window_len}"
        )
    params = init_params(spec)
    rng = np.random.default_rng(cfg.seed)
    n = len(data)
    is_mlp = isinstance(params, MlpParams)
    rate = 0.0 if is_mlp else cfg.dropout_rate
    forward = lstm_forward if isinstance(params, LstmParams) else rnn_forward
    arrays = None if is_mlp else dict(params.named_arrays())
    grads = None if is_mlp else _zero_grads(params)
    lr = cfg.learning_rate

    history: List[float] = []
    val_history: Optional[List[float]] = None if val_data is None else []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle_each_epoch else range(n)
        sq = 0.0
        for k in order:
            window = data.features[k]
            target = data.labels[k]
            if is_mlp:
                pred = _mlp_step(params, window, target, lr)
            else:
                if rate > 0.0:
                    pred, cache = forward(params, window, rate, rng)
                else:
                    pred, cache = forward(params, window)
                for buf in grads.values():
                    buf.fill(0.0)
                _recurrent_backward(params, cache, target, grads, cfg.bptt_horizon)
                if cfg.gradient_clip:
                    for buf in grads.values():
                        np.clip(buf, -GRADIENT_CLIP_LIMIT, GRADIENT_CLIP_LIMIT, out=buf)
                for name, buf in grads.items():
                    arrays[name] -= lr * buf
            diff = pred - target
            sq += diff * diff
        mse = float(sq / n)
        history.append(mse)
        baseline = max(history[0], 1e-300)
        if not np.isfinite(mse) or mse > DIVERGENCE_FACTOR * baseline:
            raise TrainingDiverged(
                f"training diverged at epoch {epoch + 1}: mse {mse:.6e} "
                f"against initial {history[0]:.6e}"
            )
        if val_history is not None:
            val_history.append(dataset_mse(params, val_data))
    return params, LossHistory(history, val_history)


# ---------------------------------------------------------------------------
# finite-difference certification


def gradient_check(spec: ModelSpec, sample, epsilon: float = 1e-5) -> float:
    """Compare every analytic gradient against a central finite difference.

    ``sample`` is a (window, target) pair. Returns the maximum relative error
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12) over all
    parameters. Dropout is disabled so the loss surface is deterministic.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")
    window, target = sample
    target = float(target)
    params = init_params(spec)
    if isinstance(params, MlpParams):
        grads = mlp_gradients(params, window, target)
    else:
        grads = bptt_gradients(params, window, target)

    worst = 0.0
    for name, arr in params.named_arrays():
        analytic = grads[name]
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + epsilon
            loss_hi = sample_loss(params, window, target)
            arr[idx] = orig - epsilon
            loss_lo = sample_loss(params, window, target)
            arr[idx] = orig
            numeric = (loss_hi - loss_lo) / (2.0 * epsilon)
            rel = abs(analytic[idx] - numeric) / max(
                abs(analytic[idx]), abs(numeric), 1e-12)
            worst = max(worst, rel)
    return worst
