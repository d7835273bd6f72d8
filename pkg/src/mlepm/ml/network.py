"""Tiny sequential 1D CNN with a flat parameter vector.

The default stack maps a 9-sample window of standardized kinetic energy to
one standardized corrected value::

    conv(1->2, k3) -> BN -> ReLU -> conv(2->2, k3) -> BN -> ReLU
    -> maxpool(2) -> flatten(4) -> dense(4->9) -> ReLU -> dense(9->1)

Parameters live in one vector in layer declaration order (weights before
biases, gamma before beta), which is also the checkpoint order.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from ..errors import DegenerateBatch, ShapeMismatch
from . import layers as L
from .losses import get_loss

WINDOW = 9


def default_architecture():
    return [
        {"type": "conv", "in": 1, "out": 2, "kernel": 3},
        {"type": "batchnorm", "channels": 2},
        {"type": "relu"},
        {"type": "conv", "in": 2, "out": 2, "kernel": 3},
        {"type": "batchnorm", "channels": 2},
        {"type": "relu"},
        {"type": "maxpool", "window": 2},
        {"type": "flatten"},
        {"type": "dense", "in": 4, "out": 9},
        {"type": "relu"},
        {"type": "dense", "in": 9, "out": 1},
    ]


def _param_shapes(layer):
    kind = layer["type"]
    if kind == "conv":
        return [("weight", (layer["out"], layer["in"], layer["kernel"])), ("bias", (layer["out"],))]
    if kind == "dense":
        return [("weight", (layer["out"], layer["in"])), ("bias", (layer["out"],))]
    if kind == "batchnorm":
        return [("gamma", (layer["channels"],)), ("beta", (layer["channels"],))]
    if kind in ("relu", "maxpool", "flatten"):
        return []
    raise ValueError(f"unknown layer type {kind!r}")


def param_layout(architecture):
    """List of (layer index, name, shape, offset) in declaration order."""
    layout = []
    offset = 0
    for i, layer in enumerate(architecture):
        for name, shape in _param_shapes(layer):
            layout.append((i, name, shape, offset))
            offset += math.prod(shape)
    return layout


def param_count(model_or_architecture):
    arch = getattr(model_or_architecture, "architecture", model_or_architecture)
    return sum(math.prod(shape) for _, _, shape, _ in param_layout(arch))


def init_params(architecture, rng):
    """Uniform(+-sqrt(1/fan_in)) for conv and dense; gamma = 1, beta = 0."""
    chunks = []
    for layer in architecture:
        kind = layer["type"]
        if kind in ("conv", "dense"):
            fan_in = layer["in"] * layer.get("kernel", 1)
            bound = math.sqrt(1.0 / fan_in)
            for _, shape in _param_shapes(layer):
                chunks.append(rng.uniform(-bound, bound, size=math.prod(shape)))
        elif kind == "batchnorm":
            chunks.append(np.ones(layer["channels"]))
            chunks.append(np.zeros(layer["channels"]))
    if not chunks:
        return np.zeros(0)
    return np.concatenate(chunks)


class CnnModel:
    """Architecture, flat parameters and batch-norm running statistics."""

    def __init__(self, architecture=None, params=None, running=None, seed=0, input_length=WINDOW):
        self.input_length = input_length
        self.architecture = copy.deepcopy(architecture if architecture is not None else default_architecture())
        self._layout = param_layout(self.architecture)
        n = param_count(self.architecture)
        if params is None:
            params = init_params(self.architecture, np.random.default_rng(seed))
        params = np.array(params, dtype=float)
        if params.shape != (n,):
            raise ShapeMismatch(f"expected {n} parameters, got shape {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ValueError("parameters must be finite")
        self.params = params
        if running is None:
            running = {
                i: (np.zeros(layer["channels"]), np.ones(layer["channels"]))
                for i, layer in enumerate(self.architecture)
                if layer["type"] == "batchnorm"
            }
        self.running = {int(i): (np.array(m, dtype=float), np.array(v, dtype=float)) for i, (m, v) in running.items()}
        self.training = False

    def copy(self):
        other = CnnModel(self.architecture, self.params.copy(), self.running, input_length=self.input_length)
        other.training = self.training
        return other

    def views(self, params=None):
        """Per-layer dict of parameter views into ``params`` (default: own)."""
        params = self.params if params is None else params
        out = [dict() for _ in self.architecture]
        for i, name, shape, offset in self._layout:
            out[i][name] = params[offset : offset + math.prod(shape)].reshape(shape)
        return out

    def train(self):
        self.training = True
        return self

    def eval(self):
        self.training = False
        return self

    def predict(self, windows):
        """Batch inference with running statistics; returns shape (n,)."""
        out, _ = run_forward(self, windows, training=False)
        return out[:, 0]


def _prepare(model, windows):
    x = np.asarray(windows, dtype=float)
    if x.ndim == 1:
        x = x[None]
    if x.ndim != 2 or x.shape[1] != model.input_length:
        raise ShapeMismatch(f"expected windows of length {model.input_length}, got shape {x.shape}")
    return x[:, None, :]


def run_forward(model, windows, training, params=None):
    """Forward pass; returns (outputs of shape (n, 1), per-layer caches)."""
    x = _prepare(model, windows)
    views = model.views(params)
    caches = []
    for i, layer in enumerate(model.architecture):
        p = views[i]
        kind = layer["type"]
        if kind == "conv":
            caches.append(x)
            x = L.conv1d_forward(x, p["weight"], p["bias"])
        elif kind == "batchnorm":
            mean, var = model.running[i]
            out, cache = L.batchnorm_forward(x, p["gamma"], p["beta"], training, mean, var)
            caches.append(cache)
            x = out
        elif kind == "relu":
            caches.append(x)
            x = L.relu(x)
        elif kind == "maxpool":
            caches.append(x)
            x = L.maxpool1d(x, layer["window"])
        elif kind == "flatten":
            caches.append(x.shape)
            x = x.reshape(x.shape[0], -1)
        elif kind == "dense":
            caches.append(x)
            x = L.dense_forward(x, p["weight"], p["bias"])
    return x, caches


def forward(model, window):
    """Single-window prediction in the model's current mode."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 1:
        raise ShapeMismatch("forward takes one window; use CnnModel.predict for batches")
    if model.training:
        raise DegenerateBatch("a single window cannot be batch-normalized in training mode")
    return float(model.predict(window[None])[0])


def loss_and_grad(model, windows, targets, loss="mae", params=None):
    """Training-mode batch loss, its gradient and the batch-norm statistics.

    Pure with respect to ``model``: running statistics are not touched.
    """
    loss_fn, grad_fn = get_loss(loss)
    targets = np.asarray(targets, dtype=float).ravel()
    if np.asarray(windows).shape[0] < 2:
        raise DegenerateBatch("training batches need at least two windows")
    out, caches = run_forward(model, windows, training=True, params=params)
    pred = out[:, 0]
    value = loss_fn(pred, targets)
    dx = grad_fn(pred, targets)[:, None]

    params = model.params if params is None else params
    views = model.views(params)
    grad = np.zeros_like(params)
    gviews = model.views(grad)
    stats = {}
    for i in reversed(range(len(model.architecture))):
        layer = model.architecture[i]
        cache = caches[i]
        kind = layer["type"]
        if kind == "dense":
            dx, dw, db = L.dense_backward(dx, cache, views[i]["weight"])
            gviews[i]["weight"][...] = dw
            gviews[i]["bias"][...] = db
        elif kind == "relu":
            dx = L.relu_backward(dx, cache)
        elif kind == "flatten":
            dx = dx.reshape(cache)
        elif kind == "maxpool":
            dx = L.maxpool1d_backward(dx, cache, layer["window"])
        elif kind == "batchnorm":
            _, _, mean, var = cache
            stats[i] = (mean, var, dx.shape[0] * dx.shape[2])
            dx, dg, dbeta = L.batchnorm_backward(dx, cache, views[i]["gamma"])
            gviews[i]["gamma"][...] = dg
            gviews[i]["beta"][...] = dbeta
        elif kind == "conv":
            dx, dw, db = L.conv1d_backward(dx, cache, views[i]["weight"])
            gviews[i]["weight"][...] = dw
            gviews[i]["bias"][...] = db
    return value, grad, stats


def backward(model, windows, targets, loss="mae"):
    """Gradient of the mean batch loss with respect to every trainable parameter."""
    return loss_and_grad(model, windows, targets, loss)[1]


def batch_loss(model, windows, targets, loss="mae", params=None):
    """Training-mode loss only; the function the gradient is taken of."""
    loss_fn, _ = get_loss(loss)
    out, _ = run_forward(model, windows, training=True, params=params)
    return loss_fn(out[:, 0], targets)


def apply_running_update(model, stats):
    for i, (mean, var, count) in stats.items():
        rm, rv = model.running[i]
        model.running[i] = L.update_running(rm, rv, mean, var, count)
