"""Forward and backward passes of the network's layer kinds.

Activations are batched arrays: ``(batch, channels, length)`` for the
convolutional part, ``(batch, features)`` after flattening.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DegenerateBatch, InputTooShort

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        return x[None], True
    return x, False


def conv1d_forward(x, weight, bias):
    """Valid cross-correlation. ``weight`` has shape (out, in, kernel).

    Accepts a single ``(channels, length)`` input or a batch.
    """
    x, single = _as_batch(x)
    kernel = weight.shape[2]
    if x.shape[2] < kernel:
        raise InputTooShort(f"input length {x.shape[2]} is shorter than kernel {kernel}")
    cols = sliding_window_view(x, kernel, axis=2)
    out = np.einsum("nclk,ock->nol", cols, weight) + bias[None, :, None]
    return out[0] if single else out


def conv1d_backward(dout, x, weight):
    kernel = weight.shape[2]
    cols = sliding_window_view(x, kernel, axis=2)
    dweight = np.einsum("nol,nclk->ock", dout, cols)
    dbias = dout.sum(axis=(0, 2))
    dx = np.zeros_like(x)
    length = dout.shape[2]
    for k in range(kernel):
        dx[:, :, k : k + length] += np.einsum("nol,oc->ncl", dout, weight[:, :, k])
    return dx, dweight, dbias


def batchnorm_forward(x, gamma, beta, training, running_mean=None, running_var=None, eps=BN_EPS):
    """Per-channel normalization over batch and length.

    Returns ``(out, cache)``; in training mode the cache carries the batch
    mean and (biased) variance so the caller can update running statistics.
    """
    if training:
        if x.shape[0] < 2:
            raise DegenerateBatch(f"training-mode batch norm needs batch size >= 2, got {x.shape[0]}")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
    else:
        mean, var = running_mean, running_var
    std = np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) / std[None, :, None]
    out = gamma[None, :, None] * xhat + beta[None, :, None]
    return out, (xhat, std, mean, var)


def batchnorm_backward(dout, cache, gamma):
    xhat, std, _, _ = cache
    count = dout.shape[0] * dout.shape[2]
    dgamma = (dout * xhat).sum(axis=(0, 2))
    dbeta = dout.sum(axis=(0, 2))
    dxhat = dout * gamma[None, :, None]
    dx = (
        count * dxhat
        - dxhat.sum(axis=(0, 2))[None, :, None]
        - xhat * (dxhat * xhat).sum(axis=(0, 2))[None, :, None]
    ) / (count * std[None, :, None])
    return dx, dgamma, dbeta


def update_running(running_mean, running_var, batch_mean, batch_var, count, momentum=BN_MOMENTUM):
    # running variance tracks the unbiased estimate
    unbiased = batch_var * count / max(count - 1, 1)
    new_mean = (1.0 - momentum) * running_mean + momentum * batch_mean
    new_var = (1.0 - momentum) * running_var + momentum * unbiased
    return new_mean, new_var


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(dout, x):
    return dout * (x > 0.0)


def maxpool1d(x, window=2):
    """Non-overlapping max pooling along the last axis; a trailing remainder is dropped."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // window
    blocks = x[..., : n * window].reshape(x.shape[:-1] + (n, window))
    return blocks.max(axis=-1)


def maxpool1d_backward(dout, x, window=2):
    n = dout.shape[-1]
    blocks = x[..., : n * window].reshape(x.shape[:-1] + (n, window))
    winner = blocks.argmax(axis=-1)
    mask = np.arange(window) == winner[..., None]
    dx = np.zeros_like(x)
    dx[..., : n * window] = (mask * dout[..., None]).reshape(x.shape[:-1] + (n * window,))
    return dx


def dense_forward(x, weight, bias):
    """``weight`` has shape (out, in); works on a vector or a batch of rows."""
    return np.asarray(x, dtype=float) @ weight.T + bias


def dense_backward(dout, x, weight):
    return dout @ weight, dout.T @ x, dout.sum(axis=0)
