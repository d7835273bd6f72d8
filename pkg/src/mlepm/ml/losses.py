import numpy as np

from ..errors import EmptyBatch, LengthMismatch


def _check(pred, target):
    pred = np.asarray(pred, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if pred.size == 0 or target.size == 0:
        raise EmptyBatch("loss needs at least one sample")
    if pred.size != target.size:
        raise LengthMismatch(f"prediction has {pred.size} values, target has {target.size}")
    return pred, target


def mae_loss(pred, target):
    pred, target = _check(pred, target)
    return float(np.mean(np.abs(pred - target)))


def mse_loss(pred, target):
    pred, target = _check(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae_grad(pred, target):
    """Subgradient of the mean absolute error; zero where pred == target."""
    pred, target = _check(pred, target)
    return np.sign(pred - target) / pred.size


def mse_grad(pred, target):
    pred, target = _check(pred, target)
    return 2.0 * (pred - target) / pred.size


LOSSES = {
    "mae": (mae_loss, mae_grad),
    "mse": (mse_loss, mse_grad),
}


def get_loss(name):
    try:
        return LOSSES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; expected one of {sorted(LOSSES)}") from None
