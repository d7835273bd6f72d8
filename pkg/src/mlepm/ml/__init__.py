"""Small convolutional regressor trained from scratch with numpy."""

from .adam import AdamState, adam_step
from .checkpoint import FORMAT_VERSION, load_checkpoint, save_checkpoint
from .layers import batchnorm_forward, conv1d_forward, dense_forward, maxpool1d, relu
from .losses import mae_loss, mse_loss
from .network import CnnModel, backward, default_architecture, forward, param_count
from .training import EarlyStopping, TrainingConfig, TrainingHistory, train

__all__ = [
    "AdamState",
    "CnnModel",
    "EarlyStopping",
    "FORMAT_VERSION",
    "TrainingConfig",
    "TrainingHistory",
    "adam_step",
    "backward",
    "batchnorm_forward",
    "conv1d_forward",
    "default_architecture",
    "dense_forward",
    "forward",
    "load_checkpoint",
    "mae_loss",
    "maxpool1d",
    "mse_loss",
    "param_count",
    "relu",
    "save_checkpoint",
    "train",
]
