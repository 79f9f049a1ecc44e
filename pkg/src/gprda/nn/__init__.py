from gprda.nn.engine import (
    DOMAIN_SOURCE,
    DOMAIN_TARGET,
    Tensor,
    conv1d,
    domain_loss,
    flatten,
    gradient_reversal,
    leaky_relu,
    linear,
    mse_loss,
    sum_fuse,
    upsample_linear,
)
from gprda.nn.optim import Adam, Sgd, lambda_schedule, lr_schedule, make_optimizer
from gprda.nn.store import ParameterStore, kaiming_uniform

__all__ = [
    "DOMAIN_SOURCE",
    "DOMAIN_TARGET",
    "Tensor",
    "conv1d",
    "domain_loss",
    "flatten",
    "gradient_reversal",
    "leaky_relu",
    "linear",
    "mse_loss",
    "sum_fuse",
    "upsample_linear",
    "Adam",
    "Sgd",
    "lambda_schedule",
    "lr_schedule",
    "make_optimizer",
    "ParameterStore",
    "kaiming_uniform",
]
