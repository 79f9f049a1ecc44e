"""Optimizers and training-rate schedules.

Adam is the default for adversarial stability; plain SGD is available for
tests and config overrides. The learning rate decays exponentially per
epoch; the adversary weight follows the usual logistic ramp from 0 to 1
over the run's total iteration count.
"""

from __future__ import annotations

import math

import numpy as np

from gprda.errors import ConfigError, ShapeError
from gprda.nn.store import ParameterStore

try:  # fused update kernel; the pure-numpy path below is the reference
    import numba

    @numba.njit(cache=True, fastmath=True)
    def _adam_update(p, g, m, v, b1, b2, eps, c1, c2, lr):
        a1 = 1.0 - b1
        a2 = 1.0 - b2
        step_scale = lr / c1
        inv_c2 = 1.0 / c2
        for i in range(p.size):
            m[i] = b1 * m[i] + a1 * g[i]
            v[i] = b2 * v[i] + a2 * (g[i] * g[i])
            p[i] -= step_scale * m[i] / (math.sqrt(v[i] * inv_c2) + eps)

except ImportError:  # pragma: no cover
    _adam_update = None


def lr_schedule(lr0: float, epoch: int, decay: float = 0.9) -> float:
    """Exponential decay: lr0 * decay**epoch (epoch is 0-based)."""
    return lr0 * decay**epoch


def lambda_schedule(iteration: int, total: int) -> float:
    """Adversary weight 2/(1+exp(-10*p)) - 1 with progress p = iteration/total."""
    if total <= 0:
        raise ConfigError("lambda_schedule: total iterations must be positive")
    if not 0 <= iteration <= total:
        raise ConfigError("lambda_schedule: iteration out of range")
    p = iteration / total
    return 2.0 / (1.0 + math.exp(-10.0 * p)) - 1.0


class Sgd:
    def __init__(self, store: ParameterStore):
        self.store = store

    def step(self, lr: float) -> None:
        for name, p in self.store.items():
            if p.grad is None:
                continue
            if p.grad.shape != p.data.shape:
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            p.data -= lr * p.grad


class Adam:
    def __init__(self, store: ParameterStore, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.store = store
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        max_size = 0
        for name, p in store.items():
            store.opt_state[name] = {
                "m": np.zeros_like(p.data),
                "v": np.zeros_like(p.data),
            }
            max_size = max(max_size, p.data.size)
        self._scratch = np.empty(max_size)

    def step(self, lr: float) -> None:
        # in-place updates through a shared scratch buffer; the moment
        # arrays are the large ones and repeated temporaries dominate cost
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for name, p in self.store.items():
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise ShapeError(f"gradient shape mismatch for {name!r}")
            st = self.store.opt_state[name]
            m, v = st["m"], st["v"]
            if _adam_update is not None:
                _adam_update(p.data.reshape(-1), np.ascontiguousarray(g).reshape(-1),
                             m.reshape(-1), v.reshape(-1), b1, b2, self.eps, c1, c2, lr)
                continue
            s = self._scratch[: g.size].reshape(g.shape)
            m *= b1
            np.multiply(g, 1.0 - b1, out=s)
            m += s
            v *= b2
            np.multiply(g, g, out=s)
            s *= 1.0 - b2
            v += s
            np.divide(v, c2, out=s)
            np.sqrt(s, out=s)
            s += self.eps
            np.divide(m, s, out=s)
            s *= lr / c1
            p.data -= s


def make_optimizer(kind: str, store: ParameterStore):
    if kind == "adam":
        return Adam(store)
    if kind == "sgd":
        return Sgd(store)
    raise ConfigError(f"unknown optimizer kind {kind!r}")
