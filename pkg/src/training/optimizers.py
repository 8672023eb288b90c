"""
First-order optimizers over named parameter arrays.
"""
import numpy as np

from src.core.errors import ConfigError

OPTIMIZERS = ("sgd", "adam")


class SGD:
    def __init__(self, learning_rate):
        self.learning_rate = learning_rate

    def step(self, params, grads):
        """Return updated copies of params; inputs are not modified."""
        return {name: value - self.learning_rate * grads[name] for name, value in params.items()}


class Adam:
    """Adam with bias correction; moments start at zero."""

    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        self.t += 1
        out = {}
        for name, value in params.items():
            g = grads[name]
            m = self.beta1 * self.m.get(name, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self.v.get(name, 0.0) + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            out[name] = value - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


def create_optimizer(name, learning_rate):
    if name == "sgd":
        return SGD(learning_rate)
    if name == "adam":
        return Adam(learning_rate)
    raise ConfigError(f"unknown optimizer {name!r}, expected one of {OPTIMIZERS}")
