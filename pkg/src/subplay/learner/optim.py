"""Adam and exponential-moving-average target updates."""

from dataclasses import dataclass

import numpy as np

from subplay.learner.mlp import PARAM_NAMES, MlpParams


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        arrays = params.arrays() if isinstance(params, MlpParams) else params
        return cls({k: np.zeros_like(a) for k, a in arrays.items()},
                   {k: np.zeros_like(a) for k, a in arrays.items()}, **kw)

    def copy(self) -> "AdamState":
        return AdamState({k: a.copy() for k, a in self.m.items()},
                         {k: a.copy() for k, a in self.v.items()},
                         self.t, self.lr, self.beta1, self.beta2, self.eps)


def adam_step(params, grads: dict, state: AdamState):
    """Bias-corrected Adam, applied in place; returns ``(params, state)``."""
    arrays = params.arrays() if isinstance(params, MlpParams) else params
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for k, p in arrays.items():
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def ema_update(target: MlpParams, online: MlpParams, decay: float = 0.95) -> MlpParams:
    for k in PARAM_NAMES:
        t = getattr(target, k)
        t *= decay
        t += (1.0 - decay) * getattr(online, k)
    return target
