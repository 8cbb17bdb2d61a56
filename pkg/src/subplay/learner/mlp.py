"""Two-hidden-layer ReLU MLP with a hand-written backward pass."""

from dataclasses import dataclass

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W_out", "b_out")
HEADS = ("tanh", "linear")


@dataclass
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    head: str = "tanh"

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")

    @property
    def in_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W_out.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def arrays(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self) -> "MlpParams":
        return MlpParams(*(getattr(self, k).copy() for k in PARAM_NAMES), head=self.head)

    def assign(self, other: "MlpParams") -> None:
        for k in PARAM_NAMES:
            getattr(self, k)[...] = getattr(other, k)

    def flat(self) -> np.ndarray:
        return np.concatenate([getattr(self, k).ravel() for k in PARAM_NAMES])

    def equals(self, other: "MlpParams") -> bool:
        return self.head == other.head and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in PARAM_NAMES)


def xavier_normal(fan_out: int, fan_in: int, rng, gain: float = 1.0) -> np.ndarray:
    std = gain * np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=(fan_out, fan_in))


def init_xavier(in_dim: int, out_dim: int, seed, head: str = "tanh", hidden: int = 128,
                gain: float = 1.0) -> MlpParams:
    if in_dim < 1 or out_dim < 1 or hidden < 1:
        raise ValueError("layer sizes must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return MlpParams(
        W1=xavier_normal(hidden, in_dim, rng, gain), b1=np.zeros(hidden),
        W2=xavier_normal(hidden, hidden, rng, gain), b2=np.zeros(hidden),
        W_out=xavier_normal(out_dim, hidden, rng, gain), b_out=np.zeros(out_dim),
        head=head,
    )


@dataclass
class ForwardCache:
    x: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    y: np.ndarray


def forward(params: MlpParams, x, return_cache: bool = False):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {params.in_dim}")
    single = x.ndim == 1
    xb = x[None] if single else x
    h1 = xb @ params.W1.T + params.b1
    np.maximum(h1, 0.0, out=h1)
    h2 = h1 @ params.W2.T + params.b2
    np.maximum(h2, 0.0, out=h2)
    y = h2 @ params.W_out.T + params.b_out
    if params.head == "tanh":
        np.tanh(y, out=y)
    out = y[0] if single else y
    if return_cache:
        return out, ForwardCache(xb, h1, h2, y)
    return out


def hidden_activations(params: MlpParams, x) -> np.ndarray:
    """Second hidden layer (post-ReLU) activations."""
    _, cache = forward(params, x, return_cache=True)
    return cache.h2[0] if np.ndim(x) == 1 else cache.h2


def backward(params: MlpParams, cache: ForwardCache, upstream):
    """Gradients of ``sum(upstream * output)`` w.r.t. parameters and input.

    Returns ``(grads, grad_input)`` where ``grads`` maps parameter names to
    arrays shaped like the parameters.
    """
    g = np.asarray(upstream, dtype=np.float64).reshape(cache.y.shape)
    if params.head == "tanh":
        g = g * (1.0 - cache.y * cache.y)
    grads = {"W_out": g.T @ cache.h2, "b_out": g.sum(axis=0)}
    d2 = g @ params.W_out
    d2 *= cache.h2 > 0.0
    grads["W2"] = d2.T @ cache.h1
    grads["b2"] = d2.sum(axis=0)
    d1 = d2 @ params.W2
    d1 *= cache.h1 > 0.0
    grads["W1"] = d1.T @ cache.x
    grads["b1"] = d1.sum(axis=0)
    grad_input = d1 @ params.W1
    return {k: grads[k] for k in PARAM_NAMES}, grad_input
