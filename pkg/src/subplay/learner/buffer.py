"""FIFO replay storage for team-level transitions."""

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    """One joint step of a team.

    Arrays are stacked over the team: ``obs``/``next_obs``/``mask`` are
    ``[n, d]``, ``action`` is ``[n, 2]``, ``reward`` is ``[n]``. ``subgame`` is
    the owning agent's subgame index, ``next_subgames`` the per-agent indices
    at ``t + 1`` and ``copied`` marks a dissemination copy.
    """

    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    mask: np.ndarray
    subgame: int = 0
    next_subgames: np.ndarray | None = None
    copied: bool = False


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    mask: np.ndarray
    subgame: np.ndarray
    next_subgames: np.ndarray
    copied: np.ndarray

    def __len__(self) -> int:
        return self.obs.shape[0]


_FIELDS = ("obs", "action", "reward", "next_obs", "mask", "subgame", "next_subgames", "copied")


class ReplayBuffer:
    """Ring buffer with lazy growth up to ``capacity``.

    Sampling is uniform without replacement, except when the requested batch
    equals the capacity and the buffer is full: then the whole buffer is
    returned oldest first.
    """

    def __init__(self, capacity: int, batch_size: int, team_size: int, obs_dim: int, act_dim: int = 2):
        if capacity < 1 or batch_size < 1:
            raise ValueError("capacity and batch_size must be >= 1")
        self.capacity = capacity
        self.batch_size = batch_size
        self.team_size = team_size
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self._alloc = 0
        self._data = {}
        self._next = 0
        self._size = 0
        self.total_added = 0
        self._grow(min(capacity, 1024))

    def _grow(self, rows: int):
        n, d, a = self.team_size, self.obs_dim, self.act_dim
        shapes = dict(obs=((n, d), np.float64), action=((n, a), np.float64), reward=((n,), np.float64),
                      next_obs=((n, d), np.float64), mask=((n, d), np.float64), subgame=((), np.int64),
                      next_subgames=((n,), np.int64), copied=((), np.bool_))
        new = {}
        for k, (shape, dtype) in shapes.items():
            arr = np.zeros((rows,) + shape, dtype=dtype)
            if self._alloc:
                arr[:self._alloc] = self._data[k]
            new[k] = arr
        self._data = new
        self._alloc = rows

    def __len__(self) -> int:
        return self._size

    def ready(self) -> bool:
        return self._size >= self.batch_size

    def add(self, t: Transition) -> None:
        if self._size < self.capacity and self._next >= self._alloc:
            self._grow(min(self.capacity, 2 * self._alloc))
        i = self._next
        d = self._data
        d["obs"][i] = t.obs
        d["action"][i] = t.action
        d["reward"][i] = t.reward
        d["next_obs"][i] = t.next_obs
        d["mask"][i] = t.mask
        d["subgame"][i] = t.subgame
        d["next_subgames"][i] = 0 if t.next_subgames is None else t.next_subgames
        d["copied"][i] = t.copied
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self.total_added += 1

    def _order(self) -> np.ndarray:
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def _take(self, idx) -> Batch:
        return Batch(**{k: self._data[k][idx] for k in _FIELDS})

    def entries(self) -> Batch:
        """Everything stored, oldest first."""
        return self._take(self._order())

    def sample(self, rng=None, batch_size: int | None = None) -> Batch:
        bs = self.batch_size if batch_size is None else batch_size
        if self._size == 0:
            return self._take(np.zeros(0, dtype=np.int64))
        if bs >= self._size:
            return self.entries()
        idx = np.sort(rng.choice(self._size, size=bs, replace=False))
        return self._take(self._order()[idx])
