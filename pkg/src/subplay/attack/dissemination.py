"""Transition dissemination between per-subgame replay buffers."""

from dataclasses import dataclass

import numpy as np

from subplay.learner.buffer import ReplayBuffer, Transition


@dataclass
class DisseminationTable:
    dr: np.ndarray
    lam: float
    sigma: float

    @property
    def sub(self) -> int:
        return self.dr.shape[0]

    @classmethod
    def identity(cls, sub: int) -> "DisseminationTable":
        return cls(np.eye(sub), 0.0, 0.0)


def build_dissemination_table(rates, lam: float = 0.5, sub: int | None = None) -> DisseminationTable:
    """``dr[src, dst]``: probability a transition from subgame src is copied to dst.

    The destination's occupancy decides the branch. Rarely visited
    destinations (rate <= lam) use base ``lam - rate + sigma`` clipped to
    [0, 1]; busy ones use ``sigma``. The exponent is ``|src - dst| / sqrt(sub)``.
    ``sigma`` is the population standard deviation of the rates.
    """
    rates = np.asarray(getattr(rates, "rates", rates), dtype=np.float64)
    sub = rates.size if sub is None else sub
    if rates.size != sub:
        raise ValueError(f"{rates.size} occupancy rates for {sub} subgames")
    sigma = float(np.std(rates))
    idx = np.arange(sub)
    expo = np.abs(idx[:, None] - idx[None, :]) / np.sqrt(sub)
    base = np.where(rates <= lam, lam - rates + sigma, sigma)[None, :]
    dr = np.clip(np.power(base, expo), 0.0, 1.0)
    return DisseminationTable(dr, lam, sigma)


class BufferSet:
    """Replay buffers indexed by ``[agent][subgame]``."""

    def __init__(self, num_agents: int, sub: int, capacity: int, batch_size: int, team_size: int,
                 obs_dim: int, act_dim: int = 2):
        self.buffers = [[ReplayBuffer(capacity, batch_size, team_size, obs_dim, act_dim)
                         for _ in range(sub)] for _ in range(num_agents)]
        self._source = np.zeros((num_agents, sub), dtype=np.int64)

    def __getitem__(self, i):
        return self.buffers[i]

    def sizes(self) -> np.ndarray:
        return np.array([[len(b) for b in row] for row in self.buffers])

    def source_counts(self) -> np.ndarray:
        """Transitions generated per (agent, subgame), before any copies."""
        return self._source.copy()

    def note_source(self, agent: int, subgame: int) -> None:
        self._source[agent, subgame] += 1


def route_transition(t: Transition, table: DisseminationTable, buffers, agent: int, coin) -> list:
    """Store ``t`` in its own subgame buffer and copy it elsewhere per the table.

    Each other destination gets an independent Bernoulli draw. Returns the
    list of destination subgames (source first).
    """
    src = int(t.subgame)
    row = buffers[agent]
    row[src].add(t)
    if isinstance(buffers, BufferSet):
        buffers.note_source(agent, src)
    stored = [src]
    sub = table.sub
    if sub == 1:
        return stored
    draws = coin.random(sub)
    copy = Transition(t.obs, t.action, t.reward, t.next_obs, t.mask, src, t.next_subgames, True)
    for k in range(sub):
        if k != src and draws[k] < table.dr[src, k]:
            row[k].add(copy)
            stored.append(k)
    return stored
