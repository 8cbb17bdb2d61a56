"""Occupancy-rate estimators: how often play lands in each subgame."""

from dataclasses import dataclass
from math import comb

import numpy as np

METHODS = ("static_estimation", "static_observation", "dynamic_observation")


@dataclass
class OccupancyVector:
    rates: np.ndarray
    method: str = "static_observation"
    beta: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown occupancy method {self.method!r}")
        self.rates = np.asarray(self.rates, dtype=np.float64)
        if np.any(self.rates < 0):
            raise ValueError("occupancy rates must be non-negative")

    def __len__(self) -> int:
        return self.rates.size


def binomial_rates(num_victims: int, mu: float) -> np.ndarray:
    """P(exactly k of N victims seen), each seen independently with probability mu."""
    return np.array([comb(num_victims, k) * mu ** k * (1.0 - mu) ** (num_victims - k)
                     for k in range(num_victims + 1)])


def occupancy_static_estimation(num_victims: int, mu: float, partition=None) -> OccupancyVector:
    """Binomial occupancy; with a coarse ``partition`` bucket probabilities are summed."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    if num_victims < 1:
        raise ValueError("num_victims must be >= 1")
    rates = binomial_rates(num_victims, mu)
    if partition is not None:
        rates = np.array([rates[list(b)].sum() for b in partition])
    return OccupancyVector(rates, "static_estimation", mu=mu)


def occupancy_static_observation(counts, agent: int | None = None) -> OccupancyVector:
    """Share of transitions per subgame.

    ``counts`` is a per-subgame count vector, an ``[agent, subgame]`` matrix or
    a :class:`~subplay.attack.dissemination.BufferSet` (pre-dissemination
    counts). Rows are summed over agents unless ``agent`` picks one.
    """
    if hasattr(counts, "source_counts"):
        counts = counts.source_counts()
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim == 2:
        counts = counts[agent] if agent is not None else counts.sum(axis=0)
    total = counts.sum()
    if total <= 0:
        raise ValueError("no transitions observed; occupancy is undefined")
    return OccupancyVector(counts / total, "static_observation")


def occupancy_dynamic_observation(prev: OccupancyVector, episode_counts, beta: float = 0.9,
                                  episode_length: int | None = None,
                                  renormalize: bool = True) -> OccupancyVector:
    """Exponentially weighted update with this episode's subgame frequencies."""
    counts = np.asarray(episode_counts, dtype=np.float64)
    length = counts.sum() if episode_length is None else episode_length
    current = counts / length if length > 0 else np.zeros_like(counts)
    rates = beta * prev.rates + (1.0 - beta) * current
    if renormalize:
        s = rates.sum()
        if s > 0:
            rates = rates / s
    return OccupancyVector(rates, "dynamic_observation", beta=beta)
