"""Partial-observability masks for the adversary and subgame classification.

Visibility is decided per victim agent: a dropped victim has all of its
observation slots (relative position and velocity) zeroed together. Subgames
are indexed by how many victims an adversary agent can see.
"""

from dataclasses import dataclass, field

import numpy as np

from subplay.engine.world import ADVERSARY, WorldState, in_forest, layout, observation_dim, opponent_slots

KINDS = ("uncertainty", "distance", "region", "none")


@dataclass(frozen=True)
class Limitation:
    kind: str = "none"
    uncertainty_rate: float = 0.0
    observable_distance: float = 1.0
    proactive_mask_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown limitation kind {self.kind!r}; expected one of {KINDS}")
        for name in ("uncertainty_rate", "proactive_mask_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.kind == "distance" and self.observable_distance <= 0:
            raise ValueError("observable_distance must be positive")

    @property
    def success_probability(self) -> float:
        """Chance a given victim is seen under the uncertainty limitation."""
        return 1.0 - self.uncertainty_rate


@dataclass
class Mask:
    bits: np.ndarray
    visible_victims: frozenset = field(default_factory=frozenset)

    @property
    def num_visible(self) -> int:
        return len(self.visible_victims)


def visibility(state: WorldState, agent_id: int, limitation: Limitation, noise=None) -> np.ndarray:
    """Boolean vector over victims: which ones ``agent_id`` can see this step."""
    cfg = state.config
    lay = layout(cfg)
    n = cfg.num_victims
    if limitation.kind == "uncertainty":
        seen = noise.random(n) >= limitation.uncertainty_rate
    elif limitation.kind == "distance":
        me = state.positions[lay.adversary_idx[agent_id]]
        d = np.linalg.norm(state.positions[lay.victim_idx] - me, axis=1)
        seen = d <= limitation.observable_distance
    elif limitation.kind == "region":
        if not cfg.has_forest:
            raise ValueError("region limitation needs the world_communication forest")
        seen = ~in_forest(state, lay.victim_idx)
    else:
        seen = np.ones(n, dtype=bool)
    if limitation.proactive_mask_rate > 0.0:
        seen &= noise.random(n) >= limitation.proactive_mask_rate
    return seen


def mask_from_visibility(state_config, seen: np.ndarray) -> Mask:
    bits = np.ones(observation_dim(state_config, ADVERSARY))
    for j in np.flatnonzero(~seen):
        bits[opponent_slots(state_config, ADVERSARY, j)] = 0.0
    return Mask(bits, frozenset(int(j) for j in np.flatnonzero(seen)))


def make_mask(state: WorldState, agent_id: int, limitation: Limitation, noise=None) -> Mask:
    return mask_from_visibility(state.config, visibility(state, agent_id, limitation, noise))


def make_masks(state: WorldState, limitation: Limitation, noise=None) -> list:
    """One mask per adversary agent, drawn in agent order."""
    return [make_mask(state, i, limitation, noise) for i in range(state.config.num_adversaries)]


def apply_mask(observation: np.ndarray, mask) -> np.ndarray:
    bits = mask.bits if isinstance(mask, Mask) else np.asarray(mask)
    observation = np.asarray(observation)
    if observation.shape[-1] != bits.shape[-1]:
        raise ValueError(f"mask has {bits.shape[-1]} entries, observation {observation.shape[-1]}")
    return observation * bits


def subgame_partition(num_victims: int, sub: int) -> tuple:
    """Split visible-victim counts 0..N into ``sub`` contiguous buckets.

    Widths differ by at most one and the wider buckets sit at the top end.
    """
    if not 1 <= sub <= num_victims + 1:
        raise ValueError(f"Sub must lie in [1, {num_victims + 1}], got {sub}")
    base, extra = divmod(num_victims + 1, sub)
    widths = [base] * (sub - extra) + [base + 1] * extra
    buckets, start = [], 0
    for w in widths:
        buckets.append(tuple(range(start, start + w)))
        start += w
    return tuple(buckets)


def bucket_lookup(partition) -> np.ndarray:
    """Array mapping visible count -> subgame index."""
    size = sum(len(b) for b in partition)
    table = np.empty(size, dtype=np.int64)
    for k, b in enumerate(partition):
        table[list(b)] = k
    return table


def classify_subgame(mask, partition) -> int:
    count = mask.num_visible if isinstance(mask, Mask) else int(mask)
    for k, bucket in enumerate(partition):
        if count in bucket:
            return k
    raise ValueError(f"visible count {count} not covered by partition {partition}")


def victim_slot_matrix(config) -> np.ndarray:
    """``[N, 4]`` observation indices belonging to each victim (adversary side)."""
    return np.stack([opponent_slots(config, ADVERSARY, j) for j in range(config.num_victims)])


def team_view(state: WorldState, limitation: Limitation, noise=None):
    """Mask bits ``[M, d]`` and visible-victim counts ``[M]`` for every adversary agent."""
    cfg = state.config
    seen = np.stack([visibility(state, i, limitation, noise) for i in range(cfg.num_adversaries)])
    bits = np.ones((cfg.num_adversaries, observation_dim(cfg, ADVERSARY)))
    slots = victim_slot_matrix(cfg)
    for i, j in zip(*np.nonzero(~seen)):
        bits[i, slots[j]] = 0.0
    return bits, seen.sum(axis=1)
