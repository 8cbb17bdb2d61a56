"""Retained subpolicies and their hard-coded combination."""

from dataclasses import dataclass

import numpy as np

from subplay.learner import checkpoint
from subplay.learner.mlp import MlpParams, forward
from subplay.observe import Mask, apply_mask, classify_subgame


@dataclass
class SubpolicySet:
    """``actors[i][k]`` is agent i's retained policy for subgame k, scored ``scores[i, k]``.

    A score of ``inf`` means the slot still holds an unevaluated policy.
    """

    actors: list
    scores: np.ndarray
    partition: tuple

    @classmethod
    def from_actors(cls, actors, partition) -> "SubpolicySet":
        actors = [[a.copy() for a in row] for row in actors]
        return cls(actors, np.full((len(actors), len(partition)), np.inf), tuple(partition))

    @property
    def num_agents(self) -> int:
        return len(self.actors)

    @property
    def sub(self) -> int:
        return len(self.partition)

    def act(self, obs, subgames):
        obs = np.asarray(obs)
        out = np.empty((len(self.actors), self.actors[0][0].out_dim))
        for i, row in enumerate(self.actors):
            k = int(subgames[i])
            if not 0 <= k < len(row) or row[k] is None:
                raise ValueError(f"agent {i} has no subpolicy for subgame {k}")
            out[i] = forward(row[k], obs[i])
        return out

    def substitute(self, agent: int, subgame: int, actor: MlpParams) -> "SubpolicySet":
        """Shallow copy with one slot replaced."""
        actors = [list(row) for row in self.actors]
        actors[agent][subgame] = actor
        return SubpolicySet(actors, self.scores.copy(), self.partition)

    def copy(self) -> "SubpolicySet":
        return SubpolicySet([[a.copy() for a in row] for row in self.actors], self.scores.copy(),
                            self.partition)

    def equals(self, other: "SubpolicySet") -> bool:
        return (self.partition == other.partition and len(self.actors) == len(other.actors)
                and all(a.equals(b) for ra, rb in zip(self.actors, other.actors) for a, b in zip(ra, rb)))


def combine_policies(sets: SubpolicySet, masks, observations, partition=None) -> np.ndarray:
    """Each agent classifies its own mask and acts with the matching subpolicy."""
    partition = sets.partition if partition is None else partition
    subgames, obs = [], []
    for m, o in zip(masks, observations):
        subgames.append(classify_subgame(m, partition))
        obs.append(apply_mask(o, m) if isinstance(m, Mask) else o)
    return sets.act(np.asarray(obs), subgames)


def save_subpolicy_set(path, sets: SubpolicySet, meta: dict | None = None) -> None:
    blocks = {}
    for i, row in enumerate(sets.actors):
        for k, actor in enumerate(row):
            blocks.update(checkpoint.mlp_blocks(f"agent{i}/sub{k}/actor", actor))
    scores = [[None if not np.isfinite(s) else float(s) for s in row] for row in sets.scores]
    header = dict(kind="subpolicy_set", partition=[list(b) for b in sets.partition],
                  num_agents=sets.num_agents, scores=scores,
                  obs_dim=sets.actors[0][0].in_dim, act_dim=sets.actors[0][0].out_dim)
    header.update(meta or {})
    checkpoint.save(path, header, blocks)


def load_subpolicy_set(path) -> tuple:
    header, blocks = checkpoint.load(path)
    if header.get("kind") != "subpolicy_set":
        raise checkpoint.CheckpointError(f"{path} does not hold a subpolicy set")
    partition = tuple(tuple(b) for b in header["partition"])
    actors = [[checkpoint.mlp_from_blocks(f"agent{i}/sub{k}/actor", blocks, "tanh")
               for k in range(len(partition))] for i in range(header["num_agents"])]
    scores = np.array([[np.inf if s is None else s for s in row] for row in header["scores"]])
    return SubpolicySet(actors, scores, partition), header
