"""Victim hidden-layer activations recorded while facing different opponents.

The dump feeds an external embedding (t-SNE or similar); nothing here
computes one.
"""

import csv

import numpy as np

from subplay import rng as rngs
from subplay.learner.mlp import hidden_activations
from subplay.observe import bucket_lookup, subgame_partition
from subplay.rollout import begin_episode, episode_steps

HEADER = "# subplay-activations v1"
ACTIVATION_TAG = "activations"


def export_activations(victim, opponents: dict, timesteps: int, env_cfg, limitation, seed: int = 0,
                       agent: int | None = 0) -> list:
    """Rows ``(label, episode, step, agent, activations[128])``.

    ``opponents`` maps a label to a frozen adversary. Each opponent is played
    for exactly ``timesteps`` steps, the last episode being cut short if
    needed. ``agent=None`` records every victim agent at each step.
    """
    if timesteps < 0:
        raise ValueError("timesteps must be non-negative")
    n = env_cfg.num_victims
    agents = range(n) if agent is None else [agent]
    rows = []
    for label, adversary in opponents.items():
        partition = getattr(adversary, "partition", None) or subgame_partition(n, n + 1)
        lookup = bucket_lookup(partition)
        after = getattr(adversary, "after_step", None)
        left, episode = timesteps, 0
        while left > 0:
            env_rng, mask_rng, adv_rng = (rngs.stream(seed, ACTIVATION_TAG, episode, part) for part in range(3))
            begin_episode(adversary, adv_rng)
            for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, adversary.act, victim.act):
                for j in agents:
                    h = hidden_activations(victim.actors[j], rec.vic_obs[j])
                    rows.append((label, episode, rec.t, j, h))
                if after is not None:
                    after(rec.events)
                left -= 1
                if left == 0:
                    break
            episode += 1
    return rows


def write_activations(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n")
        w = csv.writer(fh)
        width = len(rows[0][4]) if rows else 0
        w.writerow(["label", "episode", "step", "agent"] + [f"h{u}" for u in range(width)])
        for label, ep, t, j, h in rows:
            w.writerow([label, ep, t, j] + [repr(float(x)) for x in h])


def read_activations(path) -> list:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != HEADER:
            raise ValueError(f"{path}: expected header {HEADER!r}, got {first!r}")
        r = csv.reader(fh)
        next(r)
        return [(row[0], int(row[1]), int(row[2]), int(row[3]), np.array(row[4:], dtype=np.float64))
                for row in r]
