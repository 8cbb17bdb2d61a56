"""Frozen-policy evaluation over a deterministic seed grid."""

import numpy as np

from subplay import rng as rngs
from subplay.evalkit.metrics import MetricsRecord
from subplay.observe import bucket_lookup, subgame_partition
from subplay.rollout import play_episode


def episode_streams(seed: int, episode: int, tag: int = 0):
    """(env, mask, adversary, victim) generators for one evaluation episode."""
    return tuple(rngs.stream(seed, rngs.EVAL_GRID, tag, episode, part) for part in range(4))


def run_episodes(adversary, victim, env_cfg, limitation, num_episodes: int, seed: int,
                 partition=None, tag: int = 0, event_logs: list | None = None):
    """Play ``num_episodes`` frozen episodes; returns the list of summaries."""
    if num_episodes < 1:
        raise ValueError("need at least one evaluation episode")
    if partition is None:
        partition = getattr(adversary, "partition", None) or subgame_partition(
            env_cfg.num_victims, env_cfg.num_victims + 1)
    lookup = bucket_lookup(partition)
    out = []
    for e in range(num_episodes):
        env_rng, mask_rng, adv_rng, vic_rng = episode_streams(seed, e, tag)
        log = [] if event_logs is not None else None
        out.append(play_episode(env_cfg, limitation, lookup, env_rng, mask_rng, adversary, victim,
                                adversary_rng=adv_rng, victim_rng=vic_rng, sub=len(partition), event_log=log))
        if event_logs is not None:
            event_logs.append(log)
    return out


def evaluate(adversary, victim, env_cfg, limitation, num_episodes: int = 1000, seeds=(0,),
             partition=None, config_hash: str = "", label: str = "", tag: int = 0,
             event_logs: list | None = None) -> MetricsRecord:
    """CR / CF / PM of ``adversary`` against ``victim``, exploration off.

    Episodes from every seed in ``seeds`` are pooled.
    """
    summaries = []
    for s in seeds:
        summaries += run_episodes(adversary, victim, env_cfg, limitation, num_episodes, s,
                                  partition, tag, event_logs)
    counts = np.sum([s.subgame_counts.sum(axis=0) for s in summaries], axis=0)
    occ = (counts / counts.sum()).tolist()
    return MetricsRecord.from_episodes(
        [s.caught for s in summaries], [s.collisions for s in summaries],
        occupancy=occ, seeds=tuple(int(s) for s in seeds), config_hash=config_hash, label=label)
