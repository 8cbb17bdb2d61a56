"""Episode loop shared by training, evaluation and activation export.

Controllers are duck-typed: ``begin_episode(rng)``, ``act(obs, subgames)``
for adversaries or ``act(obs)`` for victims, and optionally
``after_step(events)``.
"""

from dataclasses import dataclass

import numpy as np

from subplay.engine.world import ADVERSARY, observations, reset, step, victim_observations
from subplay.observe import team_view


@dataclass
class StepRecord:
    t: int
    adv_obs: np.ndarray
    adv_bits: np.ndarray
    subgames: np.ndarray
    adv_action: np.ndarray
    vic_obs: np.ndarray
    vic_action: np.ndarray
    adv_reward: np.ndarray
    vic_reward: np.ndarray
    events: np.ndarray
    next_adv_obs: np.ndarray
    next_bits: np.ndarray
    next_subgames: np.ndarray
    next_vic_obs: np.ndarray
    state: object = None
    next_state: object = None


def episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, adversary_act, victim_act,
                  keep_states: bool = False):
    """Yield one :class:`StepRecord` per step of a fresh episode.

    ``lookup`` maps a visible-victim count to its subgame index.
    """
    state = reset(env_cfg, env_rng)
    bits, counts = team_view(state, limitation, mask_rng)
    adv_obs = observations(state, ADVERSARY) * bits
    subgames = lookup[counts]
    vic_obs = victim_observations(state)
    for t in range(env_cfg.episode_length):
        a = adversary_act(adv_obs, subgames)
        b = victim_act(vic_obs)
        out = step(state, a, b)
        nxt = out.next_state
        nbits, ncounts = team_view(nxt, limitation, mask_rng)
        n_adv_obs = observations(nxt, ADVERSARY) * nbits
        n_sub = lookup[ncounts]
        n_vic_obs = victim_observations(nxt)
        yield StepRecord(t, adv_obs, bits, subgames, np.asarray(a), vic_obs, np.asarray(b),
                         out.adversary_rewards, out.victim_rewards, out.collision_events,
                         n_adv_obs, nbits, n_sub, n_vic_obs,
                         state if keep_states else None, nxt if keep_states else None)
        state, bits, adv_obs, subgames, vic_obs = nxt, nbits, n_adv_obs, n_sub, n_vic_obs


@dataclass
class EpisodeSummary:
    collisions_per_victim: np.ndarray
    subgame_counts: np.ndarray
    adversary_return: float

    @property
    def collisions(self) -> int:
        return int(self.collisions_per_victim.sum())

    @property
    def caught(self) -> bool:
        return self.collisions > 0


def begin_episode(ctl, rng) -> None:
    begin = getattr(ctl, "begin_episode", None)
    if begin is not None:
        begin(rng)


def play_episode(env_cfg, limitation, lookup, env_rng, mask_rng, adversary, victim,
                 adversary_rng=None, victim_rng=None, sub: int | None = None,
                 event_log: list | None = None) -> EpisodeSummary:
    """Run frozen controllers for one episode (no exploration, no learning)."""
    n_sub = sub if sub is not None else int(lookup.max()) + 1
    begin_episode(adversary, adversary_rng)
    begin_episode(victim, victim_rng)
    per_victim = np.zeros(env_cfg.num_victims, dtype=np.int64)
    counts = np.zeros((env_cfg.num_adversaries, n_sub), dtype=np.int64)
    ret = 0.0
    after = getattr(adversary, "after_step", None)
    for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, adversary.act, victim.act):
        np.add.at(counts, (np.arange(env_cfg.num_adversaries), rec.subgames), 1)
        np.add.at(per_victim, rec.events[:, 0], 1)
        ret += float(rec.adv_reward.sum())
        if event_log is not None:
            event_log.append(rec.events)
        if after is not None:
            after(rec.events)
    return EpisodeSummary(per_victim, counts, ret)
