"""Pieces shared by every training loop (SUB-PLAY, Victim-play, Self-play)."""

from dataclasses import dataclass

import numpy as np

from subplay.learner.agent import JointContext, LossReport, update
from subplay.learner.buffer import Transition
from subplay.learner.mlp import forward


@dataclass(frozen=True)
class HyperParams:
    algorithm: str = "ddpg"
    hidden: int = 128
    lr: float = 0.001
    gamma: float = 0.95
    ema_decay: float = 0.95
    noise_std: float = 0.01
    buffer_capacity: int = 512
    batch_size: int = 512


def team_next_actions(target_actor, batch) -> np.ndarray:
    """Target-policy actions of every teammate at ``t + 1``.

    ``target_actor(j, k)`` returns agent j's target actor for subgame k; rows
    are grouped by the subgame each teammate was in at ``t + 1``.
    """
    b, n = batch.next_subgames.shape
    out = np.zeros((b, n, batch.action.shape[2]))
    for j in range(n):
        ks = batch.next_subgames[:, j]
        for k in np.unique(ks):
            rows = ks == k
            out[rows, j] = forward(target_actor(j, int(k)), batch.next_obs[rows, j])
    return out


def learner_step(learner, buffer, rng, target_actor) -> LossReport:
    batch = buffer.sample(rng)
    ctx = JointContext(team_next_actions(target_actor, batch)) if learner.algorithm == "maddpg" else None
    return update(learner, batch, ctx)


def explore_actions(actors, obs, noise, noise_std: float) -> np.ndarray:
    """Actor outputs plus Gaussian noise, clipped to [-1, 1], drawn in agent order."""
    out = np.empty((len(actors), actors[0].out_dim))
    for i, actor in enumerate(actors):
        out[i] = forward(actor, obs[i]) + noise.normal(0.0, noise_std, size=actor.out_dim)
    return np.clip(out, -1.0, 1.0)


def adversary_transition(rec, subgame: int) -> Transition:
    return Transition(rec.adv_obs, rec.adv_action, rec.adv_reward, rec.next_adv_obs, rec.adv_bits,
                      subgame, rec.next_subgames, False)


def victim_transition(rec) -> Transition:
    n = rec.vic_obs.shape[0]
    return Transition(rec.vic_obs, rec.vic_action, rec.vic_reward, rec.next_vic_obs,
                      np.ones_like(rec.vic_obs), 0, np.zeros(n, dtype=np.int64), False)


def mean_losses(reports) -> tuple:
    done = [r for r in reports if not r.skipped]
    if not done:
        return None, None
    return (float(np.mean([r.critic_loss for r in done])), float(np.mean([r.actor_loss for r in done])))
