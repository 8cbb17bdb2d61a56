"""SUB-PLAY training: interact, mask, classify, route, update, keep the best."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from subplay import rng as rngs
from subplay.attack.combine import SubpolicySet
from subplay.attack.dissemination import BufferSet, DisseminationTable, build_dissemination_table, route_transition
from subplay.attack.meritocracy import meritocracy_round
from subplay.attack.occupancy import (
    METHODS, OccupancyVector, occupancy_dynamic_observation, occupancy_static_estimation,
    occupancy_static_observation,
)
from subplay.engine.world import ADVERSARY, observation_dim
from subplay.learner.agent import make_learner
from subplay.observe import bucket_lookup, subgame_partition
from subplay.rollout import begin_episode as _begin, episode_steps
from subplay.training import HyperParams, adversary_transition, explore_actions, learner_step, mean_losses

log = logging.getLogger(__name__)

PREOBSERVE = "pre-observe"


@dataclass(frozen=True)
class AttackConfig:
    sub: int | None = None  # None: one subgame per visible-victim count
    occupancy_method: str = "static_observation"
    dr_lambda: float = 0.5
    ewa_beta: float = 0.9
    dissemination: bool = True
    meritocracy: bool = True
    merit_cadence: int = 100
    merit_episodes: int = 50
    preobserve_episodes: int = 100
    mu: float | None = None
    hyper: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if self.occupancy_method not in METHODS:
            raise ValueError(f"unknown occupancy method {self.occupancy_method!r}")
        if self.merit_cadence < 1 or self.merit_episodes < 1:
            raise ValueError("meritocracy cadence and episode count must be >= 1")


@dataclass
class AttackResult:
    subpolicies: SubpolicySet
    log: list
    learners: list
    buffers: BufferSet
    tables: list
    occupancy: list
    train_seconds: float


def initial_occupancy(cfg: AttackConfig, env_cfg, limitation, partition, learners, victim, seed):
    """Per-agent occupancy vectors before training starts."""
    m, sub = env_cfg.num_adversaries, len(partition)
    if cfg.occupancy_method == "static_estimation":
        mu = cfg.mu
        if mu is None:
            if limitation.kind != "uncertainty":
                raise ValueError("static estimation needs mu or an uncertainty limitation")
            mu = limitation.success_probability * (1.0 - limitation.proactive_mask_rate)
        occ = occupancy_static_estimation(env_cfg.num_victims, mu, partition)
        return [OccupancyVector(occ.rates.copy(), occ.method, mu=mu) for _ in range(m)]
    if cfg.occupancy_method == "dynamic_observation":
        return [OccupancyVector(np.full(sub, 1.0 / sub), "dynamic_observation", beta=cfg.ewa_beta)
                for _ in range(m)]
    if cfg.preobserve_episodes < 1:
        raise ValueError("static observation needs at least one pre-observation episode")
    counts = preobserve(env_cfg, limitation, partition, learners, victim, cfg.preobserve_episodes, seed,
                        cfg.hyper.noise_std)
    return [occupancy_static_observation(counts, agent=i) for i in range(m)]


def preobserve(env_cfg, limitation, partition, learners, victim, episodes, seed, noise_std):
    """Count subgame visits per agent while the untrained adversary plays."""
    lookup = bucket_lookup(partition)
    counts = np.zeros((env_cfg.num_adversaries, len(partition)), dtype=np.int64)
    env_rng = rngs.stream(seed, PREOBSERVE, 0)
    mask_rng = rngs.stream(seed, PREOBSERVE, 1)
    noise = rngs.stream(seed, PREOBSERVE, 2)
    pick = rngs.stream(seed, PREOBSERVE, 3)
    agents = range(env_cfg.num_adversaries)

    def act(obs, subgames):
        return explore_actions([learners[i][subgames[i]].actor for i in agents], obs, noise, noise_std)

    for _ in range(episodes):
        _begin(victim, pick)
        for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, act, victim.act):
            counts[np.arange(env_cfg.num_adversaries), rec.subgames] += 1
    return counts


def _scores_for_log(scores):
    return [[None if not np.isfinite(s) else float(s) for s in row] for row in scores]


def run_attack(env_cfg, limitation, victim, episodes: int, seed: int = 0,
               cfg: AttackConfig = AttackConfig(), on_episode=None) -> AttackResult:
    """Train SUB-PLAY subpolicies against a frozen ``victim`` for ``episodes`` episodes."""
    if episodes < 1:
        raise ValueError("attack budget must be at least one episode")
    hp = cfg.hyper
    m, n = env_cfg.num_adversaries, env_cfg.num_victims
    sub = n + 1 if cfg.sub is None else cfg.sub
    partition = subgame_partition(n, sub)
    lookup = bucket_lookup(partition)
    d = observation_dim(env_cfg, ADVERSARY)

    learners = [[make_learner(d, 2, rngs.stream(seed, rngs.WEIGHT_INIT, i, k), hp.algorithm, i, m,
                              hp.hidden, hp.lr, hp.gamma, hp.ema_decay, hp.noise_std)
                 for k in range(sub)] for i in range(m)]
    buffers = BufferSet(m, sub, hp.buffer_capacity, hp.batch_size, m, d)
    sample_rngs = [[rngs.stream(seed, rngs.REPLAY_SAMPLE, i, k) for k in range(sub)] for i in range(m)]
    coin = [rngs.stream(seed, rngs.DISSEMINATION, i) for i in range(m)]
    env_rng = rngs.stream(seed, rngs.ENV_INIT)
    mask_rng = rngs.stream(seed, rngs.MASK_NOISE)
    noise = rngs.stream(seed, rngs.EXPLORATION)
    pick = rngs.stream(seed, rngs.ENSEMBLE)

    occupancy = initial_occupancy(cfg, env_cfg, limitation, partition, learners, victim, seed)
    tables = [build_dissemination_table(o, cfg.dr_lambda, sub) if cfg.dissemination
              else DisseminationTable.identity(sub) for o in occupancy]
    retained = SubpolicySet.from_actors([[lr.actor for lr in row] for row in learners], partition)
    dirty = np.zeros((m, sub), dtype=bool)

    def target_actor(j, k):
        return learners[j][k].actor_target

    def act(obs, subgames):
        return explore_actions([learners[i][subgames[i]].actor for i in range(m)], obs, noise, hp.noise_std)

    history = []
    merit_round = 0
    t0 = time.perf_counter()
    for ep in range(episodes):
        _begin(victim, pick)
        ep_counts = np.zeros((m, sub), dtype=np.int64)
        ret = 0.0
        collisions = 0
        for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, act, victim.act):
            ret += float(rec.adv_reward.sum())
            collisions += len(rec.events)
            for i in range(m):
                k = int(rec.subgames[i])
                ep_counts[i, k] += 1
                route_transition(adversary_transition(rec, k), tables[i], buffers, i, coin[i])

        if cfg.occupancy_method == "dynamic_observation":
            occupancy = [occupancy_dynamic_observation(occupancy[i], ep_counts[i], cfg.ewa_beta,
                                                       env_cfg.episode_length) for i in range(m)]
            if cfg.dissemination:
                tables = [build_dissemination_table(o, cfg.dr_lambda, sub) for o in occupancy]

        reports = []
        for i in range(m):
            for k in range(sub):
                if buffers[i][k].ready():
                    reports.append(learner_step(learners[i][k], buffers[i][k], sample_rngs[i][k], target_actor))
                    dirty[i, k] = True

        if cfg.meritocracy and ((ep + 1) % cfg.merit_cadence == 0 or ep == episodes - 1) and dirty.any():
            merit_round += 1
            retained = meritocracy_round(retained, learners, dirty, victim, env_cfg, limitation,
                                         cfg.merit_episodes, seed, merit_round)
            dirty[:] = False

        c_loss, a_loss = mean_losses(reports)
        entry = dict(
            episode=ep, adversary_return=ret, collisions=collisions,
            episode_or=(ep_counts / env_cfg.episode_length).tolist(),
            occupancy=[o.rates.tolist() for o in occupancy],
            pm=_scores_for_log(retained.scores), buffer_sizes=buffers.sizes().tolist(),
            updates=len(reports), critic_loss=c_loss, actor_loss=a_loss,
        )
        history.append(entry)
        if on_episode is not None:
            on_episode(entry)
    elapsed = time.perf_counter() - t0

    if cfg.meritocracy:
        final = retained
    else:
        final = SubpolicySet.from_actors([[lr.actor for lr in row] for row in learners], partition)
    return AttackResult(final, history, learners, buffers, tables, occupancy, elapsed)
