"""Comparison attackers and victim production.

* :class:`HeuristicPolicy` -- fixed speed and heading, new random heading after a collision.
* :func:`train_selfplay` -- both teams learn from scratch; produces victims.
* :func:`train_victimplay` -- one policy per adversary agent trained against a frozen victim.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from subplay import rng as rngs
from subplay.attack.combine import SubpolicySet
from subplay.engine.world import ADVERSARY, VICTIM, observation_dim
from subplay.learner import checkpoint
from subplay.learner.agent import make_learner
from subplay.learner.buffer import ReplayBuffer
from subplay.learner.mlp import forward
from subplay.observe import bucket_lookup, subgame_partition
from subplay.rollout import begin_episode, episode_steps
from subplay.training import (
    HyperParams, adversary_transition, explore_actions, learner_step, mean_losses, victim_transition,
)

VICTIM_HYPER = HyperParams(buffer_capacity=200_000, batch_size=1024)
ADVERSARY_HYPER = HyperParams(buffer_capacity=512, batch_size=512)


def random_direction(rng) -> np.ndarray:
    theta = rng.uniform(-np.pi, np.pi)
    return np.array([np.cos(theta), np.sin(theta)])


@dataclass
class HeuristicPolicy:
    """Constant-heading movers.

    An agent keeps its heading until it is involved in a collision, then draws
    a fresh heading uniformly on the circle. Headings are also mirrored at the
    arena wall so the agent stays in play.
    """

    num_agents: int
    speed_scale: float = 0.5
    arena: float = 1.0
    directions: np.ndarray = field(default=None)
    rng: np.random.Generator = field(default=None, repr=False)
    _collided: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.directions is None:
            self.directions = np.tile([1.0, 0.0], (self.num_agents, 1))
        self._collided = np.zeros(self.num_agents, dtype=bool)

    def begin_episode(self, rng) -> None:
        self.rng = rng if rng is not None else np.random.default_rng()
        self.directions = np.stack([random_direction(self.rng) for _ in range(self.num_agents)])
        self._collided[:] = False

    def act(self, obs, subgames=None) -> np.ndarray:
        out = np.empty((self.num_agents, 2))
        for i in range(self.num_agents):
            pos = None if obs is None else np.asarray(obs[i])[2:4]
            out[i] = heuristic_act(self, i, self._collided[i], self.rng, pos)
        self._collided[:] = False
        return out

    def after_step(self, events) -> None:
        events = np.asarray(events).reshape(-1, 2)
        self._collided[np.unique(events[:, 1]).astype(np.int64)] = True

    def descriptor(self) -> dict:
        return dict(kind="heuristic", num_agents=self.num_agents, speed_scale=self.speed_scale,
                    arena=self.arena)


def heuristic_act(policy: HeuristicPolicy, agent_id: int, recent_events, rng, position=None) -> np.ndarray:
    """Action of one heuristic agent; ``recent_events`` is truthy after a collision."""
    if np.size(recent_events) and np.any(recent_events):
        policy.directions[agent_id] = random_direction(rng)
    if position is not None:
        d = policy.directions[agent_id]
        for axis in range(2):
            if abs(position[axis]) >= policy.arena and np.sign(d[axis]) == np.sign(position[axis]):
                d[axis] = -d[axis]
    return policy.speed_scale * policy.directions[agent_id]


class VictimTeam:
    """Frozen decentralised victim: one actor per predator, no exploration."""

    def __init__(self, actors, algorithm: str = "ddpg"):
        self.actors = [a.copy() for a in actors]
        self.algorithm = algorithm

    @classmethod
    def from_learners(cls, learners) -> "VictimTeam":
        return cls([lr.actor for lr in learners], learners[0].algorithm)

    def act(self, obs) -> np.ndarray:
        return np.stack([forward(a, o) for a, o in zip(self.actors, obs)])

    def equals(self, other: "VictimTeam") -> bool:
        return len(self.actors) == len(other.actors) and all(
            a.equals(b) for a, b in zip(self.actors, other.actors))


class VictimPool:
    """Policy ensemble: a member is drawn uniformly at the start of each episode."""

    def __init__(self, members):
        if not members:
            raise ValueError("empty victim pool")
        self.members = list(members)
        self.current = self.members[0]

    def begin_episode(self, rng) -> None:
        if rng is not None:
            self.current = self.members[int(rng.integers(len(self.members)))]
        begin_episode(self.current, rng)

    def act(self, obs) -> np.ndarray:
        return self.current.act(obs)


@dataclass
class SelfPlayResult:
    adversary: SubpolicySet
    victim: VictimTeam
    victim_learners: list
    adversary_learners: list
    log: list
    train_seconds: float


def train_selfplay(env_cfg, limitation, episodes: int, seed: int = 0,
                   victim_hp: HyperParams = VICTIM_HYPER, adversary_hp: HyperParams = VICTIM_HYPER,
                   checkpoint_every: int = 0, on_checkpoint=None, on_episode=None) -> SelfPlayResult:
    """Both teams start from random weights and learn against each other.

    Updates alternate: victims on even episodes, adversaries on odd ones.
    ``on_checkpoint(episode, victim_learners)`` fires every ``checkpoint_every``
    episodes.
    """
    m, n = env_cfg.num_adversaries, env_cfg.num_victims
    dv, da = observation_dim(env_cfg, VICTIM), observation_dim(env_cfg, ADVERSARY)
    vic = [make_learner(dv, 2, rngs.stream(seed, "victim/" + rngs.WEIGHT_INIT, j), victim_hp.algorithm, j, n,
                        victim_hp.hidden, victim_hp.lr, victim_hp.gamma, victim_hp.ema_decay, victim_hp.noise_std)
           for j in range(n)]
    adv = [make_learner(da, 2, rngs.stream(seed, rngs.WEIGHT_INIT, i, 0), adversary_hp.algorithm, i, m,
                        adversary_hp.hidden, adversary_hp.lr, adversary_hp.gamma, adversary_hp.ema_decay,
                        adversary_hp.noise_std)
           for i in range(m)]
    vbuf = ReplayBuffer(victim_hp.buffer_capacity, victim_hp.batch_size, n, dv)
    abuf = ReplayBuffer(adversary_hp.buffer_capacity, adversary_hp.batch_size, m, da)
    v_sample = [rngs.stream(seed, "victim/" + rngs.REPLAY_SAMPLE, j) for j in range(n)]
    a_sample = [rngs.stream(seed, rngs.REPLAY_SAMPLE, i, 0) for i in range(m)]
    env_rng = rngs.stream(seed, rngs.ENV_INIT)
    mask_rng = rngs.stream(seed, rngs.MASK_NOISE)
    a_noise = rngs.stream(seed, rngs.EXPLORATION)
    v_noise = rngs.stream(seed, "victim/" + rngs.EXPLORATION)
    lookup = bucket_lookup(subgame_partition(n, 1))

    def adv_act(obs, subgames):
        return explore_actions([lr.actor for lr in adv], obs, a_noise, adversary_hp.noise_std)

    def vic_act(obs):
        return explore_actions([lr.actor for lr in vic], obs, v_noise, victim_hp.noise_std)

    history = []
    t0 = time.perf_counter()
    for ep in range(episodes):
        ret_a = ret_v = 0.0
        collisions = 0
        for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, adv_act, vic_act):
            abuf.add(adversary_transition(rec, 0))
            vbuf.add(victim_transition(rec))
            ret_a += float(rec.adv_reward.sum())
            ret_v += float(rec.vic_reward.sum())
            collisions += len(rec.events)
        reports = []
        if ep % 2 == 0 and vbuf.ready():
            for j in range(n):
                reports.append(learner_step(vic[j], vbuf, v_sample[j], lambda q, k: vic[q].actor_target))
        elif ep % 2 == 1 and abuf.ready():
            for i in range(m):
                reports.append(learner_step(adv[i], abuf, a_sample[i], lambda q, k: adv[q].actor_target))
        c_loss, a_loss = mean_losses(reports)
        entry = dict(episode=ep, adversary_return=ret_a, victim_return=ret_v, collisions=collisions,
                     team="victim" if ep % 2 == 0 else "adversary", updates=len(reports),
                     critic_loss=c_loss, actor_loss=a_loss)
        history.append(entry)
        if on_episode is not None:
            on_episode(entry)
        if checkpoint_every and on_checkpoint is not None and (ep + 1) % checkpoint_every == 0:
            on_checkpoint(ep + 1, vic)
    elapsed = time.perf_counter() - t0
    adversary = SubpolicySet.from_actors([[lr.actor] for lr in adv], subgame_partition(n, 1))
    return SelfPlayResult(adversary, VictimTeam.from_learners(vic), vic, adv, history, elapsed)


@dataclass
class VictimPlayResult:
    subpolicies: SubpolicySet
    learners: list
    log: list
    train_seconds: float


def train_victimplay(env_cfg, limitation, victim, episodes: int, seed: int = 0,
                     hp: HyperParams = ADVERSARY_HYPER, on_episode=None) -> VictimPlayResult:
    """Single-policy adversary against a frozen victim.

    Stream names and update order match :func:`subplay.attack.run_attack`, so
    with one subgame and meritocracy off both produce identical weights.
    """
    m, n = env_cfg.num_adversaries, env_cfg.num_victims
    d = observation_dim(env_cfg, ADVERSARY)
    learners = [make_learner(d, 2, rngs.stream(seed, rngs.WEIGHT_INIT, i, 0), hp.algorithm, i, m,
                             hp.hidden, hp.lr, hp.gamma, hp.ema_decay, hp.noise_std) for i in range(m)]
    buffers = [ReplayBuffer(hp.buffer_capacity, hp.batch_size, m, d) for _ in range(m)]
    sample_rngs = [rngs.stream(seed, rngs.REPLAY_SAMPLE, i, 0) for i in range(m)]
    env_rng = rngs.stream(seed, rngs.ENV_INIT)
    mask_rng = rngs.stream(seed, rngs.MASK_NOISE)
    noise = rngs.stream(seed, rngs.EXPLORATION)
    pick = rngs.stream(seed, rngs.ENSEMBLE)
    partition = subgame_partition(n, 1)
    lookup = bucket_lookup(partition)

    def act(obs, subgames):
        return explore_actions([lr.actor for lr in learners], obs, noise, hp.noise_std)

    history = []
    t0 = time.perf_counter()
    for ep in range(episodes):
        begin_episode(victim, pick)
        ret = 0.0
        collisions = 0
        for rec in episode_steps(env_cfg, limitation, lookup, env_rng, mask_rng, act, victim.act):
            ret += float(rec.adv_reward.sum())
            collisions += len(rec.events)
            t = adversary_transition(rec, 0)
            for i in range(m):
                buffers[i].add(t)
        reports = [learner_step(learners[i], buffers[i], sample_rngs[i], lambda q, k: learners[q].actor_target)
                   for i in range(m) if buffers[i].ready()]
        c_loss, a_loss = mean_losses(reports)
        entry = dict(episode=ep, adversary_return=ret, collisions=collisions, updates=len(reports),
                     critic_loss=c_loss, actor_loss=a_loss)
        history.append(entry)
        if on_episode is not None:
            on_episode(entry)
    elapsed = time.perf_counter() - t0
    sets = SubpolicySet.from_actors([[lr.actor] for lr in learners], partition)
    return VictimPlayResult(sets, learners, history, elapsed)


class VictimTrainer:
    """Continues training victim ``learners`` in place against a frozen ``adversary``.

    The adversary plays without exploration; victims explore and update once
    per episode from a shared buffer that persists across :meth:`run` calls.
    """

    def __init__(self, learners, adversary, env_cfg, limitation, seed: int = 0,
                 hp: HyperParams = VICTIM_HYPER, tag: str = "victim-tune"):
        n = env_cfg.num_victims
        self.learners, self.adversary = learners, adversary
        self.env_cfg, self.limitation, self.hp = env_cfg, limitation, hp
        partition = getattr(adversary, "partition", None) or subgame_partition(n, n + 1)
        self.lookup = bucket_lookup(partition)
        self.buffer = ReplayBuffer(hp.buffer_capacity, hp.batch_size, n, observation_dim(env_cfg, VICTIM))
        self.env_rng = rngs.stream(seed, tag, rngs.ENV_INIT)
        self.mask_rng = rngs.stream(seed, tag, rngs.MASK_NOISE)
        self.noise = rngs.stream(seed, tag, rngs.EXPLORATION)
        self.adv_rng = rngs.stream(seed, tag, rngs.HEURISTIC)
        self.sample = [rngs.stream(seed, tag, rngs.REPLAY_SAMPLE, j) for j in range(n)]
        self.episodes_done = 0

    def _act(self, obs):
        return explore_actions([lr.actor for lr in self.learners], obs, self.noise, self.hp.noise_std)

    def run(self, episodes: int, on_episode=None) -> list:
        history = []
        learners, buf = self.learners, self.buffer
        for _ in range(episodes):
            begin_episode(self.adversary, self.adv_rng)
            after = getattr(self.adversary, "after_step", None)
            collisions = 0
            for rec in episode_steps(self.env_cfg, self.limitation, self.lookup, self.env_rng, self.mask_rng,
                                     self.adversary.act, self._act):
                buf.add(victim_transition(rec))
                collisions += len(rec.events)
                if after is not None:
                    after(rec.events)
            reports = [learner_step(learners[j], buf, self.sample[j], lambda q, k: learners[q].actor_target)
                       for j in range(len(learners))] if buf.ready() else []
            c_loss, a_loss = mean_losses(reports)
            entry = dict(episode=self.episodes_done, collisions=collisions, updates=len(reports),
                         critic_loss=c_loss, actor_loss=a_loss)
            self.episodes_done += 1
            history.append(entry)
            if on_episode is not None:
                on_episode(entry)
        return history


def train_victim_against(learners, adversary, env_cfg, limitation, episodes: int, seed: int = 0,
                         hp: HyperParams = VICTIM_HYPER, tag: str = "victim-tune", on_episode=None) -> list:
    return VictimTrainer(learners, adversary, env_cfg, limitation, seed, hp, tag).run(episodes, on_episode)


def save_victim(path, learners, meta: dict | None = None) -> None:
    """Persist a victim team (full learners, so it can be fine-tuned later)."""
    blocks = {}
    for j, lr in enumerate(learners):
        blocks.update(checkpoint.learner_blocks(f"victim{j}", lr))
    header = dict(kind="victim", num_agents=len(learners),
                  learners=[checkpoint.learner_meta(lr) for lr in learners])
    header.update(meta or {})
    checkpoint.save(path, header, blocks)


def load_victim(path):
    """Returns ``(learners, header)``."""
    header, blocks = checkpoint.load(path)
    if header.get("kind") != "victim":
        raise checkpoint.CheckpointError(f"{path} does not hold a victim")
    learners = [checkpoint.learner_from_blocks(f"victim{j}", blocks, meta)
                for j, meta in enumerate(header["learners"])]
    return learners, header
