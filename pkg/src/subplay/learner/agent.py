"""DDPG / MADDPG learners built on the numpy MLP."""

from dataclasses import dataclass, field

import numpy as np

from subplay.learner.buffer import Batch
from subplay.learner.mlp import MlpParams, backward, forward, init_xavier
from subplay.learner.optim import AdamState, adam_step, ema_update

ALGORITHMS = ("ddpg", "maddpg")


@dataclass
class AgentLearner:
    actor: MlpParams
    critic: MlpParams
    actor_target: MlpParams
    critic_target: MlpParams
    actor_opt: AdamState
    critic_opt: AdamState
    algorithm: str = "ddpg"
    agent_index: int = 0
    team_size: int = 1
    obs_dim: int = 0
    act_dim: int = 2
    gamma: float = 0.95
    ema_decay: float = 0.95
    noise_std: float = 0.01
    updates: int = 0

    def copy(self) -> "AgentLearner":
        return AgentLearner(
            self.actor.copy(), self.critic.copy(), self.actor_target.copy(), self.critic_target.copy(),
            self.actor_opt.copy(), self.critic_opt.copy(), self.algorithm, self.agent_index,
            self.team_size, self.obs_dim, self.act_dim, self.gamma, self.ema_decay, self.noise_std,
            self.updates)

    def set_lr(self, lr: float) -> None:
        self.actor_opt.lr = lr
        self.critic_opt.lr = lr


def critic_input_dim(algorithm: str, obs_dim: int, act_dim: int, team_size: int) -> int:
    if algorithm == "maddpg":
        return team_size * (obs_dim + act_dim)
    return obs_dim + act_dim


def make_learner(obs_dim: int, act_dim: int, seed, algorithm: str = "ddpg", agent_index: int = 0,
                 team_size: int = 1, hidden: int = 128, lr: float = 0.001, gamma: float = 0.95,
                 ema_decay: float = 0.95, noise_std: float = 0.01) -> AgentLearner:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    actor = init_xavier(obs_dim, act_dim, rng, head="tanh", hidden=hidden)
    critic = init_xavier(critic_input_dim(algorithm, obs_dim, act_dim, team_size), 1, rng,
                         head="linear", hidden=hidden)
    return AgentLearner(
        actor, critic, actor.copy(), critic.copy(),
        AdamState.for_params(actor, lr=lr), AdamState.for_params(critic, lr=lr),
        algorithm, agent_index, team_size, obs_dim, act_dim, gamma, ema_decay, noise_std)


def act(learner_or_actor, observation, explore: bool = False, noise=None, noise_std: float | None = None):
    actor = learner_or_actor.actor if isinstance(learner_or_actor, AgentLearner) else learner_or_actor
    a = forward(actor, observation)
    if explore:
        std = noise_std if noise_std is not None else (
            learner_or_actor.noise_std if isinstance(learner_or_actor, AgentLearner) else 0.01)
        a = a + noise.normal(0.0, std, size=a.shape)
    return np.clip(a, -1.0, 1.0)


@dataclass
class LossReport:
    critic_loss: float = float("nan")
    actor_loss: float = float("nan")
    skipped: bool = False


@dataclass
class JointContext:
    """Team-side information a MADDPG critic needs.

    ``next_actions`` holds target-policy actions for every teammate at
    ``t + 1``, shape ``[B, n, act_dim]``; the learner overwrites its own slot
    with its own target actor.
    """

    next_actions: np.ndarray
    team_size: int = field(init=False)

    def __post_init__(self):
        self.next_actions = np.asarray(self.next_actions, dtype=np.float64)
        self.team_size = self.next_actions.shape[1]


def _critic_in(learner: AgentLearner, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """``obs`` is ``[B, n, d]`` and ``actions`` ``[B, n, a]``."""
    b = obs.shape[0]
    if learner.algorithm == "maddpg":
        return np.concatenate([obs.reshape(b, -1), actions.reshape(b, -1)], axis=1)
    i = learner.agent_index
    return np.concatenate([obs[:, i], actions[:, i]], axis=1)


def _action_slice(learner: AgentLearner) -> slice:
    if learner.algorithm == "maddpg":
        start = learner.team_size * learner.obs_dim + learner.agent_index * learner.act_dim
    else:
        start = learner.obs_dim
    return slice(start, start + learner.act_dim)


def td_targets(learner: AgentLearner, batch: Batch, context: JointContext | None = None) -> np.ndarray:
    i = learner.agent_index
    own_next = forward(learner.actor_target, batch.next_obs[:, i])
    if learner.algorithm == "maddpg":
        if context is None:
            raise ValueError("MADDPG needs a joint context with teammates' target actions")
        next_actions = context.next_actions.copy()
    else:
        next_actions = np.zeros(batch.action.shape)
    next_actions[:, i] = own_next
    q_next = forward(learner.critic_target, _critic_in(learner, batch.next_obs, next_actions))[:, 0]
    return batch.reward[:, i] + learner.gamma * q_next


def critic_loss_and_grad(learner: AgentLearner, batch: Batch, targets: np.ndarray):
    x = _critic_in(learner, batch.obs, batch.action)
    q, cache = forward(learner.critic, x, return_cache=True)
    err = q[:, 0] - targets
    loss = float(np.mean(err * err))
    grads, _ = backward(learner.critic, cache, (2.0 / len(err)) * err[:, None])
    return loss, grads


def actor_loss_and_grad(learner: AgentLearner, batch: Batch):
    """Loss is ``-mean Q(o, actor(o))`` with teammates' actions taken from the batch."""
    i = learner.agent_index
    a, a_cache = forward(learner.actor, batch.obs[:, i], return_cache=True)
    actions = batch.action.copy()
    actions[:, i] = a
    q, q_cache = forward(learner.critic, _critic_in(learner, batch.obs, actions), return_cache=True)
    b = q.shape[0]
    _, dx = backward(learner.critic, q_cache, np.full((b, 1), -1.0 / b))
    grads, _ = backward(learner.actor, a_cache, dx[:, _action_slice(learner)])
    return float(-q.mean()), grads


def _check_joint(learner: AgentLearner, batch: Batch, context: JointContext | None):
    n = batch.obs.shape[1]
    if batch.obs.shape[2] != learner.obs_dim or batch.action.shape[2] != learner.act_dim:
        raise ValueError("batch dimensions do not match the learner")
    if learner.algorithm == "maddpg":
        if n != learner.team_size:
            raise ValueError(f"batch carries {n} agents, learner expects a team of {learner.team_size}")
        if context is not None and (context.team_size != n or len(context.next_actions) != len(batch)):
            raise ValueError("joint context is inconsistent with the batch")


def _update(learner: AgentLearner, batch: Batch, context: JointContext | None) -> LossReport:
    if len(batch) == 0:
        return LossReport(skipped=True)
    _check_joint(learner, batch, context)
    y = td_targets(learner, batch, context)
    c_loss, c_grads = critic_loss_and_grad(learner, batch, y)
    adam_step(learner.critic, c_grads, learner.critic_opt)
    a_loss, a_grads = actor_loss_and_grad(learner, batch)
    adam_step(learner.actor, a_grads, learner.actor_opt)
    ema_update(learner.actor_target, learner.actor, learner.ema_decay)
    ema_update(learner.critic_target, learner.critic, learner.ema_decay)
    learner.updates += 1
    return LossReport(c_loss, a_loss)


def ddpg_update(learner: AgentLearner, batch: Batch) -> LossReport:
    if learner.algorithm != "ddpg":
        raise ValueError("ddpg_update called on a MADDPG learner")
    return _update(learner, batch, None)


def maddpg_update(learner: AgentLearner, batch: Batch, joint_context: JointContext) -> LossReport:
    if learner.algorithm != "maddpg":
        raise ValueError("maddpg_update called on a DDPG learner")
    return _update(learner, batch, joint_context)


def update(learner: AgentLearner, batch: Batch, joint_context: JointContext | None = None) -> LossReport:
    if learner.algorithm == "maddpg":
        return maddpg_update(learner, batch, joint_context)
    return ddpg_update(learner, batch)
