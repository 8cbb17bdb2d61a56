from subplay.learner.agent import (
    AgentLearner, JointContext, LossReport, act, critic_input_dim, ddpg_update, maddpg_update,
    make_learner, update,
)
from subplay.learner.buffer import Batch, ReplayBuffer, Transition
from subplay.learner.mlp import MlpParams, backward, forward, hidden_activations, init_xavier
from subplay.learner.optim import AdamState, adam_step, ema_update
