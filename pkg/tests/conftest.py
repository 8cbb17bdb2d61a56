import numpy as np
import pytest

from subplay.engine.config import EnvConfig
from subplay.engine.world import VICTIM, observation_dim, observation_layout
from subplay.learner.agent import make_learner
from subplay.learner.mlp import init_xavier
from subplay.opponents import VictimTeam
from subplay.training import HyperParams


def random_victim(env_cfg, seed=0, hidden=128):
    d = observation_dim(env_cfg, VICTIM)
    rng = np.random.default_rng(seed)
    return VictimTeam([make_learner(d, 2, rng, hidden=hidden).actor for _ in range(env_cfg.num_victims)])


SMALL_HP = HyperParams(hidden=16, buffer_capacity=64, batch_size=32)


@pytest.fixture
def pp13():
    return EnvConfig(num_adversaries=1, num_victims=3)


@pytest.fixture
def pp23():
    return EnvConfig(num_adversaries=2, num_victims=3)


def chaser_actor(env_cfg, gain=5.0, target=0):
    """Hand-set MLP weights computing ``tanh(gain * relative position of prey target)``."""
    d = observation_dim(env_cfg, VICTIM)
    a = init_xavier(d, 2, 0)
    for name in ("W1", "b1", "W2", "b2", "W_out", "b_out"):
        getattr(a, name)[:] = 0.0
    col = observation_layout(env_cfg, VICTIM)["opponent_pos"].start + 2 * target
    for axis in range(2):
        a.W1[2 * axis, col + axis] = 1.0
        a.W1[2 * axis + 1, col + axis] = -1.0
    for u in range(4):
        a.W2[u, u] = 1.0
    a.W_out[0, 0], a.W_out[0, 1] = gain, -gain
    a.W_out[1, 2], a.W_out[1, 3] = gain, -gain
    return a


def chaser_victim(env_cfg, gain=5.0):
    return VictimTeam([chaser_actor(env_cfg, gain, 0) for _ in range(env_cfg.num_victims)])


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
