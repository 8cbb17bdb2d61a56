"""The numpy fallback is selected by environment flag and agrees with the numba path."""

import json
import os
import subprocess
import sys

import numpy as np

SCRIPT = """
import json
import numpy as np
from subplay import _accel
from subplay.engine import kernels
from subplay.engine.config import EnvConfig
from subplay.evalkit.evaluate import evaluate
from subplay.engine.world import VICTIM, observation_dim, reset, step
from subplay.observe import Limitation
from subplay.opponents import HeuristicPolicy, VictimTeam
from subplay.learner.mlp import init_xavier

cfg = EnvConfig(num_adversaries=2, num_victims=3)
rng = np.random.default_rng(0)
s = reset(cfg, 1)
traj = []
for _ in range(cfg.episode_length):
    out = step(s, rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1, (3, 2)))
    s = out.next_state
    traj.append(s.positions.tolist())
vic = VictimTeam([init_xavier(observation_dim(cfg, VICTIM), 2, k) for k in range(3)])
rec = evaluate(HeuristicPolicy(2), vic, cfg, Limitation("uncertainty", 0.5), 20)
print(json.dumps(dict(numba=kernels.physics_step is kernels.physics_step_nb, use=_accel.USE_NUMBA,
                      traj=traj, CR=rec.CR, CF=rec.CF)))
"""


def run(flag):
    env = dict(os.environ, SUBPLAY_DISABLE_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def test_flag_selects_path_and_results_agree():
    fast, slow = run("0"), run("1")
    assert fast["numba"] and fast["use"]
    assert not slow["numba"] and not slow["use"]
    assert np.allclose(fast["traj"], slow["traj"], atol=1e-9, rtol=0)
    assert (fast["CR"], fast["CF"]) == (slow["CR"], slow["CF"])
