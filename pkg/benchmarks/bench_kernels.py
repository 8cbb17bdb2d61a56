"""Time the numba kernels against their numpy twins, then a whole episode under each path.

    python3 benchmarks/bench_kernels.py [--repeat N] [--episodes N]

Kernel timings call both implementations directly in one process. The
episode timing re-runs this script in a child process with
``SUBPLAY_DISABLE_NUMBA`` set, since the path is chosen at import time.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from subplay.engine import kernels
from subplay.engine.config import EnvConfig
from subplay.engine.world import layout, reset


def kernel_args(cfg):
    s = reset(cfg, 0)
    lay = layout(cfg)
    force = np.random.default_rng(1).uniform(-3, 3, s.positions.shape)
    phys = (s.positions, s.velocities, force, lay.radius, lay.max_speed, lay.movable, lay.collide,
            cfg.damping, cfg.dt, cfg.contact_force, cfg.contact_margin)
    coll = (s.positions, lay.radius, lay.victim_idx, lay.adversary_idx)
    dim = 4 + 2 * lay.landmark_idx.size + 2 * (lay.adversary_idx.size - 1) + 4 * lay.victim_idx.size
    obs = (s.positions, s.velocities, lay.adversary_idx, lay.landmark_idx, lay.adversary_idx, lay.victim_idx, dim)
    return {"physics_step": phys, "collision_matrix": coll, "build_observations": obs}


def bench_kernels(repeat):
    cfg = EnvConfig(num_adversaries=2, num_victims=3)
    out = {}
    for name, args in kernel_args(cfg).items():
        nb, np_ = getattr(kernels, name + "_nb"), getattr(kernels, name + "_np")
        nb(*args)  # compile
        t_nb = min(timeit.repeat(lambda: nb(*args), number=repeat, repeat=3)) / repeat
        t_np = min(timeit.repeat(lambda: np_(*args), number=repeat, repeat=3)) / repeat
        out[name] = dict(numba_us=1e6 * t_nb, numpy_us=1e6 * t_np, speedup=t_np / t_nb)
    return out


def episode_seconds(episodes):
    """Per-episode wall time of evaluation rollouts in this process."""
    import time

    from subplay.engine.world import VICTIM, observation_dim
    from subplay.evalkit.evaluate import run_episodes
    from subplay.learner.mlp import init_xavier
    from subplay.observe import Limitation
    from subplay.opponents import HeuristicPolicy, VictimTeam

    cfg = EnvConfig(num_adversaries=2, num_victims=3)
    lim = Limitation("uncertainty", 0.5)
    rng = np.random.default_rng(0)
    vic = VictimTeam([init_xavier(observation_dim(cfg, VICTIM), 2, rng) for _ in range(3)])
    run_episodes(HeuristicPolicy(2), vic, cfg, lim, 2, 0)  # warm caches / compile
    t0 = time.perf_counter()
    run_episodes(HeuristicPolicy(2), vic, cfg, lim, episodes, 0)
    return (time.perf_counter() - t0) / episodes


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=2000)
    p.add_argument("--episodes", type=int, default=40)
    p.add_argument("--episode-only", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)

    if args.episode_only:
        print(json.dumps(dict(seconds=episode_seconds(args.episodes), numba=kernels.physics_step
                              is kernels.physics_step_nb)))
        return

    print(f"{'kernel':<20}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for name, r in bench_kernels(args.repeat).items():
        print(f"{name:<20}{r['numba_us']:>12.2f}{r['numpy_us']:>12.2f}{r['speedup']:>10.2f}")

    print(f"\n{'path':<10}{'ms / episode':>14}")
    for flag in ("0", "1"):
        env = dict(os.environ, SUBPLAY_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, os.path.abspath(__file__), "--episode-only",
                              "--episodes", str(args.episodes)], env=env, capture_output=True, text=True,
                             check=True)
        r = json.loads(res.stdout)
        print(f"{'numba' if r['numba'] else 'numpy':<10}{1e3 * r['seconds']:>14.2f}")


if __name__ == "__main__":
    main()
