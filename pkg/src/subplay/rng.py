"""Named random substreams derived from one master seed.

``stream(seed, "env-init", 3)`` builds a ``numpy.random.Generator`` from
``SeedSequence(seed, spawn_key=(crc32("env-init"), 3))``. Each name gets an
independent stream, so turning a feature that consumes randomness on or off
never shifts the draws of unrelated features.
"""

import zlib

import numpy as np

ENV_INIT = "env-init"
WEIGHT_INIT = "weight-init"
EXPLORATION = "exploration-noise"
DISSEMINATION = "dissemination-coin"
EVAL_GRID = "eval-grid"
MASK_NOISE = "mask-noise"
REPLAY_SAMPLE = "replay-sample"
HEURISTIC = "heuristic"
ENSEMBLE = "ensemble-pick"


def name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def seed_sequence(seed: int, name: str, *path) -> np.random.SeedSequence:
    """Path elements are integers or further names."""
    key = tuple(name_key(p) if isinstance(p, str) else int(p) for p in path)
    return np.random.SeedSequence(int(seed), spawn_key=(name_key(name),) + key)


def stream(seed: int, name: str, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, name, *path)))


def child_seed(seed: int, name: str, *path: int) -> int:
    """A plain integer seed for APIs that want one."""
    return int(seed_sequence(seed, name, *path).generate_state(1, np.uint64)[0])
