"""Run manifests and JSONL logs."""

import json
import os
import platform
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import subplay

MANIFEST_VERSION = 1


def artifact_versions() -> dict:
    from subplay import _accel

    try:
        import numba
        numba_version = numba.__version__
    except ImportError:  # pragma: no cover
        numba_version = None
    return dict(subplay=subplay.__version__, numpy=np.__version__, numba=numba_version,
                numba_active=_accel.USE_NUMBA, python=platform.python_version())


@dataclass
class RunManifest:
    command: str
    config_hash: str
    config: dict
    seed: int
    versions: dict = field(default_factory=artifact_versions)
    timings: dict = field(default_factory=dict)
    checkpoints: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    created: str = ""
    version: int = MANIFEST_VERSION

    def write(self, path) -> None:
        self.created = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        atomic_write_text(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path) as fh:
            return cls(**json.load(fh))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class PhaseTimer:
    """Collects wall-clock seconds per named phase."""

    def __init__(self):
        self.timings = {}

    def __call__(self, name):
        timer = self

        class _Phase:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[name] = timer.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Phase()


class JsonlLog:
    def __init__(self, path):
        self.fh = open(path, "w")

    def __call__(self, entry: dict) -> None:
        self.fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def close(self) -> None:
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
