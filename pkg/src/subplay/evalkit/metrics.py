"""Catch rate, collision frequency, their harmonic mean and the improvement delta."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np


def harmonic_merit(*values: float) -> float:
    """``L / sum(1 / v)``; zero as soon as any metric is zero."""
    if not values:
        raise ValueError("need at least one metric")
    if any(v < 0 for v in values):
        raise ValueError("metrics must be non-negative")
    if any(v == 0 for v in values):
        return 0.0
    return len(values) / sum(1.0 / v for v in values)


def performance_metric(cr: float, cf: float) -> float:
    """``2 CR CF / (CR + CF)``, defined as 0 when either is 0."""
    if cr == 0 or cf == 0:
        return 0.0
    return 2.0 * cr * cf / (cr + cf)


def catch_rate(caught) -> float:
    caught = np.asarray(caught, dtype=bool)
    if caught.size < 1:
        raise ValueError("need at least one episode")
    return float(caught.mean())


def collision_frequency(collisions_per_episode) -> float:
    c = np.asarray(collisions_per_episode, dtype=np.float64)
    if c.size < 1:
        raise ValueError("need at least one episode")
    return float(c.mean())


def improvement_delta(pm_baseline: float, pm_victimplay: float, pm_subplay: float) -> float:
    """Relative gain of SUB-PLAY over Victim-play, measured against the baseline gap."""
    gap = pm_baseline - pm_victimplay
    if gap == 0:
        raise ValueError("baseline and Victim-play performance coincide; delta is undefined")
    return ((pm_baseline - pm_subplay) - gap) / gap


@dataclass
class MetricsRecord:
    CR: float
    CF: float
    PM: float
    num_episodes: int
    occupancy: list = field(default_factory=list)
    seeds: tuple = ()
    config_hash: str = ""
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError(f"CR must lie in [0, 1], got {self.CR}")
        if self.CF < 0:
            raise ValueError("CF must be non-negative")

    @classmethod
    def from_episodes(cls, caught, collisions, **kw) -> "MetricsRecord":
        cr = catch_rate(caught)
        cf = collision_frequency(collisions)
        return cls(cr, cf, performance_metric(cr, cf), len(np.atleast_1d(caught)), **kw)

    def row(self) -> dict:
        return dict(label=self.label, CR=repr(self.CR), CF=repr(self.CF), PM=repr(self.PM),
                    num_episodes=self.num_episodes,
                    occupancy=" ".join(repr(float(x)) for x in self.occupancy),
                    seeds=" ".join(str(s) for s in self.seeds), config_hash=self.config_hash)


CSV_FIELDS = ("label", "CR", "CF", "PM", "num_episodes", "occupancy", "seeds", "config_hash")
CSV_VERSION_LINE = "# subplay-metrics v1"


def records_to_csv(records) -> str:
    out = io.StringIO()
    out.write(CSV_VERSION_LINE + "\n")
    w = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return out.getvalue()


def records_from_csv(text: str) -> list:
    lines = text.splitlines()
    if not lines or lines[0] != CSV_VERSION_LINE:
        raise ValueError("not a subplay metrics file")
    out = []
    for row in csv.DictReader(lines[1:]):
        out.append(MetricsRecord(
            float(row["CR"]), float(row["CF"]), float(row["PM"]), int(row["num_episodes"]),
            [float(x) for x in row["occupancy"].split()],
            tuple(int(s) for s in row["seeds"].split()), row["config_hash"], row["label"]))
    return out
