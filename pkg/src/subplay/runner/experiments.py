"""Desk-scale versions of the headline experiments.

Each returns plain numbers so tests and the CLI can both consume them.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from subplay.attack.loop import AttackConfig, run_attack
from subplay.engine.config import EnvConfig
from subplay.evalkit.defenses import defense_policy_ensemble
from subplay.evalkit.evaluate import evaluate
from subplay.observe import Limitation
from subplay.opponents import VICTIM_HYPER, HeuristicPolicy, VictimTeam, train_selfplay, train_victimplay
from subplay.training import HyperParams

ADVERSARY_HP = HyperParams(buffer_capacity=512, batch_size=512)


@dataclass
class VictimArtifact:
    env: EnvConfig
    limitation: Limitation
    team: VictimTeam
    learners: list
    checkpoints: list = field(default_factory=list)
    seconds: float = 0.0


def train_victim(env, limitation, episodes: int, seed: int = 0, hp: HyperParams = VICTIM_HYPER,
                 keep_checkpoints: int = 0) -> VictimArtifact:
    """Self-play victim; optionally keeps copies of the last few 1%-cadence checkpoints."""
    ckpts = []

    def on_ckpt(ep, learners):
        ckpts.append(VictimTeam.from_learners(learners))
        if len(ckpts) > keep_checkpoints:
            ckpts.pop(0)

    every = max(1, episodes // 100) if keep_checkpoints else 0
    t0 = time.perf_counter()
    res = train_selfplay(env, limitation, episodes, seed, hp, hp, every, on_ckpt)
    return VictimArtifact(env, limitation, res.victim, res.victim_learners,
                          ckpts, time.perf_counter() - t0)


@dataclass
class OrderingResult:
    pm: dict
    medians: dict
    seconds: dict

    @property
    def ordered(self) -> bool:
        m = self.medians
        return m["subplay"] <= m["victimplay"] <= m["heuristic"]


def attack_ordering(victim: VictimArtifact, attack_episodes: int = 1000, eval_episodes: int = 500,
                    seeds=(0, 1, 2), cfg: AttackConfig | None = None) -> OrderingResult:
    """PM of SUB-PLAY, Victim-play and the heuristic, one training + evaluation per seed."""
    cfg = cfg or AttackConfig(hyper=ADVERSARY_HP)
    env, lim, team = victim.env, victim.limitation, victim.team
    pm = dict(subplay=[], victimplay=[], heuristic=[])
    secs = dict(subplay=0.0, victimplay=0.0)
    for s in seeds:
        sp = run_attack(env, lim, team, attack_episodes, s, cfg)
        vp = train_victimplay(env, lim, team, attack_episodes, s, cfg.hyper)
        secs["subplay"] += sp.train_seconds
        secs["victimplay"] += vp.train_seconds
        for name, adv in (("subplay", sp.subpolicies), ("victimplay", vp.subpolicies),
                          ("heuristic", HeuristicPolicy(env.num_adversaries))):
            pm[name].append(evaluate(adv, team, env, lim, eval_episodes, (s,)).PM)
    medians = {k: float(np.median(v)) for k, v in pm.items()}
    return OrderingResult(pm, medians, secs)


@dataclass
class ScalabilityResult:
    subs: list
    seconds: dict
    pm: dict

    def median_pm(self, sub) -> float:
        return float(np.median(self.pm[sub]))

    @property
    def time_monotone(self) -> bool:
        t = [self.seconds[s] for s in self.subs]
        return all(a <= b for a, b in zip(t, t[1:]))


def scalability_sweep(victim: VictimArtifact, subs=(1, 2, 3, 4), attack_episodes: int = 300,
                      eval_episodes: int = 200, seeds=(0, 1, 2),
                      base: AttackConfig | None = None) -> ScalabilityResult:
    """Training wall-clock (summed over seeds) and PM per Sub value."""
    base = base or AttackConfig(hyper=ADVERSARY_HP)
    seconds, pm = {}, {}
    for sub in subs:
        cfg = AttackConfig(**{**base.__dict__, "sub": sub})
        seconds[sub], pm[sub] = 0.0, []
        for s in seeds:
            res = run_attack(victim.env, victim.limitation, victim.team, attack_episodes, s, cfg)
            seconds[sub] += res.train_seconds
            pm[sub].append(evaluate(res.subpolicies, victim.team, victim.env, victim.limitation,
                                    eval_episodes, (s,)).PM)
    return ScalabilityResult(list(subs), seconds, pm)


def ensemble_smoke(victim: VictimArtifact, pool, attack_episodes: int = 300, eval_episodes: int = 300,
                   seeds=(0,), seed: int = 0, cfg: AttackConfig | None = None) -> dict:
    """Effect% with full access on ``pool`` and on a one-member pool."""
    cfg = cfg or AttackConfig(hyper=ADVERSARY_HP)
    kw = dict(attack_episodes=attack_episodes, eval_episodes=eval_episodes, seeds=seeds, seed=seed,
              attack_cfg=cfg)
    full = defense_policy_ensemble(pool, 1.0, victim.env, victim.limitation, **kw)
    single = defense_policy_ensemble([victim.team], 1.0, victim.env, victim.limitation, **kw)
    return dict(full=full, single=single)
