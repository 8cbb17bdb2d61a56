"""The three defenses: adversarial retraining, policy ensemble, continual fine-tuning."""

import math
from dataclasses import dataclass, field

from subplay.attack.loop import AttackConfig, run_attack
from subplay.evalkit.evaluate import evaluate
from subplay.opponents import (
    VICTIM_HYPER, HeuristicPolicy, VictimPool, VictimTeam, VictimTrainer,
    train_victim_against,
)


def _team(victim):
    return victim if isinstance(victim, (VictimTeam, VictimPool)) else VictimTeam.from_learners(victim)


@dataclass
class RetrainingReport:
    victims: list
    records: list = field(default_factory=list)


def defense_adversarial_retraining(victim_learners, env_cfg, limitation, rounds: int = 5,
                                   attack_episodes: int = 1000, retrain_episodes: int = 1000,
                                   eval_episodes: int = 500, seeds=(0,), seed: int = 0,
                                   attack_cfg: AttackConfig = AttackConfig(), victim_hp=VICTIM_HYPER,
                                   config_hash: str = "") -> RetrainingReport:
    """Alternate a fresh attack against the frozen victim with victim retraining against that attack.

    ``records[r]`` is the fresh attack's metrics in round r, measured before
    the victim adapts to it. The input learners are left untouched.
    """
    learners = [lr.copy() for lr in victim_learners]
    report = RetrainingReport([VictimTeam.from_learners(learners)])
    for r in range(rounds):
        victim = VictimTeam.from_learners(learners)
        attack = run_attack(env_cfg, limitation, victim, attack_episodes, seed + r, attack_cfg)
        rec = evaluate(attack.subpolicies, victim, env_cfg, limitation, eval_episodes, seeds,
                       config_hash=config_hash, label=f"retrain-round-{r + 1}")
        report.records.append(rec)
        train_victim_against(learners, attack.subpolicies, env_cfg, limitation, retrain_episodes,
                             seed + r, victim_hp, tag=f"retrain-{r}")
        report.victims.append(VictimTeam.from_learners(learners))
    return report


def access_subset(pool, access_fraction: float) -> list:
    """The first ``ceil(fraction * |pool|)`` members, never fewer than one."""
    if not 0.0 < access_fraction <= 1.0:
        raise ValueError(f"access fraction must lie in (0, 1], got {access_fraction}")
    k = max(1, math.ceil(access_fraction * len(pool) - 1e-9))
    return list(pool[:k])


def ensemble_effect(e_nodef: float, e_def: float) -> float:
    """Percent change of attack effectiveness; -100 means the attack is neutralized."""
    if e_nodef <= 0:
        raise ValueError(f"undefined effect: attack effectiveness without defense is {e_nodef:.6g} <= 0")
    return 100.0 * (e_def - e_nodef) / e_nodef


@dataclass
class EnsembleReport:
    effect: float
    e_def: float
    e_nodef: float
    access_fraction: float
    pool_size: int
    baseline_pool: object
    attack_pool: object
    per_member: list


def defense_policy_ensemble(pool, access_fraction: float, env_cfg, limitation, attack_episodes: int = 1000,
                            eval_episodes: int = 500, seeds=(0,), seed: int = 0,
                            attack_cfg: AttackConfig = AttackConfig(), baseline=None,
                            min_pool: int | None = None, config_hash: str = "") -> EnsembleReport:
    """Effect of switching among ``pool`` victims on a SUB-PLAY attacker.

    Without the defense, each member is attacked on its own and effectiveness
    is averaged over members. With it, one attacker trains against the
    accessible subset and is scored against the full pool.
    """
    pool = [_team(v) for v in pool]
    if min_pool is None:
        min_pool = 3 if access_fraction < 1.0 else 1
    if len(pool) < min_pool:
        raise ValueError(f"policy ensemble needs at least {min_pool} victims, pool has {len(pool)}")
    if baseline is None:
        baseline = HeuristicPolicy(env_cfg.num_adversaries)

    def attack_and_score(train_victim, eval_victim, label):
        res = run_attack(env_cfg, limitation, train_victim, attack_episodes, seed, attack_cfg)
        b = evaluate(baseline, eval_victim, env_cfg, limitation, eval_episodes, seeds,
                     config_hash=config_hash, label=label + "/baseline")
        a = evaluate(res.subpolicies, eval_victim, env_cfg, limitation, eval_episodes, seeds,
                     config_hash=config_hash, label=label + "/attack")
        return b, a

    per_member, seen = [], []
    for idx, v in enumerate(pool):
        cached = next((r for w, r in seen if w.equals(v)), None)
        if cached is None:
            cached = attack_and_score(v, v, f"member-{idx}")
            seen.append((v, cached))
        per_member.append(cached)
    e_nodef = sum(b.PM - a.PM for b, a in per_member) / len(per_member)

    full = VictimPool(pool)
    train = VictimPool(access_subset(pool, access_fraction))
    b_pool, a_pool = attack_and_score(train, full, f"ensemble-{access_fraction:.3f}")
    e_def = b_pool.PM - a_pool.PM
    return EnsembleReport(ensemble_effect(e_nodef, e_def), e_def, e_nodef, access_fraction, len(pool),
                          b_pool, a_pool, per_member)


@dataclass
class FineTuneReport:
    steps: list
    records: list
    learners: list


def defense_fine_tuning(victim_learners, adversary, env_cfg, limitation, steps: int, cadence: int = 100,
                        eval_episodes: int = 500, seeds=(0,), seed: int = 0, lr_scale: float = 0.1,
                        victim_hp=VICTIM_HYPER, config_hash: str = "") -> FineTuneReport:
    """Victims keep learning at a reduced rate while ``adversary`` attacks.

    ``steps`` counts victim training episodes. Metrics are taken at 0 and
    after every ``cadence`` episodes, so the timeline has
    ``steps // cadence + 1`` points.
    """
    if cadence < 1 or steps < 0:
        raise ValueError("fine-tuning needs steps >= 0 and cadence >= 1")
    learners = [lr.copy() for lr in victim_learners]
    for lr in learners:
        lr.set_lr(lr.actor_opt.lr * lr_scale)

    def measure(done):
        return evaluate(adversary, VictimTeam.from_learners(learners), env_cfg, limitation, eval_episodes,
                        seeds, config_hash=config_hash, label=f"finetune-{done}")

    trainer = VictimTrainer(learners, adversary, env_cfg, limitation, seed, victim_hp, tag="finetune")
    xs, recs = [0], [measure(0)]
    for chunk in range(steps // cadence):
        trainer.run(cadence)
        done = (chunk + 1) * cadence
        xs.append(done)
        recs.append(measure(done))
    return FineTuneReport(xs, recs, learners)
