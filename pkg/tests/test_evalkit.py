import numpy as np
import pytest

from subplay.attack import AttackConfig
from subplay.engine.config import EnvConfig
from subplay.evalkit import (
    MetricsRecord, catch_rate, collision_frequency, evaluate, improvement_delta, performance_metric,
    records_from_csv, records_to_csv, run_episodes,
)
from subplay.evalkit.activations import export_activations, read_activations, write_activations
from subplay.evalkit.defenses import (
    access_subset, defense_adversarial_retraining, defense_fine_tuning, defense_policy_ensemble,
    ensemble_effect,
)
from subplay.observe import Limitation
from subplay.opponents import HeuristicPolicy, VictimPool, VictimTeam, train_selfplay
from tests.conftest import SMALL_HP, chaser_victim, random_victim
from tests.oracles import delta, harmonic

UNC = Limitation("uncertainty", 0.5)
PP = EnvConfig(num_adversaries=1, num_victims=3)
TINY_ATTACK = AttackConfig(merit_cadence=2, merit_episodes=2, preobserve_episodes=2, hyper=SMALL_HP)
STILL = HeuristicPolicy(1, speed_scale=0.0)


def test_counting_examples():
    caught = [True] * 400 + [False] * 600
    assert catch_rate(caught) == 0.4
    rec = MetricsRecord.from_episodes([False] * 5, [0] * 5)
    assert (rec.CR, rec.CF, rec.PM) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        catch_rate([])
    with pytest.raises(ValueError):
        collision_frequency([])
    with pytest.raises(ValueError):
        MetricsRecord(1.5, 0.0, 0.0, 1)


def test_pm_table_value():
    assert performance_metric(0.579, 3.053) == pytest.approx(0.9734, abs=5e-5)
    assert performance_metric(0.579, 3.053) == pytest.approx(harmonic(0.579, 3.053), abs=1e-12)


@pytest.mark.parametrize("cr,cf", [(0.1, 0.1), (0.3, 7.0), (1.0, 0.02), (0.5, 2.0), (0.0, 4.0)])
def test_pm_bounds(cr, cf):
    pm = performance_metric(cr, cf)
    assert 0 <= pm <= 2 * min(cr, cf) + 1e-15
    if cr == cf:
        assert pm == pytest.approx(cr)


def test_delta_examples():
    assert improvement_delta(1.0, 0.8, 0.8) == 0.0
    assert improvement_delta(1.0, 0.8, 0.6) == pytest.approx(1.0, abs=1e-12)
    assert improvement_delta(1.0, 0.8, 1.0) == pytest.approx(-1.0, abs=1e-12)
    for args in [(1.7, 1.2, 0.9), (0.5, 0.1, 0.3)]:
        assert improvement_delta(*args) == pytest.approx(delta(*args), abs=1e-9)
    with pytest.raises(ValueError):
        improvement_delta(0.7, 0.7, 0.1)


def test_evaluate_pure_and_cf_recount():
    vic = chaser_victim(PP)
    logs = []
    a = evaluate(HeuristicPolicy(1), vic, PP, UNC, 40, seeds=(0, 1), event_logs=logs)
    b = evaluate(HeuristicPolicy(1), vic, PP, UNC, 40, seeds=(0, 1))
    assert a == b
    assert len(logs) == 80
    counts = [sum(len(step) for step in ep) for ep in logs]
    assert a.CF == pytest.approx(sum(counts) / 80, abs=1e-12)
    assert a.CR == sum(c > 0 for c in counts) / 80
    assert a.PM == performance_metric(a.CR, a.CF)
    assert abs(sum(a.occupancy) - 1) < 1e-9


def test_evaluate_single_episode_and_rejects_zero():
    rec = evaluate(HeuristicPolicy(1), random_victim(PP), PP, UNC, 1)
    assert rec.CR in (0.0, 1.0)
    with pytest.raises(ValueError):
        run_episodes(HeuristicPolicy(1), random_victim(PP), PP, UNC, 0, 0)


def test_csv_round_trip():
    recs = [MetricsRecord(0.4, 1.25, performance_metric(0.4, 1.25), 10, [0.5, 0.5], (0, 1), "abc", "x"),
            MetricsRecord(0.1 + 0.2, 3.0, 0.5, 3, [], (), "", "y")]
    text = records_to_csv(recs)
    assert records_from_csv(text) == recs
    assert records_to_csv(records_from_csv(text)) == text
    with pytest.raises(ValueError):
        records_from_csv("label,CR\n")


def test_ensemble_effect_arithmetic():
    assert ensemble_effect(0.4, 0.3) == pytest.approx(-25.0, abs=1e-9)
    assert ensemble_effect(0.4, 0.0) == -100.0
    assert ensemble_effect(0.4, 0.4) == 0.0
    with pytest.raises(ValueError):
        ensemble_effect(0.0, 0.1)
    assert access_subset([1, 2, 3], 1 / 3) == [1]
    assert access_subset([1, 2, 3, 4, 5, 6], 1 / 3) == [1, 2]
    assert access_subset([1, 2, 3], 1.0) == [1, 2, 3]
    with pytest.raises(ValueError):
        access_subset([1], 0.0)


def test_ensemble_single_policy_zero_effect():
    vic = chaser_victim(PP)
    rep = defense_policy_ensemble([vic], 1.0, PP, UNC, 4, 20, seed=0, attack_cfg=TINY_ATTACK, baseline=STILL)
    assert rep.e_nodef > 0
    assert rep.effect == 0.0
    rep3 = defense_policy_ensemble([vic, vic, vic], 1.0, PP, UNC, 4, 20, seed=0, attack_cfg=TINY_ATTACK,
                                   baseline=STILL)
    assert rep3.effect == 0.0 and rep3.pool_size == 3


def test_ensemble_pool_size_check():
    with pytest.raises(ValueError, match="at least 3"):
        defense_policy_ensemble([chaser_victim(PP)], 1 / 3, PP, UNC, 2, 2)


def test_retraining_rounds():
    sp = train_selfplay(PP, UNC, 2, 0, SMALL_HP, SMALL_HP)
    rep0 = defense_adversarial_retraining(sp.victim_learners, PP, UNC, rounds=0)
    assert rep0.records == [] and len(rep0.victims) == 1 and rep0.victims[0].equals(sp.victim)
    rep = defense_adversarial_retraining(sp.victim_learners, PP, UNC, rounds=2, attack_episodes=3,
                                         retrain_episodes=3, eval_episodes=5, attack_cfg=TINY_ATTACK,
                                         victim_hp=SMALL_HP)
    assert len(rep.records) == 2 and len(rep.victims) == 3
    assert [r.label for r in rep.records] == ["retrain-round-1", "retrain-round-2"]
    assert not rep.victims[-1].equals(rep.victims[0])
    assert VictimTeam.from_learners(sp.victim_learners).equals(sp.victim)


def test_fine_tuning_timeline():
    sp = train_selfplay(PP, UNC, 2, 0, SMALL_HP, SMALL_HP)
    adv = HeuristicPolicy(1)
    rep0 = defense_fine_tuning(sp.victim_learners, adv, PP, UNC, 0, eval_episodes=10)
    assert rep0.steps == [0] and len(rep0.records) == 1
    plain = evaluate(adv, sp.victim, PP, UNC, 10)
    assert (rep0.records[0].CR, rep0.records[0].CF) == (plain.CR, plain.CF)

    rep = defense_fine_tuning(sp.victim_learners, adv, PP, UNC, 6, cadence=2, eval_episodes=5, victim_hp=SMALL_HP)
    assert rep.steps == [0, 2, 4, 6] and len(rep.records) == 6 // 2 + 1
    assert not VictimTeam.from_learners(rep.learners).equals(sp.victim)
    assert rep.learners[0].actor_opt.lr == pytest.approx(sp.victim_learners[0].actor_opt.lr * 0.1)
    with pytest.raises(ValueError):
        defense_fine_tuning(sp.victim_learners, adv, PP, UNC, 5, cadence=0)


def test_activations_count_width_determinism(tmp_path):
    vic = random_victim(PP)
    opp = {"heuristic": HeuristicPolicy(1), "still": HeuristicPolicy(1, speed_scale=0.0)}
    rows = export_activations(vic, opp, 60, PP, UNC, seed=3)
    for label in opp:
        assert sum(r[0] == label for r in rows) == 60
    assert all(r[4].shape == (128,) for r in rows)
    again = export_activations(vic, opp, 60, PP, UNC, seed=3)
    assert all(a[:4] == b[:4] and a[4].tobytes() == b[4].tobytes() for a, b in zip(rows, again))
    every = export_activations(vic, {"h": HeuristicPolicy(1)}, 10, PP, UNC, agent=None)
    assert len(every) == 30 and {r[3] for r in every} == {0, 1, 2}
    write_activations(tmp_path / "a.csv", rows)
    back = read_activations(tmp_path / "a.csv")
    assert len(back) == len(rows)
    assert all(a[:4] == b[:4] and np.array_equal(a[4], b[4]) for a, b in zip(rows, back))


def test_activations_5000_timesteps():
    rows = export_activations(random_victim(PP), {"h": HeuristicPolicy(1)}, 5000, PP, UNC)
    assert len(rows) == 5000


def test_pool_of_one_matches_plain_evaluation():
    vic = chaser_victim(PP)
    assert evaluate(HeuristicPolicy(1), VictimPool([vic]), PP, UNC, 30) == evaluate(HeuristicPolicy(1), vic, PP, UNC, 30)
