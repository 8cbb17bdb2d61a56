"""Policy meritocracy: keep, per (agent, subgame), the best-tested subpolicy."""

import numpy as np

from subplay.evalkit.evaluate import evaluate
from subplay.evalkit.metrics import harmonic_merit
from subplay.training import learner_step

MERIT_TAG_OFFSET = 1000


def retain_if_better(sets, agent: int, subgame: int, candidate, score: float) -> bool:
    """Replace the incumbent only on a strictly lower (better for the attacker) score."""
    if score < sets.scores[agent, subgame]:
        sets.actors[agent][subgame] = candidate
        sets.scores[agent, subgame] = score
        return True
    return False


def score_policy(sets, victim, env_cfg, limitation, episodes: int, seed: int, tag: int) -> float:
    rec = evaluate(sets, victim, env_cfg, limitation, episodes, seeds=(seed,), partition=sets.partition,
                   tag=tag)
    return harmonic_merit(rec.CR, rec.CF)


def meritocracy_round(retained, learners, dirty, victim, env_cfg, limitation, episodes: int,
                      seed: int, round_index: int):
    """Test every freshly updated subpolicy inside the current combination.

    All candidates of one round face the same evaluation episodes.
    """
    tag = MERIT_TAG_OFFSET + round_index
    for i, k in zip(*np.nonzero(dirty)):
        candidate = learners[i][k].actor.copy()
        trial = retained.substitute(int(i), int(k), candidate)
        score = score_policy(trial, victim, env_cfg, limitation, episodes, seed, tag)
        retain_if_better(retained, int(i), int(k), candidate, score)
    return retained


def train_subpolicies(sets, buffers, learners, eval_budget: int, victim, env_cfg, limitation,
                      sample_rngs, seed: int = 0, round_index: int = 0):
    """One pass of subpolicy training: update each ready slot, test it, keep it if better."""
    dirty = np.zeros(sets.scores.shape, dtype=bool)

    def target_actor(j, k):
        return learners[j][k].actor_target

    for i in range(sets.num_agents):
        for k in range(sets.sub):
            if buffers[i][k].ready():
                learner_step(learners[i][k], buffers[i][k], sample_rngs[i][k], target_actor)
                dirty[i, k] = True
    return meritocracy_round(sets, learners, dirty, victim, env_cfg, limitation, eval_budget, seed,
                             round_index)
