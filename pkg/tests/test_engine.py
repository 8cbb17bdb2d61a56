import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subplay.engine import kernels
from subplay.engine.config import EntitySpec, EnvConfig, Role
from subplay.engine.world import (
    ADVERSARY, VICTIM, JointAction, WorldState, boundary_penalty, collisions, compute_rewards,
    full_state_observation, in_forest, is_caught, layout, leader_relay, observation_dim, observations,
    physics_step, reset, step, victim_observations, write_trajectory,
)
from tests.oracles import semi_implicit_step

PP = EnvConfig(num_adversaries=2, num_victims=3)
WC = EnvConfig(num_adversaries=2, num_victims=3, environment="world_communication")


def blank_state(cfg, positions=None):
    pos = np.zeros((cfg.num_entities, 2)) if positions is None else np.asarray(positions, float)
    return WorldState(cfg, pos, np.zeros_like(pos), 0, None)


def test_entity_spec_validation():
    with pytest.raises(ValueError):
        EntitySpec(Role.PREY, radius=0.0)
    with pytest.raises(ValueError):
        EntitySpec(Role.PREY, radius=0.1, max_speed=1.0, accel=0.0, movable=True)


@pytest.mark.parametrize("kw", [dict(num_adversaries=0), dict(num_victims=0), dict(episode_length=0),
                                dict(gamma=1.0), dict(damping=1.0), dict(environment="soccer")])
def test_env_config_rejects(kw):
    with pytest.raises(ValueError):
        EnvConfig(**kw)


def test_reset_is_seeded():
    a, b = reset(PP, 7), reset(PP, 7)
    assert np.array_equal(a.positions, b.positions) and a.step_index == 0
    assert not np.array_equal(a.positions, reset(PP, 8).positions)
    assert np.all(a.velocities == 0.0)


def test_reset_cardinality_and_bounds():
    s = reset(EnvConfig(num_adversaries=1, num_victims=3), 0)
    lay = layout(s.config)
    assert lay.victim_idx.size == 3 and lay.adversary_idx.size == 1
    assert np.all(np.abs(s.positions) <= 1.0)


def test_reset_uniform_mean():
    rng = np.random.default_rng(0)
    cfg = EnvConfig(num_adversaries=1, num_victims=3)
    xs = np.concatenate([reset(cfg, rng).positions[layout(cfg).victim_idx, 0] for _ in range(10_000)])
    assert abs(xs.mean()) < 0.03


def test_wc_reset_has_forest_and_foods():
    s = reset(WC, 3)
    lay = layout(WC)
    assert lay.food_idx.size == WC.num_adversaries
    half = WC.forest_size / 2
    assert np.all(np.abs(s.forest_center) <= 1.0 - half)


def test_statics():
    s = reset(PP, 0)
    s.positions[:] = np.arange(s.positions.size).reshape(-1, 2) * 0.5  # far apart
    out = physics_step(s, JointAction(np.zeros((2, 2)), np.zeros((3, 2))))
    assert np.array_equal(out.positions, s.positions)
    assert out.step_index == 1


def test_hand_integration():
    cfg = EnvConfig(num_adversaries=1, num_victims=1, num_obstacles=0)
    s = blank_state(cfg, [[0.0, 0.0], [0.8, 0.8]])
    s.velocities[0] = (1.0, 0.0)
    out = physics_step(s, JointAction([[0.0, 0.0]], [[0.0, 0.0]]))
    assert np.allclose(out.velocities[0], (0.75, 0.0), atol=1e-15)
    assert np.allclose(out.positions[0] - s.positions[0], (0.075, 0.0), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=2), st.lists(st.floats(-1.3, 1.3), min_size=2, max_size=2))
def test_free_particle_matches_oracle(action, vel):
    cfg = EnvConfig(num_adversaries=1, num_victims=1, num_obstacles=0)
    s = blank_state(cfg, [[0.0, 0.0], [5.0, 5.0]])
    s.velocities[0] = vel
    out = physics_step(s, JointAction([action], [[0.0, 0.0]]))
    p, v = semi_implicit_step([0.0, 0.0], vel, [4.0 * a for a in action], 0.25, 0.1, 1.3)
    assert np.allclose(out.positions[0], p, atol=1e-12)
    assert np.allclose(out.velocities[0], v, atol=1e-12)


def test_contact_pushes_apart():
    cfg = EnvConfig(num_adversaries=1, num_victims=1, num_obstacles=0)
    s = blank_state(cfg, [[0.0, 0.0], [0.05, 0.0]])
    d0 = 0.05
    for _ in range(5):
        s = physics_step(s, JointAction([[0.0, 0.0]], [[0.0, 0.0]]))
        d = np.linalg.norm(s.positions[0] - s.positions[1])
        assert d > d0
        d0 = d


def test_action_range_enforced():
    s = reset(PP, 0)
    with pytest.raises(ValueError):
        physics_step(s, JointAction(np.full((2, 2), 1.5), np.zeros((3, 2))))


def test_step_past_horizon_rejected():
    s = reset(EnvConfig(episode_length=1), 0)
    s = physics_step(s, (np.zeros((1, 2)), np.zeros((3, 2))))
    with pytest.raises(ValueError):
        physics_step(s, (np.zeros((1, 2)), np.zeros((3, 2))))


def test_speed_cap_and_episode_length():
    rng = np.random.default_rng(1)
    s = reset(PP, rng)
    lay = layout(PP)
    for _ in range(PP.episode_length):
        s = step(s, rng.uniform(-1, 1, (2, 2)), rng.uniform(-1, 1, (3, 2))).next_state
        speed = np.linalg.norm(s.velocities, axis=1)
        assert np.all(speed[lay.movable] <= lay.max_speed[lay.movable] + 1e-12)
    assert s.step_index == PP.episode_length
    with pytest.raises(ValueError):
        step(s, np.zeros((2, 2)), np.zeros((3, 2)))


def test_collision_events_brute_force():
    rng = np.random.default_rng(2)
    lay = layout(PP)
    for _ in range(200):
        s = reset(PP, rng)
        s.positions[: 5] = rng.uniform(-0.3, 0.3, (5, 2))
        ev = {tuple(e) for e in collisions(s)}
        expect = set()
        for j, v in enumerate(lay.victim_idx):
            for i, a in enumerate(lay.adversary_idx):
                if np.linalg.norm(s.positions[v] - s.positions[a]) < lay.radius[v] + lay.radius[a]:
                    expect.add((j, i))
        assert ev == expect


def test_rewards_null_and_collision():
    cfg = EnvConfig(num_adversaries=1, num_victims=3, num_obstacles=0)
    far = blank_state(cfg, [[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0], [0.0, 0.5]])
    adv, vic = compute_rewards(far, far, np.zeros((0, 2)))
    assert np.all(adv == 0) and np.all(vic == 0)
    adv, vic = compute_rewards(far, far, np.array([[1, 0]]))
    assert vic.tolist() == [0.0, 10.0, 0.0] and adv.tolist() == [-10.0]


def test_reward_antisymmetry():
    rng = np.random.default_rng(3)
    cfg = EnvConfig(num_adversaries=2, num_victims=3, num_obstacles=0)
    for _ in range(50):
        s = blank_state(cfg, rng.uniform(-0.2, 0.2, (5, 2)))
        ev = collisions(s)
        adv, vic = compute_rewards(s, s, ev)
        assert np.isclose(adv.sum() + vic.sum(), 0.0)


def test_boundary_penalty():
    assert boundary_penalty([0.5, -0.5]) == 0.0
    assert boundary_penalty([0.9 + 1e-6, 0.0]) > 0.0
    assert boundary_penalty([0.95, 0.0]) == pytest.approx(0.5)
    assert boundary_penalty([1.2, 0.0]) == pytest.approx(np.exp(0.4))
    assert boundary_penalty([5.0, 0.0]) == 10.0
    cfg = EnvConfig(num_adversaries=1, num_victims=1, num_obstacles=0)
    s = blank_state(cfg, [[0.95, 0.0], [0.0, 0.0]])
    adv, _ = compute_rewards(s, s, np.zeros((0, 2)))
    assert adv[0] < 0


def test_is_caught():
    assert not is_caught([])
    assert not is_caught([np.zeros((0, 2))] * 25)
    assert is_caught([np.zeros((0, 2))] * 24 + [np.array([[0, 0]])])
    rng = np.random.default_rng(4)
    logs = [[np.zeros((0, 2)) if rng.random() > 0.02 else np.array([[0, 0]]) for _ in range(25)]
            for _ in range(1000)]
    hand = sum(1 for log in logs if any(len(e) for e in log))
    assert sum(is_caught(log) for log in logs) == hand


def test_observation_dim_formula():
    # 4 + 2*obstacles + 2*(team-1) + 4*opponents
    assert observation_dim(PP, ADVERSARY) == 4 + 4 + 2 + 12 == 22
    assert observation_dim(PP, VICTIM) == 4 + 4 + 4 + 8 == 20
    assert observation_dim(WC, VICTIM) == 4 + 4 + 4 + 4 + 8 + 4


def test_obstacle_relative_slot():
    cfg = EnvConfig(num_adversaries=1, num_victims=1, num_obstacles=1)
    s = blank_state(cfg, [[0.0, 0.0], [0.7, 0.7], [0.3, 0.0]])
    o = full_state_observation(s, 0, ADVERSARY)
    assert o[4:6].tolist() == [0.3, 0.0]


@pytest.mark.parametrize("cfg", [PP, WC, EnvConfig(num_adversaries=4, num_victims=2)])
@pytest.mark.parametrize("side", [ADVERSARY, VICTIM])
def test_kernel_observations_match_reference(cfg, side):
    rng = np.random.default_rng(5)
    s = reset(cfg, rng)
    s.velocities[:] = rng.normal(size=s.velocities.shape)
    obs = observations(s, side)
    n = cfg.num_adversaries if side == ADVERSARY else cfg.num_victims
    for i in range(n):
        assert np.array_equal(obs[i], full_state_observation(s, i, side))


def test_translation_covariance():
    s = reset(PP, 6)
    t = s.copy()
    t.positions += 0.25
    a, b = full_state_observation(s, 0, ADVERSARY), full_state_observation(t, 0, ADVERSARY)
    assert np.allclose(a[4:], b[4:], atol=1e-12)
    assert np.allclose(b[2:4] - a[2:4], 0.25)


def test_leader_relay():
    s = reset(WC, 0)
    s.positions[0] = (0.1, 0.2)
    s.positions[1] = (-0.3, 0.4)
    assert leader_relay(s).tolist() == [0.1, 0.2, -0.3, 0.4]
    obs = victim_observations(s)
    assert np.all(obs[1:, -4:] == obs[1, -4:])
    with pytest.raises(ValueError):
        leader_relay(reset(PP, 0))


def test_prey_in_forest_hidden_but_relayed():
    s = reset(WC, 1)
    s.forest_center = np.array([0.0, 0.0])
    s.positions[0] = (0.05, 0.05)  # prey 0 inside
    lay = layout(WC)
    s.positions[lay.victim_idx] = [(0.8, 0.8), (0.8, -0.8), (-0.8, 0.8)]
    assert in_forest(s, [0])[0]
    obs = victim_observations(s)
    full = observations(s, VICTIM)
    assert np.array_equal(obs[0], full[0])  # leader sees all
    assert np.all(obs[1, 16:18] == 0) and np.all(obs[1, 20:22] == 0)
    assert obs[1, -4:-2].tolist() == [0.05, 0.05]


def test_trajectory_dump():
    s = reset(PP, 0)
    buf = io.StringIO()
    write_trajectory(buf, [s, physics_step(s, (np.zeros((2, 2)), np.zeros((3, 2))))], episode=3)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# subplay-trajectory v1"
    assert lines[1] == "episode,step,entity,px,py,vx,vy"
    assert len(lines) == 2 + 2 * PP.num_entities


def test_kernels_agree():
    rng = np.random.default_rng(8)
    lay = layout(PP)
    for _ in range(100):
        pos = rng.uniform(-0.4, 0.4, (PP.num_entities, 2))
        vel = rng.normal(size=pos.shape)
        force = rng.normal(size=pos.shape)
        args = (pos, vel, force, lay.radius, lay.max_speed, lay.movable, lay.collide, 0.25, 0.1, 100.0, 1e-3)
        p1, v1 = kernels.physics_step_nb(*args)
        p2, v2 = kernels.physics_step_np(*args)
        assert np.allclose(p1, p2, rtol=0, atol=1e-12) and np.allclose(v1, v2, rtol=0, atol=1e-12)
        c1 = kernels.collision_matrix_nb(pos, lay.radius, lay.victim_idx, lay.adversary_idx)
        c2 = kernels.collision_matrix_np(pos, lay.radius, lay.victim_idx, lay.adversary_idx)
        assert np.array_equal(c1, c2)
