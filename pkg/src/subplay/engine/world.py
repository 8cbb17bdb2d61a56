"""Predator-prey and World Communication particle worlds.

Entity order inside a :class:`WorldState`: the M adversary preys, the N victim
predators, the obstacles, then the foods. The forest (world_communication only)
is not an entity; it is an axis-aligned square stored as its center.

Observation layout for an agent (``side`` is ``"adversary"`` or ``"victim"``)::

    [self vel (2), self pos (2),
     obstacle rel pos (2 * num_obstacles), food rel pos (2 * foods),
     teammate rel pos (2 * (team - 1)),
     opponent rel pos (2 * n_opp), opponent vel (2 * n_opp),
     relay (2 * M, victims in world_communication only)]
"""

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from subplay.engine import kernels
from subplay.engine.config import EnvConfig

ADVERSARY = "adversary"
VICTIM = "victim"


@dataclass(frozen=True)
class Layout:
    adversary_idx: np.ndarray
    victim_idx: np.ndarray
    obstacle_idx: np.ndarray
    food_idx: np.ndarray
    landmark_idx: np.ndarray
    radius: np.ndarray
    max_speed: np.ndarray
    accel: np.ndarray
    movable: np.ndarray
    collide: np.ndarray


@lru_cache(maxsize=64)
def layout(config: EnvConfig) -> Layout:
    m, n, k, f = config.num_adversaries, config.num_victims, config.num_obstacles, config.foods
    specs = [config.prey] * m + [config.predator] * n + [config.obstacle] * k + [config.food] * f
    idx = np.arange(m + n + k + f)
    arrays = dict(
        radius=np.array([s.radius for s in specs], dtype=np.float64),
        max_speed=np.array([s.max_speed for s in specs], dtype=np.float64),
        accel=np.array([s.accel for s in specs], dtype=np.float64),
        movable=np.array([s.movable for s in specs], dtype=np.bool_),
        collide=np.array([s.collidable for s in specs], dtype=np.bool_),
    )
    for a in arrays.values():
        a.setflags(write=False)
    return Layout(
        adversary_idx=idx[:m], victim_idx=idx[m:m + n], obstacle_idx=idx[m + n:m + n + k],
        food_idx=idx[m + n + k:], landmark_idx=idx[m + n:], **arrays,
    )


@dataclass
class WorldState:
    config: EnvConfig
    positions: np.ndarray
    velocities: np.ndarray
    step_index: int = 0
    forest_center: np.ndarray | None = None

    def copy(self) -> "WorldState":
        fc = None if self.forest_center is None else self.forest_center.copy()
        return replace(self, positions=self.positions.copy(), velocities=self.velocities.copy(),
                       forest_center=fc)


@dataclass
class JointAction:
    adversary: np.ndarray
    victim: np.ndarray

    def __post_init__(self):
        self.adversary = np.asarray(self.adversary, dtype=np.float64).reshape(-1, 2)
        self.victim = np.asarray(self.victim, dtype=np.float64).reshape(-1, 2)
        for name, a in (("adversary", self.adversary), ("victim", self.victim)):
            if not np.all(np.abs(a) <= 1.0):
                raise ValueError(f"{name} action outside [-1, 1]: {a}")


@dataclass
class StepOutcome:
    next_state: WorldState
    adversary_rewards: np.ndarray
    victim_rewards: np.ndarray
    collision_events: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))


def reset(config: EnvConfig, seed) -> WorldState:
    """Uniform random placement; ``seed`` is an int or a ``numpy`` Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lay = layout(config)
    n_agents = config.num_adversaries + config.num_victims
    pos = np.zeros((config.num_entities, 2))
    pos[:n_agents] = rng.uniform(-config.arena, config.arena, size=(n_agents, 2))
    inner = 0.9 * config.arena
    pos[lay.landmark_idx] = rng.uniform(-inner, inner, size=(lay.landmark_idx.size, 2))
    forest = None
    if config.has_forest:
        half = config.forest_size / 2
        forest = rng.uniform(-config.arena + half, config.arena - half, size=2)
    return WorldState(config, pos, np.zeros_like(pos), 0, forest)


def physics_step(state: WorldState, actions: JointAction) -> WorldState:
    cfg = state.config
    if state.step_index >= cfg.episode_length:
        raise ValueError(f"episode already finished at step {state.step_index}")
    if not isinstance(actions, JointAction):
        actions = JointAction(*actions)
    lay = layout(cfg)
    force = np.zeros_like(state.positions)
    force[lay.adversary_idx] = actions.adversary * lay.accel[lay.adversary_idx, None]
    force[lay.victim_idx] = actions.victim * lay.accel[lay.victim_idx, None]
    pos, vel = kernels.physics_step(
        state.positions, state.velocities, force, lay.radius, lay.max_speed, lay.movable,
        lay.collide, cfg.damping, cfg.dt, cfg.contact_force, cfg.contact_margin)
    return WorldState(cfg, pos, vel, state.step_index + 1, state.forest_center)


def collisions(state: WorldState) -> np.ndarray:
    """(victim j, adversary i) pairs overlapping in ``state``, one row per pair."""
    lay = layout(state.config)
    hit = kernels.collision_matrix(state.positions, lay.radius, lay.victim_idx, lay.adversary_idx)
    return np.argwhere(hit).astype(np.int64)


def boundary_penalty(coords: np.ndarray, onset: float = 0.9) -> float:
    """Soft penalty for leaving the arena, summed over both coordinates."""
    total = 0.0
    for x in np.abs(np.asarray(coords, dtype=np.float64)).ravel():
        if x < onset:
            continue
        if x < 1.0:
            total += (x - onset) * 10.0
        else:
            total += min(np.exp(2.0 * x - 2.0), 10.0)
    return total


def compute_rewards(state_before: WorldState, state_after: WorldState, events: np.ndarray):
    cfg = state_after.config
    lay = layout(cfg)
    events = np.asarray(events, dtype=np.int64).reshape(-1, 2)
    vic = np.zeros(cfg.num_victims)
    adv = np.zeros(cfg.num_adversaries)
    np.add.at(vic, events[:, 0], cfg.collision_reward)
    np.add.at(adv, events[:, 1], -cfg.collision_reward)
    pos = state_after.positions
    for i, e in enumerate(lay.adversary_idx):
        adv[i] -= boundary_penalty(pos[e], cfg.bound_penalty_onset)
    if cfg.foods:
        d = np.linalg.norm(pos[lay.adversary_idx][:, None] - pos[lay.food_idx][None], axis=-1)
        adv -= cfg.food_shaping_weight * d.min(axis=1)
    if cfg.predator_shaping_weight:
        d = np.linalg.norm(pos[lay.victim_idx][:, None] - pos[lay.adversary_idx][None], axis=-1)
        vic -= cfg.predator_shaping_weight * d.min(axis=1)
    return adv, vic


def step(state: WorldState, adversary_actions, victim_actions) -> StepOutcome:
    after = physics_step(state, JointAction(adversary_actions, victim_actions))
    events = collisions(after)
    adv, vic = compute_rewards(state, after, events)
    return StepOutcome(after, adv, vic, events)


def is_caught(episode_events) -> bool:
    """True iff any collision happened; accepts per-step arrays or a flat list of pairs."""
    for ev in episode_events:
        if np.size(ev) > 0:
            return True
    return False


def _side(config: EnvConfig, side: str):
    lay = layout(config)
    if side == ADVERSARY:
        return lay.adversary_idx, lay.victim_idx
    if side == VICTIM:
        return lay.victim_idx, lay.adversary_idx
    raise ValueError(f"side must be {ADVERSARY!r} or {VICTIM!r}, got {side!r}")


def observation_layout(config: EnvConfig, side: str) -> dict:
    team, opp = _side(config, side)
    sizes = [("self_vel", 2), ("self_pos", 2), ("obstacles", 2 * config.num_obstacles),
             ("foods", 2 * config.foods), ("teammates", 2 * (team.size - 1)),
             ("opponent_pos", 2 * opp.size), ("opponent_vel", 2 * opp.size)]
    if side == VICTIM and config.has_forest:
        sizes.append(("relay", 2 * config.num_adversaries))
    out, start = {}, 0
    for name, size in sizes:
        out[name] = slice(start, start + size)
        start += size
    return out


def observation_dim(config: EnvConfig, side: str) -> int:
    """4 + 2*obstacles + 2*foods + 2*(team-1) + 4*opponents (+ 2*M relay for WC victims)."""
    return observation_layout(config, side)["opponent_vel"].stop + (
        2 * config.num_adversaries if side == VICTIM and config.has_forest else 0)


def opponent_slots(config: EnvConfig, side: str, j: int) -> np.ndarray:
    """Indices of opponent ``j``'s position and velocity slots."""
    lay = observation_layout(config, side)
    p, v = lay["opponent_pos"].start + 2 * j, lay["opponent_vel"].start + 2 * j
    return np.array([p, p + 1, v, v + 1])


def in_forest(state: WorldState, entities) -> np.ndarray:
    entities = np.atleast_1d(entities)
    if state.forest_center is None:
        return np.zeros(entities.shape, dtype=bool)
    half = state.config.forest_size / 2
    d = np.abs(state.positions[entities] - state.forest_center)
    return np.all(d <= half, axis=-1)


def leader_relay(state: WorldState) -> np.ndarray:
    """Absolute prey positions as seen by the leader predator (sees everything)."""
    if not state.config.has_forest:
        raise ValueError("leader relay exists only in world_communication")
    return state.positions[layout(state.config).adversary_idx].ravel().copy()


def observations(state: WorldState, side: str) -> np.ndarray:
    """Full-state observations for every agent of ``side``, shape ``[team, dim]``."""
    cfg = state.config
    lay = layout(cfg)
    team, opp = _side(cfg, side)
    dim = observation_dim(cfg, side)
    obs = kernels.build_observations(state.positions, state.velocities, team, lay.landmark_idx,
                                     team, opp, dim)
    if side == VICTIM and cfg.has_forest:
        obs[:, observation_layout(cfg, side)["relay"]] = leader_relay(state)
    return obs


def full_state_observation(state: WorldState, agent_id: int, side: str) -> np.ndarray:
    """Observation of a single agent, assembled slot by slot."""
    cfg = state.config
    lay = layout(cfg)
    team, opp = _side(cfg, side)
    s = team[agent_id]
    p = state.positions[s]
    parts = [state.velocities[s], p,
             (state.positions[lay.obstacle_idx] - p).ravel(),
             (state.positions[lay.food_idx] - p).ravel(),
             (state.positions[team[team != s]] - p).ravel(),
             (state.positions[opp] - p).ravel(),
             state.velocities[opp].ravel()]
    if side == VICTIM and cfg.has_forest:
        parts.append(leader_relay(state))
    return np.concatenate(parts)


def victim_observations(state: WorldState) -> np.ndarray:
    """Victim observations with the forest applied.

    In world_communication a non-leader predator outside the forest cannot see
    preys inside it; the leader (victim 0) sees everything and the relay
    slot carries its view to the whole team.
    """
    obs = observations(state, VICTIM)
    cfg = state.config
    if not cfg.has_forest:
        return obs
    lay = layout(cfg)
    hidden_prey = in_forest(state, lay.adversary_idx)
    if not hidden_prey.any():
        return obs
    observer_in = in_forest(state, lay.victim_idx)
    for j in range(1, cfg.num_victims):
        if observer_in[j]:
            continue
        for i in np.flatnonzero(hidden_prey):
            obs[j, opponent_slots(cfg, VICTIM, i)] = 0.0
    return obs


TRAJECTORY_HEADER = ("episode", "step", "entity", "px", "py", "vx", "vy")


def trajectory_rows(state: WorldState, episode: int):
    for e in range(state.positions.shape[0]):
        yield (episode, state.step_index, e, *state.positions[e], *state.velocities[e])


def write_trajectory(fh, states, episode: int = 0, header: bool = True):
    """Dump states as ``episode,step,entity,px,py,vx,vy`` lines."""
    w = csv.writer(fh)
    if header:
        fh.write("# subplay-trajectory v1\n")
        w.writerow(TRAJECTORY_HEADER)
    for st in states:
        for row in trajectory_rows(st, episode):
            w.writerow([row[0], row[1], row[2]] + [repr(float(x)) for x in row[3:]])
