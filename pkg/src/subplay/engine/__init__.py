from subplay.engine.config import EntitySpec, EnvConfig, Role
from subplay.engine.world import (
    ADVERSARY, VICTIM, JointAction, StepOutcome, WorldState, compute_rewards, collisions,
    full_state_observation, in_forest, is_caught, layout, leader_relay, observation_dim,
    observation_layout, observations, opponent_slots, physics_step, reset, step,
    victim_observations, write_trajectory,
)
