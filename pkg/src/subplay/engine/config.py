"""Entity and environment configuration for the particle world."""

from dataclasses import dataclass, field
from enum import Enum


class Role(str, Enum):
    PREDATOR = "predator"
    PREY = "prey"
    LEADER_PREDATOR = "leader_predator"
    OBSTACLE = "obstacle"
    FOOD = "food"
    FOREST = "forest"


ENVIRONMENTS = ("predator_prey", "world_communication")


@dataclass(frozen=True)
class EntitySpec:
    role: Role
    radius: float
    max_speed: float = 0.0
    accel: float = 0.0
    collidable: bool = True
    movable: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"{self.role.value}: radius must be positive, got {self.radius}")
        if self.max_speed < 0:
            raise ValueError(f"{self.role.value}: max_speed must be >= 0, got {self.max_speed}")
        if self.movable and self.accel <= 0:
            raise ValueError(f"{self.role.value}: movable entities need accel > 0")


# MPE simple_tag conventions: predators are bigger and slower than preys.
PREDATOR = EntitySpec(Role.PREDATOR, radius=0.075, max_speed=1.0, accel=3.0, movable=True)
PREY = EntitySpec(Role.PREY, radius=0.05, max_speed=1.3, accel=4.0, movable=True)
OBSTACLE = EntitySpec(Role.OBSTACLE, radius=0.2)
FOOD = EntitySpec(Role.FOOD, radius=0.03, collidable=False)


@dataclass(frozen=True)
class EnvConfig:
    """Everything the world needs; there are no hidden globals.

    ``num_adversaries`` (M) preys are attacker-controlled, ``num_victims`` (N)
    predators are victim-controlled. In world_communication victim 0 is the
    leader predator.
    """

    num_adversaries: int = 1
    num_victims: int = 3
    environment: str = "predator_prey"
    episode_length: int = 25
    num_obstacles: int = 2
    num_foods: int = -1  # -1: M foods in world_communication, none otherwise
    damping: float = 0.25
    dt: float = 0.1
    contact_force: float = 100.0
    contact_margin: float = 0.001
    arena: float = 1.0
    bound_penalty_onset: float = 0.9
    collision_reward: float = 10.0
    food_shaping_weight: float = 0.05
    predator_shaping_weight: float = 0.0
    forest_size: float = 0.6
    gamma: float = 0.95
    predator: EntitySpec = field(default=PREDATOR)
    prey: EntitySpec = field(default=PREY)
    obstacle: EntitySpec = field(default=OBSTACLE)
    food: EntitySpec = field(default=FOOD)

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.environment!r}; expected one of {ENVIRONMENTS}")
        if self.num_adversaries < 1 or self.num_victims < 1:
            raise ValueError("need at least one adversary and one victim agent")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.num_obstacles < 0:
            raise ValueError("num_obstacles must be >= 0")
        if self.num_foods < -1:
            raise ValueError("num_foods must be >= 0 (or -1 for the default)")
        if self.environment == "predator_prey" and self.num_foods > 0:
            raise ValueError("foods exist only in world_communication")

    @property
    def foods(self) -> int:
        if self.environment != "world_communication":
            return 0
        return self.num_adversaries if self.num_foods < 0 else self.num_foods

    @property
    def has_forest(self) -> bool:
        return self.environment == "world_communication"

    @property
    def num_entities(self) -> int:
        return self.num_adversaries + self.num_victims + self.num_obstacles + self.foods
