from subplay.attack.combine import SubpolicySet, combine_policies, load_subpolicy_set, save_subpolicy_set
from subplay.attack.dissemination import BufferSet, DisseminationTable, build_dissemination_table, route_transition
from subplay.attack.loop import AttackConfig, AttackResult, run_attack
from subplay.attack.meritocracy import meritocracy_round, retain_if_better, train_subpolicies
from subplay.attack.occupancy import (
    OccupancyVector, binomial_rates, occupancy_dynamic_observation, occupancy_static_estimation,
    occupancy_static_observation,
)
