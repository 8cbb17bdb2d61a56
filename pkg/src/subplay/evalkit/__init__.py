from subplay.evalkit.evaluate import evaluate, run_episodes
from subplay.evalkit.metrics import (
    MetricsRecord, catch_rate, collision_frequency, harmonic_merit, improvement_delta,
    performance_metric, records_from_csv, records_to_csv,
)
