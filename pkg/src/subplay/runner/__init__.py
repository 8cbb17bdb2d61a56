from subplay.runner.config import ConfigError, ExperimentConfig, from_dict, load_config, save_config, schema
from subplay.runner.manifest import RunManifest
