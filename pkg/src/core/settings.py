# src/core/settings.py

import copy
import json
import logging
import os

logger = logging.getLogger(__name__)

_DEFAULT_SETTINGS = {
    "sieve": {
        "limit": 1_000_000,
        "euler_cutoff": 1_000_000,
    },
    "solver": {
        "damping": 0.5,
        "tol": 1e-10,
        "level_tol": 1e-9,
        "max_iter": 20000,
        "lambda_window": [-50.0, 50.0],
        "restarts": 8,
        "max_states": 2 ** 24,
        "mixed_max_states": 2 ** 20,
        "direct_max_states": 2 ** 10,
    },
    "run": {
        "threads": 1,
        "output_dir": "reports",
        "format": "csv",
    },
}

OUTPUT_DIR_ENV = "GCDLAB_OUTPUT_DIR"


class SettingsManager:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(SettingsManager, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self.config_path = os.path.join("config", "settings.json")
        self.sieve = dict(_DEFAULT_SETTINGS["sieve"])
        self.solver = dict(_DEFAULT_SETTINGS["solver"])
        self.run = dict(_DEFAULT_SETTINGS["run"])
        self.load_config()
        self._initialized = True

    @classmethod
    def reset(cls):
        """Drop the singleton so the next access re-reads the config file."""
        cls._instance = None

    def load_config(self):
        if not os.path.exists(self.config_path):
            return
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            logger.warning("Error loading settings from %s: %s", self.config_path, e)
            return

        # Unknown keys are ignored so older files keep loading.
        for section in ("sieve", "solver", "run"):
            stored = data.get(section, {})
            current = getattr(self, section)
            for key in current:
                if key in stored:
                    current[key] = stored[key]

    def save_config(self, **sections):
        for section, values in sections.items():
            if section not in _DEFAULT_SETTINGS:
                raise KeyError(f"Unknown settings section: {section}")
            getattr(self, section).update(values)

        data = {
            "sieve": self.sieve,
            "solver": self.solver,
            "run": self.run,
        }
        try:
            os.makedirs(os.path.dirname(self.config_path), exist_ok=True)
            with open(self.config_path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=4)
            return True
        except OSError as e:
            logger.error("Error saving settings: %s", e)
            return False

    @property
    def output_dir(self):
        return os.environ.get(OUTPUT_DIR_ENV) or self.run["output_dir"]

    def as_dict(self):
        return copy.deepcopy({"sieve": self.sieve, "solver": self.solver, "run": self.run})
