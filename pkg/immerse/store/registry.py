"""
Registry of immersion problem presets and their named fields.
"""
import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv

from immerse.geometry.chart_manifold import FieldSource
from immerse.geometry.errors import ConfigurationError
from immerse.store.fixtures import PRESETS, ImmersionProblem

load_dotenv()

logger = logging.getLogger(__name__)

PRESET_DIR = os.getenv("IMMERSE_PRESET_DIR")


class FixtureRegistry:
    """Singleton registry that loads the built-in and user presets once."""

    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def initialize(self, preset_dir: Optional[str] = None):
        """
        Registers the built-in presets plus every JSON alias in preset_dir.

        Args:
            preset_dir: directory of {"name", "base", "params", "description"} files,
                IMMERSE_PRESET_DIR by default
        """
        if self._initialized:
            logger.warning("Registry already initialized, skipping...")
            return

        logger.info("Initializing fixture registry...")
        self.factories = dict(PRESETS)
        self.defaults: Dict[str, dict] = {name: {} for name in PRESETS}
        self.descriptions = {name: (factory.__doc__ or "").strip().splitlines()[0] for name, factory in PRESETS.items()}
        self._problems: Dict[str, ImmersionProblem] = {}

        preset_dir = preset_dir or PRESET_DIR
        if preset_dir:
            self._load_aliases(Path(preset_dir))

        self._initialized = True
        logger.info(f"Fixture registry ready with {len(self.factories)} presets")

    def _load_aliases(self, directory: Path) -> None:
        if not directory.is_dir():
            raise ConfigurationError(f"Preset directory {directory} does not exist")
        for path in sorted(directory.glob("*.json")):
            try:
                entry = json.loads(path.read_text())
                name, base = entry["name"], entry["base"]
            except (OSError, ValueError, KeyError) as e:
                logger.error(f"Error reading preset {path}: {e}")
                raise ConfigurationError(f"Invalid preset file {path}: {e}") from e
            if base not in PRESETS:
                raise ConfigurationError(f"Preset {name!r} extends unknown preset {base!r}")
            self.factories[name] = PRESETS[base]
            self.defaults[name] = dict(entry.get("params", {}))
            self.descriptions[name] = entry.get("description", self.descriptions[base])
            logger.debug(f"Registered preset {name!r} from {path.name}")

    def reset(self) -> None:
        self._initialized = False
        self.initialize()

    def _require(self):
        if not self._initialized:
            self.initialize()

    def names(self) -> list:
        self._require()
        return sorted(self.factories)

    def build(self, name: str, params: Optional[dict] = None) -> ImmersionProblem:
        """Preset problem with its registered defaults overridden by params."""
        self._require()
        if name not in self.factories:
            raise ConfigurationError(f"Unknown preset {name!r}; available: {', '.join(self.names())}")
        merged = {**self.defaults[name], **(params or {})}
        key = f"{name}:{json.dumps(merged, sort_keys=True, default=str)}"
        if key not in self._problems:
            try:
                problem = self.factories[name](**merged)
            except TypeError as e:
                raise ConfigurationError(f"Bad parameters for preset {name!r}: {e}") from e
            self._problems[key] = problem
            logger.debug(f"Built preset {name!r} with {merged}")
        return self._problems[key]

    def field(self, ref: str, params: Optional[dict] = None) -> FieldSource:
        """Named field 'preset.field', e.g. 'unit_sphere.metric'."""
        preset, _, field_name = ref.partition(".")
        problem = self.build(preset, params)
        if field_name not in problem.fields:
            raise ConfigurationError(f"Preset {preset!r} has no field {field_name!r}; "
                                     f"available: {', '.join(sorted(problem.fields))}")
        return problem.fields[field_name]

    def describe(self) -> list:
        self._require()
        return [{"name": name, "description": self.descriptions[name], "params": self.defaults[name]}
                for name in self.names()]
