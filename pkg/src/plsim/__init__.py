"""plsim: deterministic simulator for a rover proof-of-life soil sampling module.

The mission controller sequences a pulley-deployed drill, a vacuum sampler and
two colorimetric assays (Biuret for protein, Benedict for reducing sugar) over
a synthetic soil world, and records everything as NDJSON telemetry.
"""

from .config import MissionConfig, load_config
from .errors import (
    AssayError,
    ConfigurationError,
    EncodingError,
    ParseError,
    PlsimError,
    StreamIntegrityError,
)
from .mission import MissionPhase, run_mission
from .report import MissionReport
from .world import World, generate_sites, load_scenario

__version__ = "0.1.0"

__all__ = [
    "AssayError",
    "ConfigurationError",
    "EncodingError",
    "MissionConfig",
    "MissionPhase",
    "MissionReport",
    "ParseError",
    "PlsimError",
    "StreamIntegrityError",
    "World",
    "generate_sites",
    "load_config",
    "load_scenario",
    "run_mission",
]
