"""Swarm foraging simulator with gradual hardware degradation, distributed
immune-inspired fault detection, and predictive vs reactive fault resolution.
"""

from .config import ConfigError, ExperimentConfig, FaultSpec, load_config
from .geometry import ArenaSpec, ObstacleSet, build_arena, line_of_sight, raycast_distance
from .metrics import RunMetrics
from .robot import DegradationProcess, Robot, motor_power_draw, sensor_range, velocity_cap
from .simulate import Simulation, run_single

__version__ = "0.1.0"

__all__ = [
    "ArenaSpec",
    "ConfigError",
    "DegradationProcess",
    "ExperimentConfig",
    "FaultSpec",
    "ObstacleSet",
    "Robot",
    "RunMetrics",
    "Simulation",
    "build_arena",
    "line_of_sight",
    "load_config",
    "motor_power_draw",
    "raycast_distance",
    "run_single",
    "sensor_range",
    "velocity_cap",
    "__version__",
]
