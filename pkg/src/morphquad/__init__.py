"""Morphing-quadrotor simulation library.

Subpackages cover arm/mass-property geometry, rotor maps and control
allocation, morphology optimization, online mass estimation, the cascaded
flight controller, and the 6-DOF scenario simulator.
"""

from .geometry import (
    AirframeParams,
    GRAVITY,
    MassProperties,
    Morphology,
    MorphologyError,
    PayloadSpec,
    compose_mass_properties,
    infer_payload_position,
    rotor_positions,
    x_config,
)
from .rotor import (
    AllocationError,
    RotorThrusts,
    WrenchSetpoint,
    allocation_matrix,
    hover_thrusts,
    speeds_to_thrusts,
    thrust_to_power,
    thrusts_to_speeds,
    wrench_to_thrusts,
)
from .morphology_opt import (
    MorphObjectives,
    MorphOptResult,
    OptimizationError,
    OptimizerSettings,
    controllability_factor,
    efficiency_factor,
    morph_objectives,
    optimize_morphology,
    sweep_cog_table,
)

__all__ = [
    "AirframeParams",
    "AllocationError",
    "GRAVITY",
    "MassProperties",
    "MorphObjectives",
    "MorphOptResult",
    "Morphology",
    "MorphologyError",
    "OptimizationError",
    "OptimizerSettings",
    "PayloadSpec",
    "RotorThrusts",
    "WrenchSetpoint",
    "allocation_matrix",
    "compose_mass_properties",
    "controllability_factor",
    "efficiency_factor",
    "hover_thrusts",
    "infer_payload_position",
    "morph_objectives",
    "optimize_morphology",
    "rotor_positions",
    "speeds_to_thrusts",
    "sweep_cog_table",
    "thrust_to_power",
    "thrusts_to_speeds",
    "wrench_to_thrusts",
    "x_config",
]

__version__ = "0.1.0"
