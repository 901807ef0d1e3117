"""Canonical experiment scenarios.

These mirror the hardware protocol the simulation reproduces: a payload
mounted at a given offset before "release", a mid-flight grasp-and-drop
task, and the offset sweep used for the flight-time comparison.  The hover
scenarios start at the setpoint with the motors at the dry-craft hover
throttle, so every mode has to absorb the unannounced payload on its own.
"""

from __future__ import annotations

import numpy as np

from .scenario import PayloadEvent, ScenarioSpec, Waypoint

HOVER_ALT = -3.0          # z-down: 3 m above ground
PAYLOAD_MASS = 1.0        # kg, about half the dry craft weight

# mocap/EKF-grade state noise used by the robustness scenarios
NOISE = {
    "noise_sigma_pos": 0.003,
    "noise_sigma_vel": 0.10,
    "noise_sigma_omega": 0.005,
}

DIRECTIONS = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "xy": np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0),
}


def payload_hover(mode, offset, direction="y", mass=PAYLOAD_MASS,
                  duration=30.0, noisy=False, seed=1, steady_window_s=10.0):
    """Hover hold with a payload mounted at ``offset`` meters from center."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {sorted(DIRECTIONS)}")
    events = []
    if mass > 0.0 and offset is not None:
        events.append(PayloadEvent(t=0.0, action="attach", mass=mass,
                                   position=DIRECTIONS[direction] * offset))
    kwargs = dict(NOISE) if noisy else {}
    return ScenarioSpec(
        name=f"hover_{mode}_{direction}{int(round((offset or 0) * 100))}cm",
        mode=mode,
        duration_s=duration,
        seed=seed,
        waypoints=[Waypoint(0.0, np.array([0.0, 0.0, HOVER_ALT]))],
        payload_events=events,
        steady_window_s=steady_window_s,
        **kwargs,
    )


def grasp_drop(mode="morphing", mass=0.5, offset=0.20, direction="y",
               t_grasp=10.0, t_drop=25.0, duration=45.0, noisy=False, seed=1):
    """Mid-flight grasp of an object at ``offset`` and later release."""
    return ScenarioSpec(
        name=f"grasp_drop_{mode}",
        mode=mode,
        duration_s=duration,
        seed=seed,
        waypoints=[Waypoint(0.0, np.array([0.0, 0.0, HOVER_ALT]))],
        payload_events=[
            PayloadEvent(t=t_grasp, action="attach", mass=mass,
                         position=DIRECTIONS[direction] * offset),
            PayloadEvent(t=t_drop, action="drop"),
        ],
        steady_window_s=10.0,
        **(dict(NOISE) if noisy else {}),
    )


SWEEP_OFFSETS = (0.0, 0.05, 0.10, 0.15, 0.20)
SWEEP_DIRECTIONS = ("x", "y", "xy")
SWEEP_MODES = ("morphing", "fixed-frame")


def sweep_grid(offsets=SWEEP_OFFSETS, directions=SWEEP_DIRECTIONS,
               modes=SWEEP_MODES, duration=30.0, noisy=False, seed=1):
    """The full offset x direction x mode experiment matrix."""
    cells = []
    for mode in modes:
        for direction in directions:
            for offset in offsets:
                cells.append(payload_hover(mode, offset, direction,
                                           duration=duration, noisy=noisy,
                                           seed=seed))
    return cells
