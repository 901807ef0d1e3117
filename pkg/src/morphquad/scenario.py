"""Scenario specification: validation, YAML round trip, defaults.

A scenario describes one simulated flight: the airframe, the control mode,
a waypoint timeline, payload attach/drop events, rates, noise and the energy
budget.  All angles cross this boundary in degrees and are converted to
radians on load; positions are meters in the z-down inertial frame (negative
z is altitude).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .geometry import AirframeParams

SCHEMA_VERSION = 1
MODES = ("morphing", "fixed-frame", "morphing-legacy-controller")


class ScenarioError(ValueError):
    """Scenario file or dictionary fails validation; carries the field name."""


@dataclass
class Waypoint:
    t: float
    position: np.ndarray
    yaw: float = 0.0          # radians internally

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class PayloadEvent:
    t: float
    action: str               # "attach" | "drop"
    mass: float = 0.0
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class Rates:
    position_hz: float = 100.0
    attitude_hz: float = 500.0
    estimator_hz: float = 500.0
    morph_hz: float = 2.0


@dataclass
class ScenarioSpec:
    name: str = "scenario"
    mode: str = "morphing"
    duration_s: float = 30.0
    dt: float = 0.002
    seed: int = 0
    noise_sigma_pos: float = 0.0
    noise_sigma_vel: float = 0.0
    noise_sigma_omega: float = 0.0
    waypoints: list = field(default_factory=lambda: [Waypoint(0.0, np.array([0.0, 0.0, -1.5]))])
    payload_events: list = field(default_factory=list)
    energy_budget_j: float = 285000.0   # 6S 4200 mAh at 85 percent usable
    steady_window_s: float | None = None    # default: final third of the run
    rates: Rates = field(default_factory=Rates)
    airframe: AirframeParams = field(default_factory=AirframeParams)
    telemetry_csv: str | None = None
    summary_json: str | None = None

    def validate(self):
        if self.mode not in MODES:
            raise ScenarioError(f"mode: {self.mode!r} is not one of {MODES}")
        if not (0.0 < self.dt <= 0.005):
            raise ScenarioError(f"dt: {self.dt} outside (0, 0.005] s")
        if self.duration_s <= 0:
            raise ScenarioError("duration_s: must be positive")
        if self.energy_budget_j <= 0:
            raise ScenarioError("energy_budget_j: must be positive")
        if not self.waypoints:
            raise ScenarioError("waypoints: at least one required")
        ts = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ScenarioError("waypoints: timeline must be strictly increasing")
        if self.waypoints[0].t > 0:
            raise ScenarioError("waypoints: first waypoint must start at t = 0")
        ets = [e.t for e in self.payload_events]
        if any(b <= a for a, b in zip(ets, ets[1:])):
            raise ScenarioError("payload_events: timeline must be strictly increasing")
        for e in self.payload_events:
            if e.action not in ("attach", "drop"):
                raise ScenarioError(f"payload_events: unknown action {e.action!r}")
            if e.action == "attach" and e.mass <= 0:
                raise ScenarioError("payload_events: attach requires positive mass")
        for r in ("position_hz", "attitude_hz", "estimator_hz", "morph_hz"):
            if getattr(self.rates, r) <= 0:
                raise ScenarioError(f"rates.{r}: must be positive")
        return self

    @property
    def steady_window(self):
        """(t_start, t_end) of the steady-state measurement window."""
        w = self.steady_window_s
        if w is None:
            w = self.duration_s / 3.0
        return (max(0.0, self.duration_s - w), self.duration_s)


# ---------------------------------------------------------------------------
# dict / YAML conversion (degrees at the boundary)
# ---------------------------------------------------------------------------

_AIRFRAME_SCALARS = ("d", "l", "m_body", "m_arm", "arm_com_fraction", "mu",
                     "kappa", "gamma_p", "z_cog_nominal", "prop_diameter", "f_max")


def spec_to_dict(spec):
    d = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "mode": spec.mode,
        "duration_s": spec.duration_s,
        "dt_s": spec.dt,
        "seed": spec.seed,
        "noise": {
            "sigma_pos_m": spec.noise_sigma_pos,
            "sigma_vel_mps": spec.noise_sigma_vel,
            "sigma_omega_radps": spec.noise_sigma_omega,
        },
        "waypoints": [
            {"t_s": w.t, "position_m": [float(x) for x in w.position],
             "yaw_deg": float(np.rad2deg(w.yaw))}
            for w in spec.waypoints
        ],
        "payload_events": [
            {"t_s": e.t, "action": e.action, "mass_kg": e.mass,
             "position_m": [float(x) for x in e.position]}
            for e in spec.payload_events
        ],
        "energy_budget_j": spec.energy_budget_j,
        "rates_hz": {
            "position": spec.rates.position_hz,
            "attitude": spec.rates.attitude_hz,
            "estimator": spec.rates.estimator_hz,
            "morphology": spec.rates.morph_hz,
        },
        "airframe": _airframe_to_dict(spec.airframe),
    }
    if spec.steady_window_s is not None:
        d["steady_window_s"] = spec.steady_window_s
    if spec.telemetry_csv:
        d["telemetry_csv"] = spec.telemetry_csv
    if spec.summary_json:
        d["summary_json"] = spec.summary_json
    return d


def _airframe_to_dict(p):
    d = {k: float(getattr(p, k)) for k in _AIRFRAME_SCALARS}
    d["theta_min_deg"] = float(np.rad2deg(p.theta_min))
    d["theta_max_deg"] = float(np.rad2deg(p.theta_max))
    d["J_body_cm"] = [[float(v) for v in row] for row in p.J_body_cm]
    d["J_arm_cm"] = [[float(v) for v in row] for row in p.J_arm_cm]
    d["r_body_m"] = [float(v) for v in p.r_body]
    return d


def _airframe_from_dict(d):
    kwargs = {k: float(d[k]) for k in _AIRFRAME_SCALARS if k in d}
    if "theta_min_deg" in d:
        kwargs["theta_min"] = np.deg2rad(float(d["theta_min_deg"]))
    if "theta_max_deg" in d:
        kwargs["theta_max"] = np.deg2rad(float(d["theta_max_deg"]))
    if "J_body_cm" in d:
        kwargs["J_body_cm"] = np.array(d["J_body_cm"], dtype=float)
    if "J_arm_cm" in d:
        kwargs["J_arm_cm"] = np.array(d["J_arm_cm"], dtype=float)
    if "r_body_m" in d:
        kwargs["r_body"] = np.array(d["r_body_m"], dtype=float)
    try:
        return AirframeParams(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"airframe: {exc}") from exc


_TOP_LEVEL_KEYS = {
    "schema_version", "name", "mode", "duration_s", "dt_s", "seed", "noise",
    "waypoints", "payload_events", "energy_budget_j", "rates_hz", "airframe",
    "steady_window_s", "telemetry_csv", "summary_json",
}


def spec_from_dict(d, base_dir="."):
    if not isinstance(d, dict):
        raise ScenarioError("scenario: top level must be a mapping")
    unknown = set(d) - _TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError(f"scenario: unknown keys {sorted(unknown)}")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    if "mode" not in d:
        raise ScenarioError("mode: required")

    waypoints = []
    for i, w in enumerate(d.get("waypoints", [])):
        try:
            waypoints.append(Waypoint(
                t=float(w["t_s"]),
                position=np.array(w["position_m"], dtype=float),
                yaw=np.deg2rad(float(w.get("yaw_deg", 0.0))),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"waypoints[{i}]: {exc}") from exc
    events = []
    for i, e in enumerate(d.get("payload_events", [])):
        try:
            events.append(PayloadEvent(
                t=float(e["t_s"]),
                action=str(e["action"]),
                mass=float(e.get("mass_kg", 0.0)),
                position=np.array(e.get("position_m", [0.0, 0.0, 0.0]), dtype=float),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"payload_events[{i}]: {exc}") from exc

    noise = d.get("noise", {})
    rates_in = d.get("rates_hz", {})
    rates = Rates(
        position_hz=float(rates_in.get("position", 100.0)),
        attitude_hz=float(rates_in.get("attitude", 500.0)),
        estimator_hz=float(rates_in.get("estimator", 500.0)),
        morph_hz=float(rates_in.get("morphology", 2.0)),
    )
    # the airframe entry is either inline values or a reference to a YAML file
    airframe = AirframeParams()
    if "airframe" in d:
        entry = d["airframe"]
        if isinstance(entry, str):
            path = entry if os.path.isabs(entry) else os.path.join(base_dir, entry)
            if not os.path.exists(path):
                raise ScenarioError(f"airframe: referenced file not found: {entry}")
            with open(path) as fh:
                try:
                    entry = yaml.safe_load(fh)
                except yaml.YAMLError as exc:
                    raise ScenarioError(f"airframe: invalid YAML: {exc}") from exc
        if not isinstance(entry, dict):
            raise ScenarioError("airframe: must be a mapping or a file path")
        airframe = _airframe_from_dict(entry)

    spec = ScenarioSpec(
        name=str(d.get("name", "scenario")),
        mode=str(d["mode"]),
        duration_s=float(d.get("duration_s", 30.0)),
        dt=float(d.get("dt_s", 0.002)),
        seed=int(d.get("seed", 0)),
        noise_sigma_pos=float(noise.get("sigma_pos_m", 0.0)),
        noise_sigma_vel=float(noise.get("sigma_vel_mps", 0.0)),
        noise_sigma_omega=float(noise.get("sigma_omega_radps", 0.0)),
        waypoints=waypoints if waypoints else None,
        payload_events=events,
        energy_budget_j=float(d.get("energy_budget_j", 285000.0)),
        steady_window_s=(float(d["steady_window_s"]) if "steady_window_s" in d else None),
        rates=rates,
        airframe=airframe,
        telemetry_csv=d.get("telemetry_csv"),
        summary_json=d.get("summary_json"),
    )
    if spec.waypoints is None:
        spec.waypoints = [Waypoint(0.0, np.array([0.0, 0.0, -1.5]))]
    return spec.validate()


def load_scenario(path):
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"invalid YAML: {exc}") from exc
    return spec_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def save_scenario(spec, path):
    with open(path, "w") as fh:
        yaml.safe_dump(spec_to_dict(spec), fh, sort_keys=False)
