"""Online estimation of mass, CoG and inertia from commanded rotor thrusts.

Near hover the collective thrust carries the weight and the thrust-weighted
rotor position sits over the center of gravity, so the commanded thrusts
(the only "measurement" the real system has of its own lift) expose the mass
and planar CoG directly.  A hover gate rejects samples taken while the craft
is accelerating, tilted or rotating, and a first-order low-pass smooths the
raw values.  The CoG height is never observable this way and stays at the
airframe's nominal value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GRAVITY,
    MassProperties,
    PayloadSpec,
    compose_mass_properties,
    infer_payload_position,
)


@dataclass
class EstimatorSettings:
    tau: float = 0.5               # low-pass time constant, s
    tilt_max: float = np.deg2rad(15.0)
    omega_max: float = 0.2         # rad/s
    accel_max: float = 0.3         # m/s^2 of inertial acceleration
    velocity_tau: float = 0.2      # velocity smoothing before differencing
    accel_tau: float = 0.5         # smoothing on the finite-difference accel
    confidence_min: float = 0.0    # gate passes when confidence exceeds this
    payload_detect_mass: float = 0.01   # kg below which no payload is assumed


@dataclass
class EstimatorState:
    """Filtered estimates plus the filter memory needed between updates."""

    m_hat: float
    cog_xy_hat: np.ndarray
    hover_confidence: float = 0.0
    v_filt: np.ndarray | None = None
    accel_filt: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def snapshot(self):
        return EstimatorState(
            m_hat=self.m_hat,
            cog_xy_hat=self.cog_xy_hat.copy(),
            hover_confidence=self.hover_confidence,
            v_filt=None if self.v_filt is None else self.v_filt.copy(),
            accel_filt=self.accel_filt.copy(),
        )


class MassEstimator:
    """Single-writer estimator: one update() per control tick, snapshots out."""

    def __init__(self, params, settings=None):
        self.params = params
        self.settings = settings if settings is not None else EstimatorSettings()
        self.state = EstimatorState(
            m_hat=params.dry_mass,
            cog_xy_hat=np.zeros(2),
        )

    def reset(self):
        self.state = EstimatorState(m_hat=self.params.dry_mass,
                                    cog_xy_hat=np.zeros(2))

    def update(self, f_commanded, positions, state, dt):
        """Fold one tick of commanded thrusts into the estimates.

        ``positions`` are the current rotor x/y (4x2) from the measured arm
        angles; ``state`` supplies attitude, angular rate and velocity for
        the hover gate.  When the gate fails the estimates hold.  Returns a
        snapshot of the estimator state.
        """
        s = self.settings
        est = self.state
        f = np.asarray(f_commanded, dtype=float)

        # acceleration for the gate: smooth the velocity, difference it, then
        # smooth again; raw differencing would amplify sensor noise far past
        # the gate threshold
        if est.v_filt is None or dt <= 0.0:
            est.v_filt = state.v.copy()
            accel = np.zeros(3)
        else:
            alpha_v = 1.0 - np.exp(-dt / s.velocity_tau)
            v_new = est.v_filt + alpha_v * (state.v - est.v_filt)
            accel = (v_new - est.v_filt) / dt
            est.v_filt = v_new
        alpha_a = 1.0 - np.exp(-dt / s.accel_tau) if dt > 0 else 1.0
        est.accel_filt += alpha_a * (accel - est.accel_filt)

        tilt = state.tilt()
        omega_mag = float(np.linalg.norm(state.omega))
        accel_mag = float(np.linalg.norm(est.accel_filt))
        margins = np.array([
            1.0 - tilt / s.tilt_max,
            1.0 - omega_mag / s.omega_max,
            1.0 - accel_mag / s.accel_max,
        ])
        est.hover_confidence = float(np.clip(margins.min(), 0.0, 1.0))

        if est.hover_confidence > s.confidence_min:
            total = float(np.sum(f))
            if total > 1e-9:
                m_raw = total / GRAVITY
                cog_raw = (positions[:, :2] * f[:, None]).sum(axis=0) / total
                alpha = 1.0 - np.exp(-dt / s.tau) if dt > 0 else 1.0
                est.m_hat += alpha * (m_raw - est.m_hat)
                est.cog_xy_hat += alpha * (cog_raw - est.cog_xy_hat)
        return est.snapshot()

    def payload_mass(self):
        """Estimated payload mass, clamped at zero for noise below dry mass."""
        return max(0.0, self.state.m_hat - self.params.dry_mass)

    def mass_properties(self, morph):
        """Full MassProperties consistent with the current estimates.

        The composite inertia comes from reassembling the airframe with the
        inferred payload (mounted where the estimated CoG says it must be,
        modeled as the default uniform cube).  Below the detection threshold
        the dry airframe is returned with the estimated CoG substituted.
        """
        params = self.params
        m_load = self.payload_mass()
        cog = np.array([*self.state.cog_xy_hat, params.z_cog_nominal])
        if m_load < self.settings.payload_detect_mass:
            props = compose_mass_properties(morph, params)
            return MassProperties(m=self.state.m_hat, r_cog=cog, J=props.J)
        est_props = MassProperties(m=self.state.m_hat, r_cog=cog, J=np.eye(3))
        r_load = infer_payload_position(est_props, morph, params)
        if r_load is None:
            props = compose_mass_properties(morph, params)
            return MassProperties(m=self.state.m_hat, r_cog=cog, J=props.J)
        payload = PayloadSpec(m_load=m_load, r_load=r_load)
        return compose_mass_properties(morph, params, payload)

    def inertia_estimate(self, morph):
        """Composite inertia tensor consistent with the current estimates."""
        return self.mass_properties(morph).J
