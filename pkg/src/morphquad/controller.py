"""Cascaded position / attitude / rate control and thrust allocation.

The pipeline is position PID -> desired attitude + collective -> quaternion
attitude P -> body-rate PID -> per-rotor speed allocation.  Every stage is
parameterized by the mass properties handed in each tick, so feeding
estimated values makes the controller adaptive and feeding fixed nominal
values reproduces a conventional controller.

Derivative terms act on measurements rather than errors to avoid setpoint
kick; both integrators are clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .geometry import GRAVITY
from .rotor import AllocationError, DEFAULT_COND_LIMIT


@dataclass
class ControllerGains:
    """PID gains; position gains are N per (m, m/s, m s), attitude/rate gains
    act through the inertia tensor.  ``max_tilt`` caps how far the position
    loop may command the thrust axis away from vertical (None disables)."""

    k_pp: float = 9.0
    k_dp: float = 8.0
    k_ip: float = 2.0
    k_a: float = 12.0
    k_pr: float = 40.0
    k_dr: float = 0.05
    k_ir: float = 60.0
    pos_int_limit_xy: float = 2.0  # N of lateral integral authority per axis
    pos_int_limit_z: float = 8.0   # N of vertical integral authority
    rate_int_limit: float = 1.5    # rad of integrated rate error per axis
    max_tilt: float | None = np.deg2rad(35.0)

    def __post_init__(self):
        gains = (self.k_pp, self.k_dp, self.k_ip, self.k_a,
                 self.k_pr, self.k_dr, self.k_ir)
        if any(g < 0 for g in gains):
            raise ValueError("gains must be nonnegative")
        if min(self.pos_int_limit_xy, self.pos_int_limit_z, self.rate_int_limit) <= 0:
            raise ValueError("integrator limits must be positive")


@dataclass
class Setpoint:
    p_des: np.ndarray
    yaw_des: float = 0.0
    v_ff: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.p_des = np.asarray(self.p_des, dtype=float)
        self.v_ff = np.asarray(self.v_ff, dtype=float)
        if not (np.all(np.isfinite(self.p_des)) and np.isfinite(self.yaw_des)):
            raise ValueError("setpoint must be finite")


@dataclass
class AttitudeCmd:
    q_des: np.ndarray
    Fz_des: float


@dataclass
class SaturationReport:
    """What the allocator had to give up to keep rotor speeds realizable."""

    active: bool = False
    yaw_scale: float = 1.0         # fraction of the yaw moment kept
    collective_delta: float = 0.0  # N added to or removed from the collective
    clipped_rotors: tuple = ()     # rotors clamped as a last resort


GRAVITY_VEC = np.array([0.0, 0.0, GRAVITY])   # z-down inertial frame


class CascadedController:
    """Holds integrator and measurement memory between ticks."""

    def __init__(self, gains=None):
        self.gains = gains if gains is not None else ControllerGains()
        self.reset()

    def reset(self):
        self._pos_integral = np.zeros(3)
        self._rate_integral = np.zeros(3)
        self._prev_omega = None
        self._prev_attitude = None

    # -- position loop ------------------------------------------------------

    def position_control(self, sp, state, m, dt):
        """Inertial force the craft must produce to track the setpoint.

        PID on position error plus gravity compensation; at rest with zero
        error this is the pure weight-cancelling force (0, 0, -m g).
        """
        g = self.gains
        p_err = sp.p_des - state.p
        v_err = sp.v_ff - state.v          # derivative on measurement
        self._pos_integral += p_err * dt
        k = max(g.k_ip, 1e-9)
        lim = np.array([g.pos_int_limit_xy, g.pos_int_limit_xy, g.pos_int_limit_z]) / k
        np.clip(self._pos_integral, -lim, lim, out=self._pos_integral)
        return (g.k_pp * p_err + g.k_dp * v_err + g.k_ip * self._pos_integral
                - m * GRAVITY_VEC)

    # -- attitude construction ---------------------------------------------

    def desired_attitude(self, F_des, yaw_des, eps_f=1e-6, eps_parallel=1e-9):
        """Attitude whose thrust axis carries F_des, plus the collective.

        The desired body-z direction is -F_des normalized (thrust acts along
        -z of the body), rotated onto from the inertial z axis by the minimal
        rotation, then yawed about the body z axis so the thrust direction is
        preserved exactly for any yaw.  Near the antiparallel singularity the
        fallback is a half turn about x.

        Returns None when the force demand is too small to define a
        direction; the caller should hold the previous attitude.
        """
        F_des = np.asarray(F_des, dtype=float)
        norm = float(np.linalg.norm(F_des))
        if norm <= eps_f:
            return None
        b3 = -F_des / norm
        Fz_des = norm
        max_tilt = self.gains.max_tilt
        if max_tilt is not None and b3[2] < np.cos(max_tilt):
            # cap the commanded tilt, preserving heading and vertical force
            horiz = np.hypot(b3[0], b3[1])
            if horiz > 1e-12:
                scale = np.sin(max_tilt) / horiz
                b3 = np.array([b3[0] * scale, b3[1] * scale, np.cos(max_tilt)])
            else:
                b3 = np.array([0.0, 0.0, 1.0])
            Fz_des = max(0.0, float(-np.dot(F_des, b3)))
        e_z = np.array([0.0, 0.0, 1.0])
        c = float(np.dot(e_z, b3))
        if 1.0 + c < eps_parallel:
            R0 = np.diag([1.0, -1.0, -1.0])    # half turn about x
        else:
            v = np.cross(e_z, b3)
            V = np.array([[0.0, -v[2], v[1]],
                          [v[2], 0.0, -v[0]],
                          [-v[1], v[0], 0.0]])
            R0 = np.eye(3) + V + V @ V / (1.0 + c)
        c_y, s_y = np.cos(yaw_des), np.sin(yaw_des)
        Rz = np.array([[c_y, -s_y, 0.0], [s_y, c_y, 0.0], [0.0, 0.0, 1.0]])
        q_des = quat.from_matrix(R0 @ Rz)
        cmd = AttitudeCmd(q_des=q_des, Fz_des=Fz_des)
        self._prev_attitude = cmd
        return cmd

    @property
    def held_attitude(self):
        return self._prev_attitude

    # -- attitude and rate loops ---------------------------------------------

    def attitude_control(self, q_des, q_hat):
        """Desired body rate from the quaternion error, shortest path."""
        q_err = quat.multiply(q_des, quat.conjugate(q_hat))
        sign = 1.0 if q_err[0] >= 0.0 else -1.0
        return self.gains.k_a * sign * q_err[1:4]

    def rate_control(self, omega_des, omega_hat, J, dt):
        """Body moment demand: inertia-shaped rate PID plus gyroscopic
        feedforward omega x J omega."""
        g = self.gains
        omega_err = omega_des - omega_hat
        if self._prev_omega is None:
            omega_dot_meas = np.zeros(3)
        else:
            omega_dot_meas = (omega_hat - self._prev_omega) / dt
        self._prev_omega = omega_hat.copy()
        self._rate_integral += omega_err * dt
        np.clip(self._rate_integral, -g.rate_int_limit, g.rate_int_limit,
                out=self._rate_integral)
        pid = (g.k_pr * omega_err - g.k_dr * omega_dot_meas
               + g.k_ir * self._rate_integral)
        Jw = J @ omega_hat
        w = omega_hat
        gyro = np.array([w[1] * Jw[2] - w[2] * Jw[1],
                         w[2] * Jw[0] - w[0] * Jw[2],
                         w[0] * Jw[1] - w[1] * Jw[0]])
        return J @ pid + gyro

    # -- allocation ----------------------------------------------------------

    def allocate(self, Fz_des, M_des, A, params, cond_limit=DEFAULT_COND_LIMIT):
        """Per-rotor squared speeds for the wrench, with saturation de-rating.

        Feasibility is restored in priority order: scale the yaw moment
        toward zero first, then move the collective, always preserving the
        roll/pitch moments; rotors are clamped element-wise only as a last
        resort.  Returns (omega_sq, thrusts, SaturationReport).
        """
        if np.linalg.cond(A) > cond_limit:
            raise AllocationError("allocation matrix is near singular")
        Ainv = np.linalg.inv(A)
        T = np.array([Fz_des, M_des[0], M_des[1], M_des[2]])
        f = Ainv @ T
        report = SaturationReport()
        f_max = params.f_max

        if np.any(f < 0.0) or np.any(f > f_max):
            report.active = True
            # stage 1: bleed off yaw moment
            f_base = Ainv @ np.array([Fz_des, M_des[0], M_des[1], 0.0])
            f_yaw = Ainv @ np.array([0.0, 0.0, 0.0, M_des[2]])
            s = _max_feasible_scale(f_base, f_yaw, f_max)
            report.yaw_scale = s
            f = f_base + s * f_yaw
            if np.any(f < -1e-12) or np.any(f > f_max + 1e-12):
                # stage 2: move the collective, keeping roll/pitch and the
                # already de-rated yaw
                f_rest = Ainv @ np.array([0.0, M_des[0], M_des[1], s * M_des[2]])
                a1 = Ainv[:, 0]
                fz = _nearest_feasible_collective(f_rest, a1, Fz_des, f_max)
                report.collective_delta = fz - Fz_des
                f = f_rest + fz * a1
            if np.any(f < -1e-12) or np.any(f > f_max + 1e-12):
                clipped = tuple(int(i) for i in np.flatnonzero((f < 0) | (f > f_max)))
                report.clipped_rotors = clipped
                f = np.clip(f, 0.0, f_max)

        f = np.clip(f, 0.0, f_max)
        return f / params.mu, f, report


def _max_feasible_scale(f_base, f_delta, f_max):
    """Largest s in [0, 1] with 0 <= f_base + s*f_delta <= f_max."""
    lo, hi = 0.0, 1.0
    for b, d in zip(f_base, f_delta):
        if abs(d) < 1e-15:
            continue
        s1 = (0.0 - b) / d
        s2 = (f_max - b) / d
        lo_i, hi_i = min(s1, s2), max(s1, s2)
        hi = min(hi, hi_i)
        lo = max(lo, lo_i)
    if hi < 0.0:
        return 0.0
    return float(np.clip(hi, 0.0, 1.0))


def _nearest_feasible_collective(f_rest, a1, Fz_des, f_max):
    """Collective closest to the demand keeping every rotor in range."""
    lo, hi = 0.0, np.inf
    for b, a in zip(f_rest, a1):
        if abs(a) < 1e-15:
            if b < 0.0 or b > f_max:
                return Fz_des   # dead direction, cannot fix: let the clip stage act
            continue
        c1 = (0.0 - b) / a
        c2 = (f_max - b) / a
        lo = max(lo, min(c1, c2))
        hi = min(hi, max(c1, c2))
    if lo > hi:
        return Fz_des
    return float(np.clip(Fz_des, lo, hi))
