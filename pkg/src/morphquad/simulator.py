"""6-DOF rigid-body simulation of the morphing quadrotor.

The integrated state carries body-origin kinematics (position, velocity,
attitude quaternion, body rates) together with the actuator states (four
first-order thrust lags and four slew-limited arm angles).  Forces and
moments come from the rotor thrusts acting along -z of the body, with
moments taken about the true instantaneous center of gravity; rotations use
the true composite inertia, recomputed every step as the arms move (the
dJ/dt term is neglected, consistent with the slow arm slew).

The scenario runner closes the loop: estimator, morphology optimizer and the
cascaded controller run at their configured rates against the simulated
truth (optionally noise-injected), with payload attach/drop events, energy
bookkeeping and crash detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .controller import AttitudeCmd, CascadedController, ControllerGains, Setpoint
from .estimator import MassEstimator
from .geometry import (
    GRAVITY,
    Morphology,
    PayloadSpec,
    _rotor_positions_unchecked,
    compose_mass_properties,
    rotor_positions,
    x_config,
)
from .morphology_opt import OptimizationError, OptimizerSettings, optimize_morphology
from .rotor import YAW_SIGNS, AllocationError, allocation_matrix
from .telemetry import TelemetryLog

TAU_MOTOR = 0.030        # thrust first-order lag, s
ARM_SLEW = 3.0           # arm servo rate limit, rad/s
ARM_SERVO_GAIN = 20.0    # servo tracking bandwidth below the slew limit, 1/s
CRASH_TILT = np.deg2rad(60.0)
GROUND_Z = -0.02         # z-down: crossing this means ground contact


class SimulationDiverged(RuntimeError):
    """State became non-finite or left any plausible flight envelope."""


def _cross(a, b):
    # np.cross has high call overhead for length-3 operands
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@dataclass
class RigidBodyState:
    p: np.ndarray
    v: np.ndarray
    q: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.q = quat.normalize(np.asarray(self.q, dtype=float))
        self.omega = np.asarray(self.omega, dtype=float)

    def tilt(self):
        return quat.tilt_angle(self.q)

    def copy(self):
        return RigidBodyState(self.p.copy(), self.v.copy(),
                              self.q.copy(), self.omega.copy())


@dataclass
class ActuatorState:
    f: np.ndarray            # realized rotor thrusts, N
    arm: np.ndarray          # realized arm angles, rad

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.arm = np.asarray(self.arm, dtype=float)

    def copy(self):
        return ActuatorState(self.f.copy(), self.arm.copy())


@dataclass
class EnergyAccount:
    usable: float
    consumed: float = 0.0

    @property
    def exhausted(self):
        return self.consumed >= self.usable

    def add(self, power_prev, power_now, dt):
        # trapezoidal integration of electrical power
        self.consumed += 0.5 * (power_prev + power_now) * dt


def rotor_power(f, params):
    return float(np.sum(params.gamma_p * np.maximum(f, 0.0) ** 1.5))


def step(state, actuators, f_cmd, arm_cmd, mass_props, params, dt,
         tau_motor=TAU_MOTOR, arm_slew=ARM_SLEW, arm_servo_gain=ARM_SERVO_GAIN):
    """One RK4 step of the coupled rigid-body and actuator dynamics.

    Commands are held constant across the step (zero-order hold); the mass
    properties are the true composite values at the start of the step.
    Returns (state, actuators) with the quaternion renormalized.

    Raises SimulationDiverged on non-finite results.
    """
    if not 0.0 < dt <= 0.005:
        raise ValueError("dt must be in (0, 5 ms]")
    m = mass_props.m
    cog = mass_props.r_cog
    J = mass_props.J
    J_inv = np.linalg.inv(J)
    km = params.kappa / params.mu
    f_cmd = np.clip(np.asarray(f_cmd, dtype=float), 0.0, params.f_max)
    arm_cmd = np.clip(np.asarray(arm_cmd, dtype=float), params.theta_min, params.theta_max)

    y0 = np.concatenate([state.p, state.v, state.q, state.omega,
                         actuators.f, actuators.arm])

    def deriv(y):
        v = y[3:6]
        q = y[6:10]
        w = y[10:13]
        f = y[13:17]
        arm = y[17:21]
        R = quat.to_matrix(q)
        pos = _rotor_positions_unchecked(arm, params)
        relx = pos[:, 0] - cog[0]
        rely = pos[:, 1] - cog[1]
        M = np.array([
            -float(rely @ f),
            float(relx @ f),
            km * float(YAW_SIGNS @ f),
        ])
        thrust = -float(np.sum(f)) / m
        a_cog = R[:, 2] * thrust
        a_cog[2] += GRAVITY
        Jw = J @ w
        w_dot = J_inv @ (M - _cross(w, Jw))
        # origin acceleration lags the CoG by the frame-offset coupling
        a_origin = a_cog - R @ (_cross(w_dot, cog) + _cross(w, _cross(w, cog)))
        qw, qx, qy, qz = q
        wx, wy, wz = w
        q_dot = 0.5 * np.array([
            -qx * wx - qy * wy - qz * wz,
            qw * wx + qy * wz - qz * wy,
            qw * wy - qx * wz + qz * wx,
            qw * wz + qx * wy - qy * wx,
        ])
        f_dot = (f_cmd - f) / tau_motor
        arm_dot = np.clip(arm_servo_gain * (arm_cmd - arm), -arm_slew, arm_slew)
        return np.concatenate([v, a_origin, q_dot, w_dot, f_dot, arm_dot])

    k1 = deriv(y0)
    k2 = deriv(y0 + 0.5 * dt * k1)
    k3 = deriv(y0 + 0.5 * dt * k2)
    k4 = deriv(y0 + dt * k3)
    y = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(y)):
        raise SimulationDiverged("non-finite state after step")

    new_state = RigidBodyState(p=y[0:3], v=y[3:6], q=quat.normalize(y[6:10]),
                               omega=y[10:13])
    new_act = ActuatorState(
        f=np.clip(y[13:17], 0.0, params.f_max),
        arm=np.clip(y[17:21], params.theta_min, params.theta_max),
    )
    return new_state, new_act


# ---------------------------------------------------------------------------
# scenario runner
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    summary: dict
    telemetry: TelemetryLog
    spec: object = None


class ScenarioRunner:
    """Executes one scenario: events, control loops, integration, metrics."""

    def __init__(self, spec, gains=None, optimizer_settings=None):
        spec.validate()
        self.spec = spec
        self.params = spec.airframe
        self.gains = gains if gains is not None else ControllerGains()
        if optimizer_settings is None:
            # capped per-refresh budget: each refresh warm-starts from the
            # current arms, so optimization continues across refreshes
            optimizer_settings = OptimizerSettings(max_iters=150, polish_iters=40,
                                                   stall_window=15)
        self.opt_settings = optimizer_settings
        self.rng = np.random.default_rng(spec.seed)

    def run(self):
        spec = self.spec
        params = self.params
        dt = spec.dt
        n_steps = int(round(spec.duration_s / dt))
        adaptive = spec.mode == "morphing"
        arms_morph = spec.mode in ("morphing", "morphing-legacy-controller")

        controller = CascadedController(self.gains)
        estimator = MassEstimator(params)
        x_theta = x_config().theta
        nominal_props = compose_mass_properties(x_config(), params)
        nominal_positions = rotor_positions(x_config(), params)
        A_nominal = allocation_matrix(nominal_positions, np.zeros(3), params)

        state = RigidBodyState(
            p=spec.waypoints[0].position.copy(),
            v=np.zeros(3), q=quat.IDENTITY.copy(), omega=np.zeros(3),
        )
        # released at the dry-craft hover throttle, as on a bench start
        actuators = ActuatorState(
            f=np.full(4, params.dry_mass * GRAVITY / 4.0),
            arm=x_theta.copy(),
        )
        energy = EnergyAccount(usable=spec.energy_budget_j)
        log = TelemetryLog()

        payload = None
        event_idx = 0
        wp_idx = 0
        arm_cmd = x_theta.copy()
        f_cmd = actuators.f.copy()
        F_des = None
        att_cmd = None
        M_des = np.zeros(3)
        sat = None

        att_period = 1.0 / spec.rates.attitude_hz
        pos_period = 1.0 / spec.rates.position_hz
        est_period = 1.0 / spec.rates.estimator_hz
        morph_period = 1.0 / spec.rates.morph_hz
        next_att = 0.0
        next_pos = 0.0
        next_est = 0.0
        next_morph = 0.0
        last_opt_props = None
        opt_converged = True
        ctrl_props = nominal_props
        est_snapshot = estimator.state.snapshot()
        est_props = estimator.mass_properties(Morphology(actuators.arm))
        _est_arm_key = actuators.arm.copy()
        _true_cache_key = None
        true_props = None
        noisy = (spec.noise_sigma_pos > 0 or spec.noise_sigma_vel > 0
                 or spec.noise_sigma_omega > 0)

        crash_reason = None
        power_prev = rotor_power(actuators.f, params)
        t_end = 0.0
        eps = 1e-9

        for k in range(n_steps):
            t = k * dt
            t_end = t + dt

            # payload events
            while event_idx < len(spec.payload_events) and spec.payload_events[event_idx].t <= t + eps:
                ev = spec.payload_events[event_idx]
                payload = (PayloadSpec(m_load=ev.mass, r_load=ev.position.copy())
                           if ev.action == "attach" else None)
                event_idx += 1
            while wp_idx + 1 < len(spec.waypoints) and spec.waypoints[wp_idx + 1].t <= t + eps:
                wp_idx += 1
            wp = spec.waypoints[wp_idx]

            # measured state (truth plus optional sensor noise)
            if noisy:
                meas = RigidBodyState(
                    p=state.p + self.rng.normal(0.0, spec.noise_sigma_pos, 3),
                    v=state.v + self.rng.normal(0.0, spec.noise_sigma_vel, 3),
                    q=state.q,
                    omega=state.omega + self.rng.normal(0.0, spec.noise_sigma_omega, 3),
                )
            else:
                meas = state
            arm_meas = actuators.arm
            positions_meas = _rotor_positions_unchecked(arm_meas, params)

            # estimator tick (mass properties recomposed only when the
            # estimates or the arms actually moved)
            if t + eps >= next_est:
                prev_key = (est_snapshot.m_hat, est_snapshot.cog_xy_hat[0],
                            est_snapshot.cog_xy_hat[1])
                est_snapshot = estimator.update(f_cmd, positions_meas, meas, est_period)
                key = (est_snapshot.m_hat, est_snapshot.cog_xy_hat[0],
                       est_snapshot.cog_xy_hat[1])
                if key != prev_key or est_props is None or np.any(arm_meas != _est_arm_key):
                    est_props = estimator.mass_properties(Morphology(arm_meas))
                    _est_arm_key = arm_meas.copy()
                next_est += est_period

            ctrl_props = est_props if adaptive else nominal_props

            # morphology refresh (skipped when the estimates have not moved
            # and the previous capped-budget run already converged)
            if arms_morph and t + eps >= next_morph:
                next_morph += morph_period
                if self._estimates_changed(est_props, last_opt_props) or not opt_converged:
                    try:
                        res = optimize_morphology(Morphology(arm_meas.copy()), est_props,
                                                  params, self.opt_settings)
                        arm_cmd = res.morphology.theta
                        last_opt_props = est_props
                        opt_converged = res.converged
                    except OptimizationError:
                        opt_converged = True   # unreachable CoG: hold and wait


            # control ticks
            if t + eps >= next_pos:
                F_des = controller.position_control(
                    Setpoint(wp.position, wp.yaw), meas, ctrl_props.m, pos_period)
                next_pos += pos_period
            if t + eps >= next_att and F_des is not None:
                cmd = controller.desired_attitude(F_des, wp.yaw)
                if cmd is not None:
                    att_cmd = cmd
                elif att_cmd is not None:
                    # vanishing force demand: hold the attitude, zero the thrust
                    att_cmd = AttitudeCmd(q_des=att_cmd.q_des, Fz_des=0.0)
                if att_cmd is not None:
                    omega_des = controller.attitude_control(att_cmd.q_des, meas.q)
                    M_des = controller.rate_control(omega_des, meas.omega,
                                                    ctrl_props.J, att_period)
                    if adaptive:
                        A = allocation_matrix(positions_meas, ctrl_props.r_cog, params)
                    else:
                        A = A_nominal     # conventional mixer frozen at the X frame
                    try:
                        _, f_cmd, sat = controller.allocate(att_cmd.Fz_des, M_des, A, params)
                    except AllocationError:
                        sat = None        # hold the previous command
                next_att += att_period

            # integrate truth; the composite inertia changes only with the
            # arms or the payload
            key = (actuators.arm[0], actuators.arm[1], actuators.arm[2],
                   actuators.arm[3], id(payload))
            if key != _true_cache_key:
                true_props = compose_mass_properties(actuators.arm, params, payload)
                _true_cache_key = key
            state, actuators = step(state, actuators, f_cmd, arm_cmd,
                                    true_props, params, dt)
            power_now = rotor_power(actuators.f, params)
            energy.add(power_prev, power_now, dt)
            power_prev = power_now

            # telemetry
            m_load_hat = max(0.0, est_snapshot.m_hat - params.dry_mass)
            pos_err = wp.position - state.p
            log.append((
                t_end, *state.p, *state.v, *state.q, *state.omega,
                *np.rad2deg(actuators.arm), *f_cmd, *actuators.f,
                power_now, energy.consumed,
                est_snapshot.m_hat, *est_snapshot.cog_xy_hat, m_load_hat,
                est_props.J[0, 0], est_props.J[1, 1], est_props.J[2, 2],
                est_snapshot.hover_confidence,
                (att_cmd.Fz_des if att_cmd else 0.0),
                *(M_des if att_cmd is not None else np.zeros(3)),
                *pos_err,
                1.0 if (att_cmd is not None and sat is not None and sat.active) else 0.0,
            ))

            # termination checks
            if state.tilt() > CRASH_TILT:
                crash_reason = "tilt"
                break
            if state.p[2] > GROUND_Z:
                crash_reason = "ground"
                break
            if np.linalg.norm(state.p) > 100.0:
                crash_reason = "divergence"
                break
            if energy.exhausted:
                break

        summary = self._summarize(log, crash_reason, t_end, energy, payload)
        return RunResult(summary=summary, telemetry=log, spec=spec)

    @staticmethod
    def _estimates_changed(props, last, d_m=0.005, d_cog=0.0005):
        if last is None:
            return True
        return (abs(props.m - last.m) > d_m
                or np.linalg.norm(props.r_cog[:2] - last.r_cog[:2]) > d_cog)

    def _summarize(self, log, crash_reason, t_end, energy, payload):
        spec = self.spec
        crashed = crash_reason is not None
        summary = {
            "name": spec.name,
            "mode": spec.mode,
            "seed": spec.seed,
            "completed": (not crashed) and t_end >= spec.duration_s - spec.dt,
            "crash": crashed,
            "crash_reason": crash_reason,
            "sim_time_s": round(t_end, 6),
            "energy_consumed_j": energy.consumed,
            "energy_budget_j": energy.usable,
            "energy_exhausted": energy.exhausted,
        }
        if len(log) == 0:
            summary.update({"flight_time_s": 0.0, "flight_time_reason": "no data"})
            return summary

        t = log.column("t_s")
        perr = log.columns(["pos_err_x_m", "pos_err_y_m", "pos_err_z_m"])
        err_norm = np.linalg.norm(perr, axis=1)
        summary["max_pos_err_m"] = float(err_norm.max())

        w0, w1 = spec.steady_window
        mask = (t >= w0) & (t <= w1)
        if crashed or not mask.any():
            mask = np.zeros_like(t, dtype=bool)
            mask[-max(1, len(t) // 10):] = True
        window_err = err_norm[mask]
        summary["rms_pos_err_steady_m"] = float(np.sqrt(np.mean(window_err**2)))

        f = log.columns([f"f{i}_n" for i in range(1, 5)])
        m_true = self.params.dry_mass + (payload.m_load if payload else 0.0)
        spread = (f.max(axis=1) - f.min(axis=1)) / (m_true * GRAVITY)
        summary["thrust_spread_steady_frac"] = float(spread[mask].max())
        summary["thrust_spread_final_frac"] = float(spread[-1])

        power = log.column("power_w")
        mean_power = float(power[mask].mean())
        summary["mean_hover_power_w"] = mean_power
        if crashed:
            summary["flight_time_s"] = 0.0
            summary["flight_time_reason"] = f"crash: {crash_reason}"
        elif mean_power <= 0:
            summary["flight_time_s"] = 0.0
            summary["flight_time_reason"] = "no hover power measured"
        else:
            summary["flight_time_s"] = float(energy.usable / mean_power)

        summary["m_hat_final_kg"] = float(log.column("m_hat_kg")[-1])
        summary["x_cog_hat_final_m"] = float(log.column("x_cog_hat_m")[-1])
        summary["y_cog_hat_final_m"] = float(log.column("y_cog_hat_m")[-1])
        summary["arm_final_deg"] = [float(log.column(f"arm{i}_deg")[-1]) for i in range(1, 5)]
        summary["saturation_ticks"] = int(log.column("saturated").sum())
        return summary


def run_scenario(spec, gains=None, optimizer_settings=None):
    """Validate and execute a scenario; returns a RunResult."""
    return ScenarioRunner(spec, gains=gains, optimizer_settings=optimizer_settings).run()


def flight_time(spec, gains=None):
    """Hover endurance: usable energy over mean steady hover power (seconds).

    Returns (seconds, reason); zero seconds with the reason when hover was
    never achieved (crash or empty measurement window).
    """
    result = run_scenario(spec, gains=gains)
    s = result.summary
    return s.get("flight_time_s", 0.0), s.get("flight_time_reason", "ok")
