"""Arm kinematics and composite mass properties of the morphing quadrotor.

The airframe is a square main body of width ``d`` with four arms of length
``l`` hinged at the body corners.  Arm ``i`` swings in the rotor plane about
the body z-axis; its angle ``theta[i]`` is measured from the arm's own zero
direction, which points along +x, +y, -x, -y for arms 1..4.  The body frame
has z pointing down, so rotor thrust acts along -z.

All units SI, all angles radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81

# Base heading of each arm's zero direction, and of its hinge corner.
_ARM_BASE = np.array([0.0, 0.5, 1.0, 1.5]) * np.pi


class MorphologyError(ValueError):
    """Arm angles outside the feasible interval or rotor disks colliding."""


def rot_z(angle):
    """3x3 rotation about the body z-axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v):
    """Skew-symmetric matrix such that skew(u) @ w == u x w."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def parallel_axis(mass, offset):
    """Inertia shift -m*[r]x^2 for a point displaced by ``offset`` from the
    reference point; always positive semidefinite."""
    d = np.asarray(offset, dtype=float)
    return mass * (np.dot(d, d) * np.eye(3) - np.outer(d, d))


def box_inertia(mass, lx, ly, lz):
    """Inertia tensor of a uniform solid box about its own center."""
    return (mass / 12.0) * np.diag([ly**2 + lz**2, lx**2 + lz**2, lx**2 + ly**2])


def rod_inertia(mass, length, radius):
    """Inertia tensor of a uniform solid cylinder with its axis along local x."""
    transverse = mass * (3.0 * radius**2 + length**2) / 12.0
    return np.diag([0.5 * mass * radius**2, transverse, transverse])


def cube_inertia(mass, side):
    """Inertia tensor of a uniform solid cube about its center."""
    return (mass * side**2 / 6.0) * np.eye(3)


@dataclass
class Morphology:
    """The four arm angles, radians."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        if self.theta.shape != (4,):
            raise ValueError(f"expected 4 arm angles, got shape {self.theta.shape}")


def x_config():
    """The symmetric X configuration (all arms at 45 degrees)."""
    return Morphology(np.full(4, np.deg2rad(45.0)))


@dataclass
class AirframeParams:
    """Static airframe description: geometry, component masses and inertias,
    rotor coefficients, and actuator/feasibility limits."""

    d: float = 0.12                  # body width, m
    l: float = 0.134                 # arm length, m
    m_body: float = 1.2              # kg
    m_arm: float = 0.2               # kg, each
    J_body_cm: np.ndarray = field(default_factory=lambda: box_inertia(1.2, 0.12, 0.12, 0.05))
    J_arm_cm: np.ndarray = field(default_factory=lambda: rod_inertia(0.2, 0.134, 0.008))
    r_body: np.ndarray = field(default_factory=lambda: np.zeros(3))
    arm_com_fraction: float = 0.5    # arm CoM location along the arm from its hinge
    mu: float = 3.4e-6               # lift coefficient, N s^2
    kappa: float = 4.59e-8           # drag torque coefficient, N m s^2
    gamma_p: float = 8.9             # power-map constant, W N^-3/2
    z_cog_nominal: float = 0.0       # m, CoG height is never estimated
    theta_min: float = np.deg2rad(-15.0)
    theta_max: float = np.deg2rad(105.0)
    prop_diameter: float = 0.1778    # 7-inch propeller, m
    f_max: float = 11.0              # per-rotor thrust limit, N

    def __post_init__(self):
        self.J_body_cm = np.asarray(self.J_body_cm, dtype=float)
        self.J_arm_cm = np.asarray(self.J_arm_cm, dtype=float)
        self.r_body = np.asarray(self.r_body, dtype=float)
        if min(self.d, self.l, self.m_body, self.m_arm, self.mu,
               self.kappa, self.gamma_p) <= 0.0:
            raise ValueError("d, l, masses, mu, kappa and gamma_p must be positive")
        for name, J in (("J_body_cm", self.J_body_cm), ("J_arm_cm", self.J_arm_cm)):
            if not np.allclose(J, J.T):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.linalg.eigvalsh(J) <= 0.0):
                raise ValueError(f"{name} must be positive definite")

    @property
    def dry_mass(self):
        return self.m_body + 4.0 * self.m_arm

    def payload_cube_inertia(self, m_load):
        """Default payload model: uniform cube whose side is half the body width."""
        return cube_inertia(m_load, self.d / 2.0)


@dataclass
class PayloadSpec:
    """A payload rigidly mounted to the body; zero mass means no payload."""

    m_load: float = 0.0
    r_load: np.ndarray = field(default_factory=lambda: np.zeros(3))
    J_load_cm: np.ndarray | None = None   # default: uniform cube of side d/2

    def __post_init__(self):
        self.r_load = np.asarray(self.r_load, dtype=float)
        if self.m_load < 0.0:
            raise ValueError("payload mass must be nonnegative")
        if self.J_load_cm is not None:
            self.J_load_cm = np.asarray(self.J_load_cm, dtype=float)
            if not np.allclose(self.J_load_cm, self.J_load_cm.T):
                raise ValueError("J_load_cm must be symmetric")
            if np.any(np.linalg.eigvalsh(self.J_load_cm) < -1e-12):
                raise ValueError("J_load_cm must be positive semidefinite")


@dataclass
class MassProperties:
    """Total mass, CoG position in the body frame, and composite inertia about
    the CoG.  Used both for the simulated truth and for estimator output."""

    m: float
    r_cog: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        self.r_cog = np.asarray(self.r_cog, dtype=float)
        self.J = np.asarray(self.J, dtype=float)


def validate_angles(theta, params):
    """Raise MorphologyError if any arm angle leaves the feasible interval."""
    theta = np.asarray(theta, dtype=float)
    tol = 1e-12
    if np.any(theta < params.theta_min - tol) or np.any(theta > params.theta_max + tol):
        raise MorphologyError(
            f"arm angles {np.rad2deg(theta)} deg outside "
            f"[{np.rad2deg(params.theta_min):.1f}, {np.rad2deg(params.theta_max):.1f}] deg")


def rotor_positions(morph, params):
    """Planar rotor positions (4x2 array of x, y) for a morphology.

    Rotor i sits at the end of arm i: hinge corner plus ``l`` along the arm
    direction.  All rotors lie in the body z = 0 plane.

    Raises MorphologyError when an angle is outside the feasible interval.
    """
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    validate_angles(theta, params)
    return _rotor_positions_unchecked(theta, params)


_CORNER_X = np.array([0.5, -0.5, -0.5, 0.5])
_CORNER_Y = np.array([0.5, 0.5, -0.5, -0.5])


def _rotor_positions_unchecked(theta, params):
    # hinge corners of the square body sit at (+-d/2, +-d/2)
    heading = _ARM_BASE + theta
    out = np.empty((4, 2))
    out[:, 0] = _CORNER_X * params.d + params.l * np.cos(heading)
    out[:, 1] = _CORNER_Y * params.d + params.l * np.sin(heading)
    return out


def arm_com_positions(theta, params):
    """Body-frame CoM of each arm (4x3), in the rotor plane."""
    heading = _ARM_BASE + np.asarray(theta, dtype=float)
    half = params.d / 2.0
    cx = half * (np.cos(_ARM_BASE) - np.sin(_ARM_BASE))
    cy = half * (np.sin(_ARM_BASE) + np.cos(_ARM_BASE))
    r = params.arm_com_fraction * params.l
    out = np.zeros((4, 3))
    out[:, 0] = cx + r * np.cos(heading)
    out[:, 1] = cy + r * np.sin(heading)
    return out


_PAIR_I = np.array([0, 0, 0, 1, 1, 2])
_PAIR_J = np.array([1, 2, 3, 2, 3, 3])


def min_rotor_separation(positions):
    """Smallest pairwise distance between rotor centers."""
    p = np.asarray(positions, dtype=float)
    d = p[_PAIR_I] - p[_PAIR_J]
    return float(np.sqrt((d * d).sum(axis=1).min()))


def validate_clearance(morph, params):
    """Raise MorphologyError when two rotor disks would overlap."""
    sep = min_rotor_separation(rotor_positions(morph, params))
    if sep < params.prop_diameter:
        raise MorphologyError(
            f"rotor separation {sep:.3f} m below propeller diameter "
            f"{params.prop_diameter:.3f} m")


def compose_mass_properties(morph, params, payload=None):
    """Assemble total mass, CoG and inertia from body, arms and payload.

    The CoG x/y come from the mass-weighted component positions; its z is
    pinned to ``z_cog_nominal`` (the height is never resolved by the thrust
    measurements downstream).  Each component tensor is rotated into body axes
    and shifted to the composite CoG with the parallel-axis term.
    """
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    if payload is None:
        payload = PayloadSpec()

    m = params.m_body + 4.0 * params.m_arm + payload.m_load
    arms = arm_com_positions(theta, params)

    weighted = params.m_body * params.r_body + params.m_arm * arms.sum(axis=0)
    if payload.m_load > 0.0:
        weighted = weighted + payload.m_load * payload.r_load
    r_cog = weighted / m
    r_cog[2] = params.z_cog_nominal

    J = params.J_body_cm + parallel_axis(params.m_body, params.r_body - r_cog)

    heading = _ARM_BASE + theta
    c, s = np.cos(heading), np.sin(heading)
    R4 = np.zeros((4, 3, 3))
    R4[:, 0, 0] = c
    R4[:, 0, 1] = -s
    R4[:, 1, 0] = s
    R4[:, 1, 1] = c
    R4[:, 2, 2] = 1.0
    J = J + np.einsum("aij,jk,alk->il", R4, params.J_arm_cm, R4)
    d = arms - r_cog
    dd = np.einsum("ai,ai->a", d, d)
    J = J + params.m_arm * (dd.sum() * np.eye(3) - np.einsum("ai,aj->ij", d, d))

    if payload.m_load > 0.0:
        J_load = payload.J_load_cm
        if J_load is None:
            J_load = params.payload_cube_inertia(payload.m_load)
        J = J + J_load + parallel_axis(payload.m_load, payload.r_load - r_cog)

    return MassProperties(m=m, r_cog=r_cog, J=J)


def infer_payload_position(est, morph, params, eps_mass=1e-6):
    """Recover the payload mount point from estimated total mass and CoG.

    Inverts the mass-weighted CoG sum given the known body and arm positions.
    Returns None when the estimated payload mass is at or below ``eps_mass``
    (no payload detected; the division would be ill-posed).
    """
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    m_load = est.m - params.dry_mass
    if m_load <= eps_mass:
        return None
    arms = arm_com_positions(theta, params)
    moment = est.m * est.r_cog - params.m_body * params.r_body - params.m_arm * arms.sum(axis=0)
    return moment / m_load
