"""Static rotor maps and the 4x4 control allocation matrix.

Thrust and reaction torque are quadratic in rotor speed (f = mu * w^2,
tau = kappa * w^2) and electrical power is gamma_p * f**1.5.  The allocation
matrix A maps per-rotor thrusts to the body wrench [sum(f), Mx, My, Mz];
its inverse turns a wrench setpoint into thrust commands.

Sign conventions (shared package-wide): body z points down, thrust acts along
-z, so the first wrench component is the upward collective force magnitude
(+m*g at hover).  Rotor spin directions alternate (CCW, CW, CCW, CW), giving
the (+, -, +, -) yaw row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

YAW_SIGNS = np.array([1.0, -1.0, 1.0, -1.0])
DEFAULT_COND_LIMIT = 1e8


class AllocationError(RuntimeError):
    """Allocation matrix is singular or too ill-conditioned to invert."""


@dataclass
class WrenchSetpoint:
    """Collective z-force magnitude (N, nonnegative) and body moments (N m)."""

    Fz: float
    M: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        if self.Fz < 0.0:
            raise ValueError("collective force must be nonnegative")

    def as_vector(self):
        return np.array([self.Fz, self.M[0], self.M[1], self.M[2]])


@dataclass
class RotorThrusts:
    """Per-rotor thrusts with a realizability report.

    ``violations`` lists (rotor index, thrust) entries outside [0, f_max];
    values are reported, never silently clamped.
    """

    f: np.ndarray
    violations: list = field(default_factory=list)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)

    @property
    def realizable(self):
        return not self.violations


def allocation_matrix(positions, r_cog, params):
    """Build A such that A @ f = [sum(f), Mx, My, Mz] about the CoG.

    Row 1 is all ones; rows 2 and 3 carry the moment arms -(y_i - y_cog) and
    (x_i - x_cog); row 4 alternates +-kappa/mu with the rotor spin pattern.
    """
    p = np.asarray(positions, dtype=float)
    r = np.asarray(r_cog, dtype=float)
    A = np.empty((4, 4))
    A[0] = 1.0
    A[1] = -(p[:, 1] - r[1])
    A[2] = p[:, 0] - r[0]
    A[3] = YAW_SIGNS * (params.kappa / params.mu)
    return A


def wrench_to_thrusts(T, A, f_max=None, cond_limit=DEFAULT_COND_LIMIT):
    """Solve f = A^-1 T and report any thrusts outside [0, f_max].

    Raises AllocationError when cond(A) exceeds ``cond_limit`` (rotors close
    to collinear leave the wrench map rank-deficient).
    """
    if np.linalg.cond(A) > cond_limit:
        raise AllocationError("allocation matrix is near singular")
    t = T.as_vector() if isinstance(T, WrenchSetpoint) else np.asarray(T, dtype=float)
    f = np.linalg.solve(A, t)
    violations = [(i, float(fi)) for i, fi in enumerate(f)
                  if fi < 0.0 or (f_max is not None and fi > f_max)]
    return RotorThrusts(f=f, violations=violations)


def hover_thrusts(mass, A, f_max=None):
    """Thrust split that balances weight with zero net moment."""
    from .geometry import GRAVITY
    return wrench_to_thrusts(np.array([mass * GRAVITY, 0.0, 0.0, 0.0]), A, f_max=f_max)


def thrust_to_power(f, gamma_p=8.9):
    """Electrical power (W) drawn to produce thrust f (N): gamma_p * f**1.5."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0):
        raise ValueError("thrust must be nonnegative")
    return gamma_p * f**1.5


def thrusts_to_speeds(f, params):
    """Rotor speeds (rad/s) producing the given thrusts: w = sqrt(f / mu)."""
    if isinstance(f, RotorThrusts):
        f = f.f
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0):
        raise ValueError("thrust must be nonnegative")
    return np.sqrt(f / params.mu)


def speeds_to_thrusts(omega, params):
    """Inverse of thrusts_to_speeds: f = mu * w^2."""
    omega = np.asarray(omega, dtype=float)
    return params.mu * omega**2
