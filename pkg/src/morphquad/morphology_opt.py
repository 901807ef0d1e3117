"""Morphology objectives and the projected gradient-ascent optimizer.

Two scalar figures of merit score a morphology for a given mass/CoG/inertia:

* efficiency: total hover thrust divided by total hover electrical power.
  Because the collective thrust always equals the weight, this rewards
  spreading thrust evenly across rotors (power is convex in thrust).
* controllability: reciprocal of the worst per-rotor thrust sensitivity to
  desired roll/pitch angular acceleration.  Large values mean small thrust
  excursions suffice to follow attitude commands.

The optimizer ascends efficiency while steering the remaining freedom toward
higher controllability: the controllability gradient is first stripped of its
component along the efficiency gradient, so the secondary objective never
fights the primary one.  Iterates stay inside the arm-angle box and away from
rotor-disk collisions via a smooth boundary penalty plus a feasibility
backtrack on each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GRAVITY,
    Morphology,
    _rotor_positions_unchecked,
    min_rotor_separation,
    rotor_positions,
    validate_angles,
)
from .rotor import YAW_SIGNS, allocation_matrix


class OptimizationError(RuntimeError):
    """No feasible morphology reachable from the requested start."""


@dataclass
class MorphObjectives:
    """Objective values for one morphology; infeasible when the hover
    allocation needs a nonpositive thrust or rotor disks collide."""

    eta: float
    C: float
    feasible: bool


@dataclass
class OptimizerSettings:
    beta1: float = 100.0         # efficiency ascent rate
    beta2: float = 5e-3          # controllability ascent rate
    max_iters: int = 2000
    grad_step: float = 1e-4      # finite-difference step, rad
    tol_angle: float = 1e-4      # convergence tolerance on the update norm, rad
    residual_tol: float = 1e-3   # final-step norm below which the run counts as converged
    stall_window: int = 25       # window for the drift-based stall detector
    stall_tol: float = 1e-3      # windowed-mean drift (rad) considered "no progress"
    max_step: float = 0.1        # per-iteration cap on the update norm, rad
    polish_iters: int = 300      # budget for the monotone finishing phase
    smooth_max_power: float = 16.0      # p-norm stand-in for the max during ascent
    barrier_margin_sep: float = 0.012   # m of rotor clearance where the penalty wakes up
    barrier_margin_thrust: float = 0.3  # N of hover-thrust headroom likewise
    barrier_gain: float = 1e-3

    def __post_init__(self):
        if min(self.beta1, self.beta2, self.grad_step, self.tol_angle,
               self.max_iters) <= 0:
            raise ValueError("optimizer settings must be positive")


@dataclass
class MorphOptResult:
    morphology: Morphology
    eta: float
    C: float
    iterations: int
    residual: float            # norm of the final accepted projected step, rad
    converged: bool
    trace: list = field(default_factory=list)


def _hover_thrusts_raw(theta, mass_props, params):
    """Hover thrust split for raw angles; no feasibility checks."""
    pos = _rotor_positions_unchecked(theta, params)
    A = allocation_matrix(pos, mass_props.r_cog, params)
    T = np.array([mass_props.m * GRAVITY, 0.0, 0.0, 0.0])
    return pos, A, np.linalg.solve(A, T)


def efficiency_factor(morph, mass_props, params):
    """Hover thrust-to-power ratio (N/W); nan when hover is infeasible."""
    return morph_objectives(morph, mass_props, params).eta


def controllability_factor(morph, mass_props, params):
    """Reciprocal worst-case thrust sensitivity to roll/pitch acceleration."""
    return morph_objectives(morph, mass_props, params).C


def morph_objectives(morph, mass_props, params):
    """Evaluate both objectives at a morphology (angles are range-checked)."""
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    validate_angles(theta, params)
    pos, A, f = _hover_thrusts_raw(theta, mass_props, params)
    if np.any(f <= 0.0) or min_rotor_separation(pos) < params.prop_diameter:
        return MorphObjectives(eta=np.nan, C=np.nan, feasible=False)
    eta = float(np.sum(f) / np.sum(params.gamma_p * f**1.5))
    C = _controllability(A, mass_props.J)
    return MorphObjectives(eta=eta, C=C, feasible=True)


def _controllability(A, J):
    """1 / max_i || row_i(A^-1)[moments] @ J[:, :2] ||.

    Row i of the inverse allocation matrix restricted to the moment columns is
    the thrust sensitivity of rotor i to body moments; the first two columns
    of the inertia tensor convert desired roll/pitch acceleration to moments.
    """
    Ainv = np.linalg.inv(A)
    sens = Ainv[:, 1:4] @ J[:, 0:2]           # (4, 2)
    worst = np.max(np.linalg.norm(sens, axis=1))
    return float(1.0 / worst)


def thrust_sensitivity_rows(morph, mass_props, params):
    """Per-rotor d(thrust)/d(roll,pitch acceleration) rows (4x2)."""
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    pos = rotor_positions(theta, params)
    A = allocation_matrix(pos, mass_props.r_cog, params)
    return np.linalg.inv(A)[:, 1:4] @ mass_props.J[:, 0:2]


def efficiency_grid(thetas, mass_props, params):
    """Vectorized efficiency over an (N, 4) batch of angle vectors.

    Returns an N-vector with nan at infeasible points.  Used by the grid
    search oracle and the CoG sweep table.
    """
    thetas = np.asarray(thetas, dtype=float)
    base = np.array([0.0, 0.5, 1.0, 1.5]) * np.pi
    heading = base + thetas
    half = params.d / 2.0
    cx = half * (np.cos(base) - np.sin(base))
    cy = half * (np.sin(base) + np.cos(base))
    px = cx + params.l * np.cos(heading)
    py = cy + params.l * np.sin(heading)

    n = thetas.shape[0]
    A = np.empty((n, 4, 4))
    A[:, 0, :] = 1.0
    A[:, 1, :] = -(py - mass_props.r_cog[1])
    A[:, 2, :] = px - mass_props.r_cog[0]
    A[:, 3, :] = YAW_SIGNS * (params.kappa / params.mu)
    T = np.tile(np.array([mass_props.m * GRAVITY, 0.0, 0.0, 0.0]), (n, 1))
    f = np.linalg.solve(A, T[:, :, None])[:, :, 0]

    sep2 = np.full(n, np.inf)
    for i in range(4):
        for j in range(i + 1, 4):
            d2 = (px[:, i] - px[:, j]) ** 2 + (py[:, i] - py[:, j]) ** 2
            sep2 = np.minimum(sep2, d2)
    ok = (f > 0.0).all(axis=1) & (sep2 >= params.prop_diameter**2)

    eta = np.full(n, np.nan)
    fe = f[ok]
    eta[ok] = fe.sum(axis=1) / (params.gamma_p * fe**1.5).sum(axis=1)
    return eta


# ---------------------------------------------------------------------------
# penalized objectives and finite-difference gradients
# ---------------------------------------------------------------------------

def _barrier(x, margin, gain):
    """Smooth one-sided barrier: zero for x >= margin, +inf as x -> 0."""
    if x >= margin:
        return 0.0
    if x <= 0.0:
        return np.inf
    return gain * (margin / x - 1.0) ** 2


def _penalized(theta, mass_props, params, settings, kind):
    """eta or C minus the boundary penalty; -inf when hard-infeasible.

    For the ascent the controllability max is replaced by a p-norm so the
    objective stays differentiable across sensitivity ties; reported values
    always use the exact max.
    """
    if np.any(theta < params.theta_min) or np.any(theta > params.theta_max):
        return -np.inf
    pos, A, f = _hover_thrusts_raw(theta, mass_props, params)
    headroom = float(np.min(f))
    clearance = min_rotor_separation(pos) - params.prop_diameter
    if headroom <= 0.0 or clearance <= 0.0:
        return -np.inf
    penalty = (_barrier(headroom, settings.barrier_margin_thrust, settings.barrier_gain)
               + _barrier(clearance, settings.barrier_margin_sep, settings.barrier_gain))
    if kind == "eta":
        value = np.sum(f) / np.sum(params.gamma_p * f**1.5)
    else:
        sens = np.linalg.inv(A)[:, 1:4] @ mass_props.J[:, 0:2]
        norms = np.linalg.norm(sens, axis=1)
        p = settings.smooth_max_power
        value = 1.0 / float(np.sum(norms**p) ** (1.0 / p))
    return value - penalty


def finite_difference_gradient(fn, theta, step):
    """Central differences with one-sided fallback at infeasible neighbors.

    ``fn`` returns -inf (or nan) where the objective is undefined.  Raises
    OptimizationError when a coordinate has no usable neighbor on either side.
    """
    theta = np.asarray(theta, dtype=float)
    g = np.zeros(4)
    f0 = None
    for i in range(4):
        tp = theta.copy()
        tp[i] += step
        tm = theta.copy()
        tm[i] -= step
        fp = fn(tp)
        fm = fn(tm)
        ok_p = np.isfinite(fp)
        ok_m = np.isfinite(fm)
        if ok_p and ok_m:
            g[i] = (fp - fm) / (2.0 * step)
        elif ok_p or ok_m:
            if f0 is None:
                f0 = fn(theta)
                if not np.isfinite(f0):
                    raise OptimizationError("objective undefined at the evaluation point")
            g[i] = (fp - f0) / step if ok_p else (f0 - fm) / step
        else:
            raise OptimizationError(
                f"objective undefined on both sides of coordinate {i}")
    return g


def objective_gradient(kind, morph, mass_props, params, settings=None):
    """Finite-difference gradient of 'eta' or 'C' with respect to the angles."""
    if settings is None:
        settings = OptimizerSettings()
    theta = morph.theta if isinstance(morph, Morphology) else np.asarray(morph, float)
    fn = lambda t: _penalized(t, mass_props, params, settings, kind)
    return finite_difference_gradient(fn, theta, settings.grad_step)


def project_out(v, u, eps=1e-12):
    """Remove from v its projection onto u (no-op for negligible u)."""
    uu = float(np.dot(u, u))
    if uu < eps**2:
        return v.copy()
    return v - (np.dot(v, u) / uu) * u


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def optimize_morphology(start, mass_props, params, settings=None, keep_trace=False):
    """Find the morphology maximizing efficiency, tie-broken by controllability.

    Iterates theta <- theta + beta1*grad(eta) + beta2*(grad(C) orthogonalized
    against grad(eta)), clipped to the feasible angle box.  Steps that would
    land on an infeasible point are halved until feasible, so every iterate
    admits a positive hover thrust split and collision-free rotors.

    The run ends when the raw update norm falls below ``tol_angle`` or when
    the iterate stops making net progress over ``stall_window`` iterations
    (the efficiency optimum is a two-dimensional set, so the orthogonalized
    tie-break term keeps a small bounded magnitude even at the joint optimum;
    a stalled iterate with residual below ``residual_tol`` counts as
    converged).  Deterministic for fixed inputs.

    Raises OptimizationError when the start is infeasible or feasibility
    backtracking dead-ends.
    """
    if settings is None:
        settings = OptimizerSettings()
    theta = (start.theta if isinstance(start, Morphology)
             else np.asarray(start, dtype=float)).copy()
    validate_angles(theta, params)

    eval_eta = lambda t: _penalized(t, mass_props, params, settings, "eta")
    eval_c = lambda t: _penalized(t, mass_props, params, settings, "C")
    if not np.isfinite(eval_eta(theta)):
        raise OptimizationError("starting morphology is infeasible for this CoG")

    trace = []
    history = [theta.copy()]
    residual = np.inf
    iterations = 0
    value = eval_eta(theta)
    recent = [value]
    for iterations in range(1, settings.max_iters + 1):
        g_eta = finite_difference_gradient(eval_eta, theta, settings.grad_step)
        g_c = finite_difference_gradient(eval_c, theta, settings.grad_step)
        update = settings.beta1 * g_eta + settings.beta2 * project_out(g_c, g_eta)

        norm = float(np.linalg.norm(update))
        step = update if norm <= settings.max_step else update * (settings.max_step / norm)
        # backtrack until the step is feasible and does not fall below the
        # recent penalized-efficiency envelope; the non-monotone window lets
        # the iterate slide along the collision barrier, the slack admits the
        # tangential tie-break drift
        floor = min(recent) - 1e-8 * (1.0 + abs(value))
        accepted = None
        for direction in (step, settings.beta1 * g_eta):
            trial = direction
            for _ in range(30):
                candidate = np.clip(theta + trial, params.theta_min, params.theta_max)
                cand_value = eval_eta(candidate)
                if np.isfinite(cand_value) and cand_value >= floor:
                    accepted = candidate
                    value = cand_value
                    break
                trial = 0.5 * trial
            if accepted is not None:
                break
        if accepted is None:
            residual = 0.0
            break
        recent.append(value)
        if len(recent) > 10:
            recent.pop(0)
        residual = float(np.linalg.norm(accepted - theta))
        if keep_trace:
            trace.append((theta.copy(), residual))

        theta = accepted
        history.append(theta.copy())
        if residual < settings.tol_angle:
            break
        # drift-based stall detector: the tie-break term keeps the iterate
        # wobbling in a small ball around the optimum, so compare means of
        # consecutive windows rather than endpoint-to-endpoint motion
        w = settings.stall_window
        if len(history) >= 2 * w:
            recent_mean = np.mean(history[-w:], axis=0)
            prev_mean = np.mean(history[-2 * w:-w], axis=0)
            if np.linalg.norm(recent_mean - prev_mean) < settings.stall_tol:
                break

    if residual >= settings.tol_angle:
        theta, residual, extra = _polish(theta, eval_eta, eval_c, params, settings,
                                         max_polish=settings.polish_iters)
        iterations += extra

    obj = morph_objectives(theta, mass_props, params)
    return MorphOptResult(
        morphology=Morphology(theta),
        eta=obj.eta,
        C=obj.C,
        iterations=iterations,
        residual=residual,
        converged=residual <= settings.residual_tol,
        trace=trace,
    )


def _polish(theta, eval_eta, eval_c, params, settings, max_polish=300):
    """Strictly monotone trust-region finish.

    The main loop may chatter against the collision barrier; here steps are
    only accepted when they do not lose penalized efficiency, and the trust
    radius halves on rejection, so the final accepted step norm certifies
    stationarity of the constrained ascent.
    """
    value = eval_eta(theta)
    trust = settings.max_step
    residual = trust
    for k in range(max_polish):
        g_eta = finite_difference_gradient(eval_eta, theta, settings.grad_step)
        g_c = finite_difference_gradient(eval_c, theta, settings.grad_step)
        update = settings.beta1 * g_eta + settings.beta2 * project_out(g_c, g_eta)
        norm = float(np.linalg.norm(update))
        if norm < settings.tol_angle:
            return theta, norm, k + 1
        step = update if norm <= trust else update * (trust / norm)
        accepted = False
        for _ in range(40):
            candidate = np.clip(theta + step, params.theta_min, params.theta_max)
            cand_value = eval_eta(candidate)
            if np.isfinite(cand_value) and cand_value >= value - 1e-12 * (1.0 + abs(value)):
                moved = float(np.linalg.norm(candidate - theta))
                theta = candidate
                value = cand_value
                residual = moved
                accepted = True
                break
            step = 0.5 * step
            trust = 0.5 * trust
        if not accepted or residual < settings.tol_angle:
            return theta, residual if accepted else min(residual, trust), k + 1
        trust = min(settings.max_step, trust * 1.5)
    return theta, residual, max_polish


def sweep_cog_table(cog_points, total_mass, params, settings=None, start=None,
                    payload_inertia=None):
    """Converged morphology and objectives for each CoG in a sweep.

    ``cog_points`` is an iterable of (x, y) CoG positions; each row of the
    result carries the CoG, the four converged angles, eta and C.  Infeasible
    points are reported with nan objectives rather than aborting the sweep.
    """
    from .geometry import MassProperties, compose_mass_properties, x_config

    if settings is None:
        settings = OptimizerSettings()
    if start is None:
        start = x_config()
    rows = []
    for xy in cog_points:
        x, y = float(xy[0]), float(xy[1])
        ref = compose_mass_properties(x_config(), params)
        J = ref.J if payload_inertia is None else payload_inertia
        props = MassProperties(m=total_mass, r_cog=np.array([x, y, params.z_cog_nominal]), J=J)
        try:
            res = optimize_morphology(start, props, params, settings)
            rows.append({"x_cog": x, "y_cog": y,
                         "theta": res.morphology.theta.copy(),
                         "eta": res.eta, "C": res.C, "converged": res.converged})
        except OptimizationError as exc:
            rows.append({"x_cog": x, "y_cog": y, "theta": np.full(4, np.nan),
                         "eta": np.nan, "C": np.nan, "converged": False,
                         "error": str(exc)})
    return rows
