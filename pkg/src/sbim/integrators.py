"""Single-agent update rules and the shared implicit/proximal solvers.

Seven schemes are implemented: the fully discretized implicit scheme (fd),
the reduced-basis implicit-explicit integrator (imexrb), two proximal
schemes derived from the same inertial dynamics (semi, fb), the inertial
proximal baseline with Hessian damping (ipahd), the classical two-line
accelerated gradient method (nesterov) and plain gradient descent (gd).

Scalar quantities entering vector updates (function-value differences and
gradient-velocity inner products) are broadcast with the all-ones vector,
so the discrete schemes are exact discretizations of the underlying ODE in
every dimension.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .diagnostics import delta_c
from .errors import ConfigError, SolverError
from .imexrb import ImexConfig, ImexStepResult, imexrb_step
from .newton import damped_newton
from .objectives import ObjectiveSpec

Array = np.ndarray


class Scheme(str, enum.Enum):
    FD = "fd"
    IMEXRB = "imexrb"
    SEMI = "semi"
    FB = "fb"
    IPAHD = "ipahd"
    NESTEROV = "nesterov"
    GD = "gd"


class ConstantSchedule:
    """k -> value, for constant Hessian-damping weights."""

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, k) -> float:
        return self.value

    def __repr__(self):
        return f"ConstantSchedule({self.value})"


class InverseKSchedule:
    """k -> scale / (k * h), the default gradient-forcing schedule."""

    def __init__(self, scale: float, step: float):
        self.scale = float(scale)
        self.step = float(step)

    def __call__(self, k) -> float:
        return self.scale / (k * self.step)

    def __repr__(self):
        return f"InverseKSchedule({self.scale}, step={self.step})"


@dataclass
class SchemeParams:
    """Control parameters of the inertial dynamics and its discretizations."""

    alpha: float = 2.0
    step: float = 1.0
    gamma: Callable[[float], float] = None  # type: ignore[assignment]
    beta: Callable[[float], float] = None  # type: ignore[assignment]
    scheme: Scheme = Scheme.FD

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise ConfigError("alpha must be >= 1")
        if not self.step > 0.0:
            raise ConfigError("step must be positive")
        if self.gamma is None:
            self.gamma = ConstantSchedule(200.0)
        if self.beta is None:
            self.beta = InverseKSchedule(500.0, self.step)
        self.scheme = Scheme(self.scheme)


@dataclass
class SolverConfig:
    """Accuracy controls for the implicit-equation and prox solves."""

    newton_tol: float = 1e-12
    newton_max_iter: int = 100
    fixed_point_fallback: bool = True

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be positive")
        if self.newton_max_iter < 0:
            raise ConfigError("newton_max_iter must be >= 0")


@dataclass
class InertialState:
    """Two-point iterate history plus cached oracle values."""

    k: int
    x_curr: Array
    x_prev: Array
    f_curr: float
    f_prev: float
    g_curr: Array
    velocity: Optional[Array] = None

    @property
    def dim(self) -> int:
        return self.x_curr.size


def initial_state(
    spec: ObjectiveSpec,
    x0: Array,
    scheme: Scheme = Scheme.FD,
    step: float = 1.0,
    kick: float = 1e-4,
) -> InertialState:
    """Two-point initialization x1 = x0 - kick * grad(x0).

    The velocity surrogate starts consistently with the same first
    displacement: the accelerated-gradient scheme carries its lookahead
    point, the reduced-basis scheme the first-order velocity.
    """
    x0 = np.asarray(x0, dtype=float)
    g0 = spec.grad(x0)
    x1 = x0 - kick * g0
    velocity: Optional[Array] = None
    if scheme == Scheme.NESTEROV:
        velocity = x1.copy()
    elif scheme == Scheme.IMEXRB:
        velocity = (x1 - x0) / step
    return InertialState(
        k=1,
        x_curr=x1,
        x_prev=x0,
        f_curr=spec.value(x1),
        f_prev=spec.value(x0),
        g_curr=spec.grad(x1),
        velocity=velocity,
    )


def _advance(spec, state, x_next, velocity=None) -> InertialState:
    return InertialState(
        k=state.k + 1,
        x_curr=x_next,
        x_prev=state.x_curr,
        f_curr=spec.value(x_next),
        f_prev=state.f_curr,
        g_curr=spec.grad(x_next),
        velocity=velocity,
    )


# ---------------------------------------------------------------------------
# fully discretized implicit scheme

def fd_step(
    spec: ObjectiveSpec,
    params: SchemeParams,
    state: InertialState,
    solver: SolverConfig = SolverConfig(),
) -> InertialState:
    """Solve the implicit residual equation for the next iterate.

    Residual:
        k (x - 2 x_k + x_{k-1}) + alpha (x - x_k)
        - alpha (F(x) - F_k) * ones
        + gamma_k k h (grad(x) - g_k) + beta_k k h^2 grad(x) = 0
    """
    k, h, alpha = state.k, params.step, params.alpha
    gk = params.gamma(k)
    bk = params.beta(k)
    x_c, x_p = state.x_curr, state.x_prev
    f_c, g_c = state.f_curr, state.g_curr
    d = state.dim
    ones = np.ones(d)
    c_grad = gk * k * h + bk * k * h * h

    def residual(x):
        g = spec.grad(x)
        return (
            k * (x - 2.0 * x_c + x_p)
            + alpha * (x - x_c)
            - alpha * (spec.value(x) - f_c) * ones
            + c_grad * g
            - gk * k * h * g_c
        )

    def jacobian(x):
        hess = spec.hess_dense(x)
        return (
            (k + alpha) * np.eye(d)
            + c_grad * hess
            - alpha * np.outer(ones, spec.grad(x))
        )

    if solver.newton_max_iter < 1:
        raise SolverError("no Newton iterations permitted", residual=float("inf"))

    # the achievable residual is floored by the Jacobian magnitude times
    # the spacing of representable iterates, so the tolerance is relative
    x_pred = 2.0 * x_c - x_p
    scale = max(1.0, float(np.abs(x_c).max()), float(np.abs(x_p).max()))
    j_norm = float(np.linalg.norm(jacobian(x_pred), np.inf))
    fp_floor = 8.0 * np.finfo(float).eps * j_norm * scale
    tol = max(solver.newton_tol * scale, fp_floor)
    best = None
    for x_init in (x_pred, x_c):
        result = damped_newton(
            residual, jacobian, x_init, tol, solver.newton_max_iter
        )
        if best is None or result.residual_norm < best.residual_norm:
            best = result
        if result.converged:
            return _advance(spec, state, result.x)

    if solver.fixed_point_fallback:
        tau = h * h / (k + alpha)
        x = best.x.copy()
        nr = best.residual_norm
        for _ in range(solver.newton_max_iter):
            x_new = x - tau * residual(x)
            nr_new = float(np.linalg.norm(residual(x_new)))
            if not np.isfinite(nr_new) or nr_new >= nr:
                break
            x, nr = x_new, nr_new
            if nr <= tol:
                return _advance(spec, state, x)
    raise SolverError(
        "implicit fully-discretized solve did not converge",
        residual=best.residual_norm,
    )


def fd_residual_norm(
    spec: ObjectiveSpec,
    params: SchemeParams,
    state_before: InertialState,
    x_next: Array,
) -> float:
    """Residual norm of the implicit equation at (x_next, x^k, x^{k-1})."""
    k, h, alpha = state_before.k, params.step, params.alpha
    gk, bk = params.gamma(k), params.beta(k)
    ones = np.ones(state_before.dim)
    x_c, x_p = state_before.x_curr, state_before.x_prev
    g = spec.grad(x_next)
    res = (
        k * (x_next - 2.0 * x_c + x_p)
        + alpha * (x_next - x_c)
        - alpha * (spec.value(x_next) - state_before.f_curr) * ones
        + (gk * k * h) * (g - state_before.g_curr)
        + (bk * k * h * h) * g
    )
    return float(np.linalg.norm(res))


# ---------------------------------------------------------------------------
# first-order system and reduced-basis stepping

def rhs_first_order(
    spec: ObjectiveSpec, params: SchemeParams, t: float, x: Array, v: Array
):
    """Right-hand side of the equivalent first-order system at time t."""
    if not t > 0.0:
        raise ConfigError("time must be positive for the vanishing-damping term")
    k = t / params.step
    alpha = params.alpha
    g = spec.grad(x)
    xdot = v.copy()
    vdot = (
        -(alpha / t) * v
        + (alpha / t) * float(g @ v) * np.ones(x.size)
        - params.gamma(k) * spec.hess_vec(x, v)
        - params.beta(k) * g
    )
    return xdot, vdot


def _full_rhs(spec, params):
    d = spec.dimension

    def rhs(t, u):
        xdot, vdot = rhs_first_order(spec, params, t, u[:d], u[d:])
        return np.concatenate([xdot, vdot])

    return rhs


def imex_window_size(n_seen: int, dim: int, cfg: ImexConfig) -> int:
    """Past full states entering the QR factorization."""
    return max(1, min(n_seen, 2 * dim, cfg.window))


def imexrb_inertial_step(
    spec: ObjectiveSpec,
    params: SchemeParams,
    cfg: ImexConfig,
    history: Sequence[Array],
    state: InertialState,
    solver: SolverConfig = SolverConfig(),
) -> tuple[InertialState, ImexStepResult]:
    """One reduced-basis step of the first-order inertial system.

    ``history`` holds recent full states (x, V), most recent first; it must
    contain at least the current state.  Returns the advanced state plus
    the step diagnostics (`tol_met=False` means the inner budget was
    exhausted; the run continues with the last iterate).
    """
    if state.velocity is None:
        raise ConfigError("imexrb requires a state with velocity")
    if not history:
        raise ConfigError("history must be non-empty")
    d = spec.dimension
    h = params.step
    # the kicked starting point sits at t0 = 0, so the k -> k+1 transition
    # is the (k-1)-th integrator step and targets t = k h; the schedules it
    # sees then match the two-point schemes at the same step index
    t_next = state.k * h
    window = imex_window_size(len(history), d, cfg)
    result = imexrb_step(
        _full_rhs(spec, params),
        t_next,
        h,
        np.asarray(history[0], dtype=float),
        list(history[:window]),
        cfg,
        newton_tol=solver.newton_tol,
        newton_max_iter=solver.newton_max_iter,
    )
    x_next = result.u_next[:d]
    v_next = result.u_next[d:]
    return _advance(spec, state, x_next, velocity=v_next), result


# ---------------------------------------------------------------------------
# proximal operator and the explicit proximal schemes

def _kink_candidate(spec: ObjectiveSpec, mu: float, y: Array) -> Optional[Array]:
    """Subdifferential-stationary kink of the prox subproblem, if any.

    The ackley family is non-differentiable exactly at the shifted origin,
    where the radial term contributes the subgradient ball of radius
    4/sqrt(d) (the smooth cosine term vanishes there).  The kink solves
    0 in dF(x) + (x - y)/mu  iff  ||y - x_kink|| <= 4 mu / sqrt(d).
    """
    if spec.kind != "ackley":
        return None
    kink = spec.minimizer
    radius = 4.0 * mu / math.sqrt(spec.dimension)
    if float(np.linalg.norm(y - kink)) <= radius:
        return kink.copy()
    return None


def _prox_newton(
    spec: ObjectiveSpec, mu: float, y: Array, solver: SolverConfig
):
    """Damped Newton on the stationarity equation x + mu grad(x) = y."""

    def residual(x):
        return x + mu * spec.grad(x) - y

    def jacobian(x):
        return np.eye(spec.dimension) + mu * spec.hess_dense(x)

    # floating-point floor of the residual grows with both the iterate
    # magnitude and the gradient weighting
    tol = solver.newton_tol * max(1.0, float(np.abs(y).max())) * max(1.0, mu)
    return damped_newton(residual, jacobian, y.copy(), tol, solver.newton_max_iter)


def prox(
    spec: ObjectiveSpec,
    mu: float,
    y: Array,
    solver: SolverConfig = SolverConfig(),
) -> Array:
    """Proximal point of F at y: argmin_x F(x) + ||x - y||^2 / (2 mu).

    Quadratic objectives use the closed-form linear solve (the iterative
    path is kept only as a cross-check).  For a non-smooth objective the
    prox is a selection of the set-valued resolvent (I + mu dF)^{-1}(y):
    whenever the objective's kink is subdifferential-stationary for the
    subproblem it is the returned selection (the non-smooth valley
    captures the proximal step).  Otherwise, and for smooth nonconvex
    objectives, damped Newton on the stationarity equation initialized at
    y returns the local prox nearest y.
    """
    if not mu > 0:
        raise ConfigError("prox requires mu > 0")
    y = spec._check(y, "y")
    d = spec.dimension

    if spec.quadratic:
        hess = spec.hess_dense(y)
        a_mat = np.eye(d) + mu * hess
        b_vec = y + mu * (hess @ (spec.shift * np.ones(d)))
        return np.linalg.solve(a_mat, b_vec)

    kink = _kink_candidate(spec, mu, y)
    if kink is not None:
        return kink

    best_residual = float("inf")
    if solver.newton_max_iter >= 1:
        result = _prox_newton(spec, mu, y, solver)
        best_residual = result.residual_norm
        if result.converged:
            return result.x

    if solver.fixed_point_fallback:

        def residual(x):
            return x + mu * spec.grad(x) - y

        x = y.copy()
        nr = float(np.linalg.norm(residual(x)))
        for _ in range(solver.newton_max_iter):
            x_new = y - mu * spec.grad(x)
            nr_new = float(np.linalg.norm(residual(x_new)))
            if not np.isfinite(nr_new) or nr_new >= nr:
                break
            x, nr = x_new, nr_new
            if nr <= solver.newton_tol:
                return x
        best_residual = min(best_residual, nr)
    raise SolverError("prox solve did not converge", residual=best_residual)


def _prox_scheme_step(spec, params, state, solver, interaction):
    k, h, alpha = state.k, params.step, params.alpha
    gk, bk = params.gamma(k), params.beta(k)
    x_c, x_p = state.x_curr, state.x_prev
    w = k / (k + alpha)
    y = x_c + w * (x_c - x_p) + interaction + (k * h / (k + alpha)) * gk * state.g_curr
    mu = (k * h / (k + alpha)) * (gk + bk * h)
    x_next = prox(spec, mu, y, solver)
    return _advance(spec, state, x_next)


def semi_step(
    spec: ObjectiveSpec,
    params: SchemeParams,
    state: InertialState,
    solver: SolverConfig = SolverConfig(),
) -> InertialState:
    """Semi-discretized proximal scheme (gradient/velocity inner product)."""
    alpha = params.alpha
    k = state.k
    inter = (
        (alpha / (k + alpha))
        * float(state.g_curr @ (state.x_curr - state.x_prev))
        * np.ones(state.dim)
    )
    return _prox_scheme_step(spec, params, state, solver, inter)


def fb_step(
    spec: ObjectiveSpec,
    params: SchemeParams,
    state: InertialState,
    solver: SolverConfig = SolverConfig(),
) -> InertialState:
    """Forward-backward proximal scheme (function-value difference)."""
    alpha = params.alpha
    k = state.k
    inter = (
        (alpha / (k + alpha)) * (state.f_curr - state.f_prev) * np.ones(state.dim)
    )
    return _prox_scheme_step(spec, params, state, solver, inter)


def ipahd_step(
    spec: ObjectiveSpec,
    params: SchemeParams,
    state: InertialState,
    solver: SolverConfig = SolverConfig(),
) -> InertialState:
    """Inertial proximal baseline with Hessian damping.

    Parameter mapping for comparisons: this scheme's gradient coefficient
    is the Hessian-damping weight gamma_k and its proximal forcing is
    beta_k, so the prox scaling mu_k coincides with the semi/fb schemes.
    """
    k, h, alpha = state.k, params.step, params.alpha
    gk, bk = params.gamma(k), params.beta(k)
    momentum = 1.0 - alpha / (k + alpha)
    y = (
        state.x_curr
        + momentum * (state.x_curr - state.x_prev)
        + gk * h * momentum * state.g_curr
    )
    mu = (k / (k + alpha)) * (gk * h + h * h * bk)
    x_next = prox(spec, mu, y, solver)
    return _advance(spec, state, x_next)


# ---------------------------------------------------------------------------
# classical baselines

def nesterov_step(
    spec: ObjectiveSpec, step_s: float, state: InertialState
) -> InertialState:
    """Two-line accelerated gradient step with momentum (k-1)/(k+2)."""
    if state.velocity is None:
        raise ConfigError("nesterov requires the lookahead point in velocity")
    y = state.velocity
    x_next = y - step_s * spec.grad(y)
    k_next = state.k + 1
    y_next = x_next + ((k_next - 1.0) / (k_next + 2.0)) * (x_next - state.x_curr)
    return _advance(spec, state, x_next, velocity=y_next)


def gd_step(spec: ObjectiveSpec, step_s: float, state: InertialState) -> InertialState:
    """Plain gradient descent on the cached gradient."""
    x_next = state.x_curr - step_s * state.g_curr
    return _advance(spec, state, x_next)


# ---------------------------------------------------------------------------
# parameter-condition report

@dataclass
class ConditionReport:
    """Per-step evaluation of the discrete energy-dissipation hypotheses."""

    ks: Array
    cond1_ok: Array
    cond2_ok: Optional[Array]
    cond3_ok: Array
    cond2_lhs: Optional[Array]
    cond2_lhs_dim_variant: Optional[Array] = None
    warning: Optional[str] = None


def check_dissipation_conditions(
    params: SchemeParams,
    lipschitz: Optional[float],
    horizon: int,
    dim: Optional[int] = None,
) -> ConditionReport:
    """Report-only check of the three sufficient dissipation conditions.

    Condition 2 is evaluated as stated with sqrt(2L); when ``dim`` is given
    the sqrt(2 L d) variant appearing in the derivation is reported too.
    Skipped with a warning when no Lipschitz constant is available.
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    ks = np.arange(1, horizon + 1)
    c = np.empty(horizon)
    delta = np.empty(horizon + 1)
    for i, k in enumerate(ks):
        c[i], delta[i] = delta_c(params, int(k))
    _, delta[horizon] = delta_c(params, horizon + 1)
    cond1 = c < 0.0
    cond3 = np.array([params.gamma(int(k)) >= 0.0 for k in ks])
    h, alpha = params.step, params.alpha
    if lipschitz is None:
        return ConditionReport(
            ks, cond1, None, cond3, None,
            warning="no Lipschitz constant available; condition 2 skipped",
        )
    ddelta = delta[1:] - delta[:-1]
    lhs = ddelta + (alpha - 1.0) * c * h - alpha * c * h * math.sqrt(2.0 * lipschitz)
    report = ConditionReport(ks, cond1, lhs <= 0.0, cond3, lhs)
    if dim is not None:
        report.cond2_lhs_dim_variant = (
            ddelta
            + (alpha - 1.0) * c * h
            - alpha * c * h * math.sqrt(2.0 * lipschitz * dim)
        )
    return report
