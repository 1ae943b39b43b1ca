"""Agent population management and the swarm optimization loop.

One outer iteration is communicate (mass transfer) -> per-agent inertial
update -> merge.  Mass moves from high-value agents toward the current
best agent under the rule m_i' = -phi_p(eta_i) m_i, with the best agent's
mass assigned exactly so the total stays one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagnostics import EnergyTrace, delta_c, energy_fd, stop_and_success, swarm_energy
from .errors import ConfigError, SolverError, StateError
from .imexrb import ImexConfig
from .integrators import (
    InertialState,
    Scheme,
    SchemeParams,
    SolverConfig,
    fb_step,
    fd_step,
    gd_step,
    imexrb_inertial_step,
    initial_state,
    ipahd_step,
    semi_step,
)
from .objectives import ObjectiveSpec

Array = np.ndarray


@dataclass
class CommParams:
    """Communication (mass transfer) controls."""

    p_exponent: float = 1.0
    tol_mass: float = 1e-6
    tol_merge: float = 1e-3
    mass_dt: Optional[float] = None  # defaults to the integrator step

    def __post_init__(self):
        if not self.p_exponent > 0:
            raise ConfigError("p_exponent must be positive")
        if not self.tol_mass > 0 or not self.tol_merge > 0:
            raise ConfigError("tolerances must be positive")

    def phi(self, eta_value: float) -> float:
        return float(eta_value) ** self.p_exponent


@dataclass
class SBNesterovParams:
    """Mass-coupled accelerated-gradient scheme controls."""

    step: float = 1.0
    eps_reg: float = 1e-12

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if not self.eps_reg > 0:
            raise ConfigError("eps_reg must be positive")


@dataclass
class Agent:
    """One swarm member: iterate history, mass and bookkeeping."""

    id: int
    state: InertialState
    mass: float
    alive: bool = True
    # mass/communication history needed by the mass-coupled velocity update
    mass_before: float = 0.0  # m^n   (pre-communicate at the current pass)
    mass_prev: float = 0.0    # m^{n-1}
    phi_prev: float = 0.0     # phi_p(eta^{n-1})
    phi_now: float = 0.0      # phi_p(eta^n), written by communicate
    imex_history: list = field(default_factory=list)

    @property
    def position(self) -> Array:
        return self.state.x_curr

    @property
    def value(self) -> float:
        return self.state.f_curr


def eta(values: Sequence[float]) -> Array:
    """Normalized losses in [0, 1]; all zeros when the values coincide."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise StateError("eta needs at least one value")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros(v.size)
    return (v - lo) / (hi - lo)


@dataclass
class CommResult:
    i_minus: int
    removed: list[int]
    clamped: list[int]


def _alive(agents: Sequence[Agent]) -> list[Agent]:
    return [a for a in agents if a.alive]


def _argmin_agent(agents: Sequence[Agent]) -> Agent:
    # ties broken by the lowest id: agents are kept id-sorted
    best = agents[0]
    for a in agents[1:]:
        if a.value < best.value:
            best = a
    return best


def communicate(agents: Sequence[Agent], comm: CommParams) -> CommResult:
    """Forward-Euler mass transfer with exact conservation.

    Agents below the mass floor are marked dead first; their mass reaches
    the best agent through the conservation assignment.  Total mass is
    exactly one afterwards.
    """
    live = _alive(agents)
    if not live:
        raise StateError("no live agents")
    total = math.fsum(a.mass for a in live)
    if abs(total - 1.0) > 1e-12:
        raise StateError(f"mass not conserved on entry: {total}")
    dt = comm.mass_dt
    if dt is None:
        raise ConfigError("mass_dt unset; the driver must default it to the step")

    removed = [a.id for a in live if a.mass < comm.tol_mass]
    for a in live:
        if a.mass < comm.tol_mass:
            a.alive = False
    live = _alive(agents)
    if not live:
        raise StateError("mass floor removed every agent")

    etas = eta([a.value for a in live])
    best = _argmin_agent(live)
    clamped = []
    for a, e in zip(live, etas):
        a.mass_before = a.mass
        a.phi_now = comm.phi(e)
        if a is best:
            continue
        factor = dt * a.phi_now
        if factor >= 1.0:
            a.mass = comm.tol_mass / 2.0
            clamped.append(a.id)
        else:
            a.mass = a.mass - factor * a.mass
    others = [a.mass for a in live if a is not best]
    best.mass = 1.0 - math.fsum(others)
    # nudge so the exactly-rounded total is exactly one
    for _ in range(3):
        residual = 1.0 - math.fsum(others + [best.mass])
        if residual == 0.0:
            break
        best.mass += residual
    return CommResult(best.id, removed, clamped)


def merge(agents: Sequence[Agent], comm: CommParams) -> list[tuple[int, int]]:
    """Pairwise merge of nearly coincident agents, ascending (i, j) order.

    The higher-value agent dies and its mass joins the survivor; value
    ties keep the lower id.  Returns the (survivor, removed) pairs.
    """
    merged = []
    live = _alive(agents)
    for i in range(len(live)):
        for j in range(i + 1, len(live)):
            a, b = live[i], live[j]
            if not (a.alive and b.alive):
                continue
            if float(np.linalg.norm(a.position - b.position)) < comm.tol_merge:
                if b.value < a.value:
                    survivor, gone = b, a
                else:
                    survivor, gone = a, b
                survivor.mass += gone.mass
                gone.alive = False
                merged.append((survivor.id, gone.id))
    return merged


def sb_nesterov_update(
    spec: ObjectiveSpec,
    agents: Sequence[Agent],
    params: SBNesterovParams,
    comm: CommParams,
    n: int,
    i_minus: int,
) -> int:
    """Mass-coupled velocity/position update at outer iteration n.

    The friction solves  -phi_p(eta^{n-1}) m^{n-1} / 2 + m^n R^n = 3 m^n / (n dt)
    for every non-best agent; the best agent replaces the phi_p slots with
    its discrete mass-growth rate, exactly as the conservation line defines
    it.  Returns the number of damping-positivity violations (R - phi/2 < 0).
    """
    if n < 1:
        raise ConfigError("iteration index must be >= 1")
    dt = params.step
    violations = 0
    for a in _alive(agents):
        m_next, m_n, m_prev = a.mass, a.mass_before, a.mass_prev
        if a.id == i_minus:
            r_i = 3.0 / (n * dt) + 0.5 * (m_n - m_prev) / m_n
            slot = 0.5 * (m_next - m_n) / m_n
        else:
            r_i = 3.0 / (n * dt) + 0.5 * a.phi_prev * m_prev / m_n
            slot = 0.5 * a.phi_now
        if r_i - 0.5 * a.phi_now < 0.0:
            violations += 1
        a_i = m_n
        y = a.state.velocity
        y_next = y + dt * ((-r_i + slot) * y - (a_i / (m_n + params.eps_reg)) * a.state.g_curr)
        x_next = a.state.x_curr + dt * y_next
        a.state = InertialState(
            k=a.state.k + 1,
            x_curr=x_next,
            x_prev=a.state.x_curr,
            f_curr=spec.value(x_next),
            f_prev=a.state.f_curr,
            g_curr=spec.grad(x_next),
            velocity=y_next,
        )
    return violations


def _shift_mass_history(agents: Sequence[Agent]):
    for a in _alive(agents):
        a.mass_prev = a.mass_before
        a.phi_prev = a.phi_now


@dataclass
class StopCriteria:
    tol_f: float = 1e-6
    tol_x: float = 1e-6
    tol_success: float = 1e-4
    max_iterations: int = 10_000


@dataclass
class RunOutcome:
    best_x: Array
    best_f: float
    f_gap: float
    success: bool
    iterations: int
    termination: str
    wall_seconds: float
    trace: EnergyTrace
    flags: dict

    def without_wall_clock(self) -> dict:
        out = {
            "best_x": self.best_x.tolist(),
            "best_f": self.best_f,
            "f_gap": self.f_gap,
            "success": self.success,
            "iterations": self.iterations,
            "termination": self.termination,
            "flags": dict(self.flags),
        }
        return out


def init_agents(
    spec: ObjectiveSpec,
    params: SchemeParams,
    n_agents: int,
    rng: np.random.Generator,
    x0: Optional[Array] = None,
    comm: Optional[CommParams] = None,
) -> list[Agent]:
    """Uniform-box agents with equal masses and the two-point start."""
    if n_agents < 1:
        raise ConfigError("need at least one agent")
    agents = []
    for i in range(n_agents):
        if x0 is not None:
            start = np.asarray(x0[i], dtype=float)
        else:
            start = spec.sample_in_box(rng)
        if params.scheme == Scheme.NESTEROV:
            # the mass-coupled scheme carries an explicit velocity instead
            # of a kicked second point
            state = InertialState(
                k=1,
                x_curr=start.copy(),
                x_prev=start.copy(),
                f_curr=spec.value(start),
                f_prev=spec.value(start),
                g_curr=spec.grad(start),
                velocity=np.zeros(spec.dimension),
            )
        else:
            state = initial_state(spec, start, params.scheme, step=params.step)
        agent = Agent(id=i, state=state, mass=1.0 / n_agents)
        agent.mass_before = agent.mass
        agent.mass_prev = agent.mass
        if params.scheme == Scheme.IMEXRB:
            agent.imex_history = [
                np.concatenate([state.x_curr, state.velocity])
            ]
        agents.append(agent)
    # phi of the initial normalized losses seeds the friction bookkeeping
    comm = comm or CommParams(mass_dt=params.step)
    live = _alive(agents)
    for a, e in zip(live, eta([a.value for a in live])):
        a.phi_prev = comm.phi(e)
    return agents


_DIVERGENCE_LIMIT = 1e12


def sbim_run(
    spec: ObjectiveSpec,
    params: SchemeParams,
    comm: Optional[CommParams] = None,
    *,
    n_agents: int = 10,
    x0: Optional[Array] = None,
    seed: int = 0,
    stop: Optional[StopCriteria] = None,
    solver: Optional[SolverConfig] = None,
    imex_cfg: Optional[ImexConfig] = None,
    nesterov: Optional[SBNesterovParams] = None,
    gd_step_size: Optional[float] = None,
    collect_trace: bool = True,
) -> RunOutcome:
    """Run the full communicate/update/merge loop until the stopping test.

    Determinism: identical seed and configuration give identical outcomes
    (wall-clock aside).  Solver failures terminate the run as a recorded
    failed trial rather than raising.
    """
    t_start = time.perf_counter()
    comm = comm or CommParams()
    if comm.mass_dt is None:
        comm = CommParams(
            p_exponent=comm.p_exponent,
            tol_mass=comm.tol_mass,
            tol_merge=comm.tol_merge,
            mass_dt=params.step,
        )
    stop = stop or StopCriteria()
    solver = solver or SolverConfig()
    if imex_cfg is None:
        imex_cfg = ImexConfig(eps_stab=1e-3 * params.step)
    nesterov = nesterov or SBNesterovParams(step=params.step)
    if gd_step_size is None:
        gd_step_size = params.step**2

    rng = np.random.default_rng(np.random.PCG64(seed))
    agents = init_agents(spec, params, n_agents, rng, x0, comm)
    trace = EnergyTrace()
    flags = {
        "imex_tolerance_not_met": 0,
        "mass_clamped": 0,
        "removed": 0,
        "merged": 0,
        "damping_violations": 0,
        "solver_errors": 0,
    }
    termination = "max-iterations"
    iterations = stop.max_iterations + 1

    for n in range(1, stop.max_iterations + 1):
        try:
            result = communicate(agents, comm)
        except StateError:
            termination = "state-error"
            iterations = n + 1
            break
        flags["mass_clamped"] += len(result.clamped)
        flags["removed"] += len(result.removed)

        failed = False
        for agent in _alive(agents):
            try:
                if params.scheme == Scheme.FD:
                    agent.state = fd_step(spec, params, agent.state, solver)
                elif params.scheme == Scheme.SEMI:
                    agent.state = semi_step(spec, params, agent.state, solver)
                elif params.scheme == Scheme.FB:
                    agent.state = fb_step(spec, params, agent.state, solver)
                elif params.scheme == Scheme.IPAHD:
                    agent.state = ipahd_step(spec, params, agent.state, solver)
                elif params.scheme == Scheme.GD:
                    agent.state = gd_step(spec, gd_step_size, agent.state)
                elif params.scheme == Scheme.IMEXRB:
                    agent.state, info = imexrb_inertial_step(
                        spec, params, imex_cfg, agent.imex_history, agent.state, solver
                    )
                    if not info.tol_met:
                        flags["imex_tolerance_not_met"] += 1
                    agent.imex_history.insert(0, info.u_next.copy())
                    del agent.imex_history[imex_cfg.window:]
            except SolverError:
                flags["solver_errors"] += 1
                failed = True
                break
        if params.scheme == Scheme.NESTEROV and not failed:
            flags["damping_violations"] += sb_nesterov_update(
                spec, agents, nesterov, comm, n, result.i_minus
            )
        _shift_mass_history(agents)
        if failed:
            termination = "solver-error"
            iterations = n + 1
            break

        live = _alive(agents)
        bad = any(
            not np.all(np.isfinite(a.position))
            or np.abs(a.position).max() > _DIVERGENCE_LIMIT
            for a in live
        )
        if bad:
            termination = "diverged"
            iterations = n + 1
            break

        flags["merged"] += len(merge(agents, comm))
        live = _alive(agents)
        best = _argmin_agent(live)

        if collect_trace:
            c_k, d_k = delta_c(params, best.state.k)
            e_fd, v_k = energy_fd(spec, params, best.state)
            se = swarm_energy(live, params.step, f_star=spec.min_value)
            trace.append(
                best.state.k,
                best.value - spec.min_value,
                d_k,
                c_k,
                e_fd,
                0.5 * float(v_k @ v_k),
                se.total_gap if se.total_gap is not None else se.total,
            )

        check = stop_and_success(
            best.state.f_prev,
            best.state.f_curr,
            best.state.x_prev,
            best.state.x_curr,
            spec.min_value,
            tol_f=stop.tol_f,
            tol_x=stop.tol_x,
            tol_success=stop.tol_success,
            agents_alive=len(live),
        )
        if check.stop:
            termination = "converged"
            iterations = n + 1
            break

    live = _alive(agents)
    best = _argmin_agent(live) if live else None
    if best is None:
        best_x, best_f = np.full(spec.dimension, np.nan), float("nan")
    else:
        best_x, best_f = best.position.copy(), best.value
    f_gap = best_f - spec.min_value
    success = np.isfinite(best_f) and abs(best_f - spec.min_value) <= stop.tol_success
    return RunOutcome(
        best_x=best_x,
        best_f=best_f,
        f_gap=f_gap,
        success=bool(success),
        iterations=min(iterations, stop.max_iterations + 1),
        termination=termination,
        wall_seconds=time.perf_counter() - t_start,
        trace=trace,
        flags=flags,
    )
