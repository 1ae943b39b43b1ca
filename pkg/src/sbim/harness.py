"""Seeded experiment driver: convergence sweeps and swarm batches.

Both experiment families share one configuration object.  Convergence
mode runs a single agent per step size and estimates the decay exponent
of the value gap against the energy scaling delta_k; swarm mode runs
seeded independent trials of the full communicate/update/merge loop and
aggregates success statistics.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .diagnostics import (
    EnergyTrace,
    EstimateError,
    delta_c,
    energy_fd,
    rate_estimate,
    stop_and_success,
)
from .errors import ConfigError, SolverError
from .imexrb import ImexConfig
from .integrators import (
    ConstantSchedule,
    InverseKSchedule,
    Scheme,
    SchemeParams,
    SolverConfig,
    fb_step,
    fd_step,
    gd_step,
    imexrb_inertial_step,
    initial_state,
    ipahd_step,
    nesterov_step,
    semi_step,
)
from .objectives import ObjectiveSpec, make_objective
from .seeding import trial_seed
from .swarm import CommParams, SBNesterovParams, StopCriteria, sbim_run

Array = np.ndarray

DEFAULT_H_SWEEP = [1.0, 0.5, 0.25, 0.125, 1 / 16, 1 / 32, 1 / 64, 1 / 128]


@dataclass
class ExperimentConfig:
    """Everything one experiment needs, CLI- and JSON-addressable."""

    function: str = "sphere"
    dim: int = 1
    shift_b: float = 0.0
    offset_c: float = 0.0
    scheme: str = "fd"
    mode: str = "converge"  # converge | swarm | energy-trace
    alpha: float = 2.0
    step: float = 1.0
    gamma: float = 200.0
    beta_scale: float = 500.0
    imex_eps: Optional[float] = None  # default: 1e-3 * step
    imex_max_inner: int = 20
    gd_step: Optional[float] = None  # default: step**2
    agents: int = 10
    p_exponent: float = 1.0
    tol_mass: float = 1e-6
    tol_merge: float = 1e-3
    trials: int = 1000
    master_seed: int = 0
    h_sweep: Optional[list] = None
    x0: Union[str, Sequence[float], None] = None
    tol_f: float = 1e-6
    tol_x: float = 1e-6
    tol_success: float = 1e-4
    max_iterations: int = 20_000

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode not in ("converge", "swarm", "energy-trace"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        self.scheme = Scheme(self.scheme).value
        if self.h_sweep is not None and any(h <= 0 for h in self.h_sweep):
            raise ConfigError("every step in h_sweep must be positive")

    def objective(self) -> ObjectiveSpec:
        return make_objective(self.function, self.dim, self.shift_b, self.offset_c)

    def scheme_params(self, step: Optional[float] = None) -> SchemeParams:
        h = self.step if step is None else step
        return SchemeParams(
            alpha=self.alpha,
            step=h,
            gamma=ConstantSchedule(self.gamma),
            beta=InverseKSchedule(self.beta_scale, h),
            scheme=Scheme(self.scheme),
        )

    def imex_config(self, step: Optional[float] = None) -> ImexConfig:
        h = self.step if step is None else step
        eps = self.imex_eps if self.imex_eps is not None else 1e-3 * h
        return ImexConfig(eps_stab=eps, max_inner=self.imex_max_inner)

    def comm_params(self) -> CommParams:
        return CommParams(
            p_exponent=self.p_exponent,
            tol_mass=self.tol_mass,
            tol_merge=self.tol_merge,
            mass_dt=self.step,
        )

    def stop_criteria(self) -> StopCriteria:
        return StopCriteria(
            tol_f=self.tol_f,
            tol_x=self.tol_x,
            tol_success=self.tol_success,
            max_iterations=self.max_iterations,
        )

    def start_point(self, spec: ObjectiveSpec) -> Array:
        """Deterministic convergence-test start (every coordinate 3.0)."""
        if self.x0 is None or self.x0 == "uniform-box":
            return 3.0 * np.ones(spec.dimension)
        x = np.asarray(self.x0, dtype=float)
        if x.shape != (spec.dimension,):
            raise ConfigError("x0 has the wrong length")
        return x


@dataclass
class ConvergeOutcome:
    """One single-agent run plus its diagnostics trace."""

    p_bar: float
    p_k: list
    success: bool
    exact_convergence: bool
    iterations: int
    f_gap: float
    termination: str
    wall_seconds: float
    trace: EnergyTrace


def converge_run(
    spec: ObjectiveSpec,
    params: SchemeParams,
    *,
    x0: Array,
    stop: Optional[StopCriteria] = None,
    solver: Optional[SolverConfig] = None,
    imex_cfg: Optional[ImexConfig] = None,
    gd_step_size: Optional[float] = None,
) -> ConvergeOutcome:
    """Drive one scheme from the two-point start to the stopping test."""
    stop = stop or StopCriteria()
    solver = solver or SolverConfig()
    if imex_cfg is None:
        imex_cfg = ImexConfig(eps_stab=1e-3 * params.step)
    if gd_step_size is None:
        gd_step_size = params.step**2
    t0 = time.perf_counter()

    state = initial_state(spec, x0, params.scheme, step=params.step)
    history = None
    if params.scheme == Scheme.IMEXRB:
        history = [np.concatenate([state.x_curr, state.velocity])]

    trace = EnergyTrace()

    def record(st):
        c_k, d_k = delta_c(params, st.k)
        e_fd, v_k = energy_fd(spec, params, st)
        step_vel = (st.x_curr - st.x_prev) / params.step
        mech = 0.5 * float(step_vel @ step_vel) + (st.f_curr - spec.min_value)
        trace.append(
            st.k,
            st.f_curr - spec.min_value,
            d_k,
            c_k,
            e_fd,
            0.5 * float(v_k @ v_k),
            mech,
        )

    record(state)
    termination = "max-iterations"
    s = params.step**2
    for _ in range(stop.max_iterations):
        try:
            if params.scheme == Scheme.FD:
                new = fd_step(spec, params, state, solver)
            elif params.scheme == Scheme.SEMI:
                new = semi_step(spec, params, state, solver)
            elif params.scheme == Scheme.FB:
                new = fb_step(spec, params, state, solver)
            elif params.scheme == Scheme.IPAHD:
                new = ipahd_step(spec, params, state, solver)
            elif params.scheme == Scheme.NESTEROV:
                new = nesterov_step(spec, s, state)
            elif params.scheme == Scheme.GD:
                new = gd_step(spec, gd_step_size, state)
            else:
                new, info = imexrb_inertial_step(
                    spec, params, imex_cfg, history, state, solver
                )
                history.insert(0, info.u_next.copy())
                del history[imex_cfg.window:]
        except SolverError:
            termination = "solver-error"
            break
        record(new)
        if not np.all(np.isfinite(new.x_curr)) or np.abs(new.x_curr).max() > 1e12:
            state = new
            termination = "diverged"
            break
        check = stop_and_success(
            state.f_curr,
            new.f_curr,
            state.x_curr,
            new.x_curr,
            spec.min_value,
            tol_f=stop.tol_f,
            tol_x=stop.tol_x,
            tol_success=stop.tol_success,
        )
        state = new
        if check.stop:
            termination = "converged"
            break

    f_gap = state.f_curr - spec.min_value
    success = (
        np.isfinite(state.f_curr)
        and abs(state.f_curr - spec.min_value) <= stop.tol_success
    )
    try:
        est = rate_estimate(trace.f_gap, trace.delta_k)
        p_bar, p_k, exact = est.p_bar, list(est.p_k), est.exact_convergence
    except EstimateError:
        p_bar, p_k, exact = float("nan"), [], True
    return ConvergeOutcome(
        p_bar=p_bar,
        p_k=p_k,
        success=bool(success),
        exact_convergence=exact,
        iterations=state.k,
        f_gap=float(f_gap),
        termination=termination,
        wall_seconds=time.perf_counter() - t0,
        trace=trace,
    )


def run_convergence(config: ExperimentConfig) -> list[dict]:
    """One table row per step size of the sweep."""
    if config.mode != "converge":
        raise ConfigError("run_convergence requires mode='converge'")
    sweep = config.h_sweep if config.h_sweep is not None else DEFAULT_H_SWEEP
    spec = config.objective()
    rows = []
    for h in sweep:
        params = config.scheme_params(step=h)
        outcome = converge_run(
            spec,
            params,
            x0=config.start_point(spec),
            stop=config.stop_criteria(),
            imex_cfg=config.imex_config(step=h),
            gd_step_size=config.gd_step,
        )
        rows.append(
            {
                "h": h,
                "scheme": config.scheme,
                "function": config.function,
                "dim": config.dim,
                "p_bar": outcome.p_bar,
                "success": int(outcome.success),
                "iterations": outcome.iterations,
                "f_gap": outcome.f_gap,
                "exact_convergence": int(outcome.exact_convergence),
                "termination": outcome.termination,
                "wall_seconds": outcome.wall_seconds,
            }
        )
    return rows


@dataclass
class TrialRecord:
    """Outcome of one seeded swarm run."""

    seed: int
    iterations: int
    success: bool
    f_gap: float
    wall_seconds: float
    termination: str
    solver_flags: dict = field(default_factory=dict)


# swarm-mode gradient-descent step: near 1/L of the oscillatory benchmarks,
# so agents settle inside their basin within a few passes
SWARM_GD_STEP = 0.0025


def _run_one_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    spec = config.objective()
    seed = trial_seed(config.master_seed, trial)
    gd_step = config.gd_step if config.gd_step is not None else SWARM_GD_STEP
    x0 = None
    if config.x0 is not None and config.x0 != "uniform-box":
        point = np.asarray(config.x0, dtype=float)
        x0 = np.tile(point, (config.agents, 1))
    outcome = sbim_run(
        spec,
        config.scheme_params(),
        config.comm_params(),
        n_agents=config.agents,
        x0=x0,
        seed=seed,
        stop=config.stop_criteria(),
        imex_cfg=config.imex_config(),
        nesterov=SBNesterovParams(step=config.step),
        gd_step_size=gd_step,
        collect_trace=False,
    )
    return TrialRecord(
        seed=seed,
        iterations=outcome.iterations,
        success=outcome.success,
        f_gap=outcome.f_gap,
        wall_seconds=outcome.wall_seconds,
        termination=outcome.termination,
        solver_flags=outcome.flags,
    )


def run_swarm_batch(
    config: ExperimentConfig, workers: int = 1
) -> tuple[dict, list[TrialRecord]]:
    """Independent seeded trials aggregated into one table row.

    The aggregate is a fold over trial index, so the statistics do not
    depend on the execution schedule or worker count.
    """
    if config.mode != "swarm":
        raise ConfigError("run_swarm_batch requires mode='swarm'")
    indices = range(config.trials)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one_trial, [config] * config.trials, indices))
    else:
        records = [_run_one_trial(config, t) for t in indices]

    successes = sum(r.success for r in records)
    solver_errors = sum(r.termination == "solver-error" for r in records)
    row = {
        "param": f"B={config.shift_b:g}",
        "scheme": config.scheme,
        "function": config.function,
        "dim": config.dim,
        "trials": config.trials,
        "successes": successes,
        "success_rate": successes / config.trials,
        "avg_iterations": float(np.mean([r.iterations for r in records])),
        "avg_cpu_seconds": float(np.mean([r.wall_seconds for r in records])),
        "solver_errors": solver_errors,
        "flagged": int(solver_errors > 0.5 * config.trials),
        "master_seed": config.master_seed,
    }
    return row, records


def run_energy_trace(config: ExperimentConfig) -> list[dict]:
    """Per-step diagnostic rows of one single-agent run."""
    if config.mode != "energy-trace":
        raise ConfigError("run_energy_trace requires mode='energy-trace'")
    spec = config.objective()
    params = config.scheme_params()
    outcome = converge_run(
        spec,
        params,
        x0=config.start_point(spec),
        stop=config.stop_criteria(),
        imex_cfg=config.imex_config(),
        gd_step_size=config.gd_step,
    )
    trace = outcome.trace
    p_series = trace.p_k_series()
    rows = []
    for i in range(len(trace)):
        rows.append(
            {
                "k": trace.ks[i],
                "f_gap": trace.f_gap[i],
                "delta_k": trace.delta_k[i],
                "c_k": trace.c_k[i],
                "energy_fd": trace.energy_fd[i],
                "kinetic": trace.kinetic[i],
                "total_swarm_energy": trace.total_swarm_energy[i],
                "p_k": p_series[i],
            }
        )
    return rows


# ---------------------------------------------------------------------------
# persistence

def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)  # shortest round-trip representation
    return str(value)


def export(results: Sequence[dict], path, format: str = "csv") -> None:
    """Write rows as CSV (one header row) or JSON (array of objects).

    Floats are written in shortest round-trip form, so parsing the file
    back recovers the numeric fields exactly.
    """
    rows = list(results)
    if not rows:
        raise ConfigError("nothing to export")
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = list(rows[0].keys())
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(row[key]) for key in header])
    elif format == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown export format {format!r}")


def load_json(path) -> list[dict]:
    with open(path) as fh:
        return json.load(fh)
