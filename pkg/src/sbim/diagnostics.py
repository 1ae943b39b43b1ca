"""Energy functionals, rate estimation and dissipation checks.

Everything here is a pure computation over immutable inputs; callers may
evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, SbimError

Array = np.ndarray


class EstimateError(SbimError, ValueError):
    """Too few usable points to form a rate estimate."""


def delta_c(params, k: int) -> tuple[float, float]:
    """Scaling coefficients of the discrete Lyapunov energy at step k.

    C_k = gamma_{k+1} + k (gamma_{k+1} - gamma_k) - beta_k k h
    delta_k = -C_k h (k + 1)
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    h = params.step
    g_k = params.gamma(k)
    g_k1 = params.gamma(k + 1)
    c_k = g_k1 + k * (g_k1 - g_k) - params.beta(k) * k * h
    return c_k, -c_k * h * (k + 1)


def energy_fd(spec, params, state, k: Optional[int] = None) -> tuple[float, Array]:
    """Discrete Lyapunov energy E^k and its generalized velocity v_k.

    v_k = (alpha-1)(x^k - x*) - alpha (F^k - F*) ones
          + k (x^k - x^{k-1} + gamma_k h grad F^k)

    The scalar value-gap term is broadcast over coordinates with the same
    all-ones convention used by the discrete schemes.
    """
    if k is None:
        k = state.k
    alpha, h = params.alpha, params.step
    f_gap = state.f_curr - spec.min_value
    ones = np.ones(state.dim)
    v_k = (
        (alpha - 1.0) * (state.x_curr - spec.minimizer)
        - alpha * f_gap * ones
        + k * (state.x_curr - state.x_prev + params.gamma(k) * h * state.g_curr)
    )
    _, d_k = delta_c(params, k)
    return d_k * f_gap + 0.5 * float(v_k @ v_k), v_k


@dataclass
class SwarmEnergyReport:
    """Per-agent mechanical energies and their total.

    ``per_agent`` uses the raw objective value; ``per_agent_gap`` uses the
    value gap against the known minimum (emitted when f_star is given).
    Agents without any velocity information are flagged.
    """

    agent_ids: list[int]
    per_agent: list[float]
    total: float
    per_agent_gap: Optional[list[float]] = None
    total_gap: Optional[float] = None
    kinetic_absent: list[int] = field(default_factory=list)


def swarm_energy(
    agents: Iterable, h: float, a_rule: str = "mass", f_star: Optional[float] = None
) -> SwarmEnergyReport:
    """E_i = 1/2 m_i ||v_i||^2 + a_i F(x_i) summed over live agents.

    The velocity is the agent's explicit velocity when it carries one,
    otherwise the backward difference of its two stored positions.
    With the default rule the potential scaling a_i equals the mass.
    """
    ids, energies, gaps, absent = [], [], [], []
    for agent in agents:
        if not agent.alive:
            continue
        state = agent.state
        if state.velocity is not None:
            v = state.velocity
        elif state.x_prev is not None:
            v = (state.x_curr - state.x_prev) / h
        else:
            v = None
        a_i = agent.mass if a_rule == "mass" else 1.0
        kinetic = 0.0
        if v is None:
            absent.append(agent.id)
        else:
            kinetic = 0.5 * agent.mass * float(v @ v)
        ids.append(agent.id)
        energies.append(kinetic + a_i * state.f_curr)
        if f_star is not None:
            gaps.append(kinetic + a_i * (state.f_curr - f_star))
    report = SwarmEnergyReport(ids, energies, float(sum(energies)))
    if f_star is not None:
        report.per_agent_gap = gaps
        report.total_gap = float(sum(gaps))
    report.kinetic_absent = absent
    return report


@dataclass
class RateEstimate:
    """Per-step decay exponents p_k against delta_k and their mean."""

    p_k: Array
    p_bar: float
    iterations: int
    exact_convergence: bool = False


GAP_FLOOR = 1e-15


def rate_estimate(f_gaps: Sequence[float], deltas: Sequence[float]) -> RateEstimate:
    """Fit F^k - F* ~ C / delta_k^p locally and average the exponents.

    Steps where the gap is at the floor (exact convergence in floating
    point) or the delta ratio equals one are excluded from the sequence
    and from the average.
    """
    gaps = np.asarray(f_gaps, dtype=float)
    ds = np.asarray(deltas, dtype=float)
    if gaps.shape != ds.shape:
        raise ConfigError("f_gaps and deltas must have equal length")
    if np.any(ds <= 0):
        raise ConfigError("deltas must be positive")
    exact = bool(np.any(gaps <= GAP_FLOOR))
    ps = []
    for k in range(gaps.size - 1):
        if gaps[k] <= GAP_FLOOR or gaps[k + 1] <= GAP_FLOOR:
            continue
        ratio = ds[k + 1] / ds[k]
        if ratio == 1.0:
            continue
        ps.append(math.log(gaps[k] / gaps[k + 1]) / math.log(ratio))
    if not ps:
        raise EstimateError("fewer than 2 usable points for the rate estimate")
    p_arr = np.array(ps)
    return RateEstimate(p_arr, float(p_arr.mean()), len(ps), exact)


@dataclass
class DissipationReport:
    violations: list[int]
    max_rise: float


ABS_FLOOR = 1e-12


def dissipation_check(
    energies: Sequence[float], rel_tol: float, ks: Optional[Sequence[int]] = None
) -> DissipationReport:
    """Flag every step where the energy rises beyond tolerance.

    A step k is a violation when E_{k+1} > E_k (1 + rel_tol) + abs_floor.
    ``ks`` optionally labels the energies; defaults to 1-based indices.
    """
    e = np.asarray(energies, dtype=float)
    if e.size < 2:
        raise ConfigError("dissipation check needs a trace of length >= 2")
    if ks is None:
        ks_arr = np.arange(1, e.size + 1)
    else:
        ks_arr = np.asarray(ks)
    violations = []
    max_rise = 0.0
    for i in range(e.size - 1):
        rise = e[i + 1] - e[i]
        max_rise = max(max_rise, rise)
        if e[i + 1] > e[i] * (1.0 + rel_tol) + ABS_FLOOR:
            violations.append(int(ks_arr[i]))
    return DissipationReport(violations, float(max_rise))


@dataclass
class StopReport:
    stop: bool
    success: bool


def stop_and_success(
    f_prev: float,
    f_curr: float,
    x_prev: Array,
    x_curr: Array,
    f_star: float,
    tol_f: float = 1e-6,
    tol_x: float = 1e-6,
    tol_success: float = 1e-4,
    agents_alive: Optional[int] = None,
) -> StopReport:
    """Joint value/position stopping test plus the success criterion.

    In swarm mode (agents_alive given) stopping additionally requires the
    population to have collapsed to a single agent.
    """
    stop = (
        abs(f_curr - f_prev) <= tol_f
        and float(np.linalg.norm(np.asarray(x_curr) - np.asarray(x_prev))) <= tol_x
    )
    if agents_alive is not None:
        stop = stop and agents_alive == 1
    success = abs(f_curr - f_star) <= tol_success
    return StopReport(stop, success)


@dataclass
class EnergyTrace:
    """Per-step diagnostic series collected while a run progresses."""

    ks: list[int] = field(default_factory=list)
    f_gap: list[float] = field(default_factory=list)
    delta_k: list[float] = field(default_factory=list)
    c_k: list[float] = field(default_factory=list)
    energy_fd: list[float] = field(default_factory=list)
    kinetic: list[float] = field(default_factory=list)
    total_swarm_energy: list[float] = field(default_factory=list)

    def append(self, k, f_gap, delta, c, energy, kinetic, total_swarm):
        self.ks.append(int(k))
        self.f_gap.append(float(f_gap))
        self.delta_k.append(float(delta))
        self.c_k.append(float(c))
        self.energy_fd.append(float(energy))
        self.kinetic.append(float(kinetic))
        self.total_swarm_energy.append(float(total_swarm))

    def __len__(self):
        return len(self.ks)

    def p_k_series(self) -> list[float]:
        """Per-step rate exponents aligned with ks (NaN where excluded)."""
        out = [float("nan")] * len(self.ks)
        for i in range(len(self.ks) - 1):
            g0, g1 = self.f_gap[i], self.f_gap[i + 1]
            d0, d1 = self.delta_k[i], self.delta_k[i + 1]
            if g0 > GAP_FLOOR and g1 > GAP_FLOOR and d0 > 0 and d1 > 0 and d1 != d0:
                out[i] = math.log(g0 / g1) / math.log(d1 / d0)
        return out
