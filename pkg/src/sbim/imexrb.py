"""Self-adaptive implicit-explicit reduced-basis time stepper.

One step advances u(t_n) -> u(t_{n+1}) for a generic ODE u' = g(t, u):
the implicit Euler equation is solved inside the span of recent states
(orthonormalized with a quasi-collinearity floor), the full update is then
formed explicitly, and the basis is enriched with the normalized projection
residual until the relative residual drops below the stability tolerance
or the inner-iteration budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, SolverError
from .newton import damped_newton

Array = np.ndarray


@dataclass
class ImexConfig:
    """Knobs of the reduced-basis inner loop."""

    eps_stab: float = 1e-5
    max_inner: int = 20
    qr_floor: float = 1e-10
    window: int = 20

    def __post_init__(self):
        if not self.eps_stab > 0:
            raise ConfigError("eps_stab must be positive")
        if self.max_inner < 1:
            raise ConfigError("max_inner must be at least 1")
        if not self.qr_floor > 0:
            raise ConfigError("qr_floor must be positive")
        if self.window < 1:
            raise ConfigError("window must be at least 1")


@dataclass
class ImexStepResult:
    u_next: Array
    tol_met: bool
    inner_iterations: int
    residual_ratio: float
    basis_size: int


def orthonormal_columns(columns: Sequence[Array], qr_floor: float) -> Array:
    """Gram-Schmidt with rejection of zero and quasi-collinear columns."""
    basis: list[Array] = []
    dim = len(columns[0])
    for col in columns:
        c = np.asarray(col, dtype=float).copy()
        n0 = float(np.linalg.norm(c))
        if n0 <= qr_floor:
            continue
        for _ in range(2):  # repeated projection for numerical stability
            for b in basis:
                c -= b * float(b @ c)
        nc = float(np.linalg.norm(c))
        if nc <= qr_floor * n0:
            continue
        basis.append(c / nc)
    if not basis:
        return np.zeros((dim, 0))
    return np.column_stack(basis)


def _reduced_jacobian(reduced_residual, ubar, r0):
    m = ubar.size
    jac = np.empty((m, m))
    for j in range(m):
        delta = 1.49e-8 * max(1.0, abs(float(ubar[j])))
        pert = ubar.copy()
        pert[j] += delta
        jac[:, j] = (reduced_residual(pert) - r0) / delta
    return jac


def imexrb_step(
    rhs: Callable[[float, Array], Array],
    t_next: float,
    dt: float,
    u_n: Array,
    window_states: Sequence[Array],
    cfg: ImexConfig,
    newton_tol: float = 1e-12,
    newton_max_iter: int = 100,
) -> ImexStepResult:
    """One IMEX-RB step of the Cauchy problem u' = rhs(t, u).

    ``window_states`` holds the past full states entering the QR
    factorization, most recent first (the current state u_n included).
    Never raises on an exhausted inner budget: the last iterate is returned
    flagged ``tol_met=False``.  A failed reduced Newton solve raises
    SolverError.
    """
    u_n = np.asarray(u_n, dtype=float)
    if not window_states:
        raise ConfigError("window_states must be non-empty")
    basis = orthonormal_columns(window_states, cfg.qr_floor)

    last: ImexStepResult | None = None
    for inner in range(cfg.max_inner):
        m = basis.shape[1]
        if m > 0:
            def reduced_residual(ub):
                return ub - dt * (basis.T @ rhs(t_next, basis @ ub + u_n))

            res = damped_newton(
                reduced_residual,
                lambda ub: _reduced_jacobian(
                    reduced_residual, ub, reduced_residual(ub)
                ),
                np.zeros(m),
                newton_tol,
                newton_max_iter,
            )
            if not res.converged:
                raise SolverError(
                    "reduced implicit-Euler solve did not converge",
                    residual=res.residual_norm,
                )
            ubar = res.x
            implicit_point = basis @ ubar + u_n
        else:
            implicit_point = u_n
        u_next = u_n + dt * rhs(t_next, implicit_point)
        norm_u = float(np.linalg.norm(u_next))
        if basis.shape[1] > 0:
            proj_res = u_next - basis @ (basis.T @ u_next)
        else:
            proj_res = u_next.copy()
        ratio = float(np.linalg.norm(proj_res)) / norm_u if norm_u > 0 else 0.0
        last = ImexStepResult(u_next, ratio <= cfg.eps_stab, inner + 1, ratio, m)
        if last.tol_met:
            return last
        nres = float(np.linalg.norm(proj_res))
        if nres == 0.0:
            return last
        basis = np.column_stack([basis, proj_res / nres])
    assert last is not None
    return last


def integrate(
    rhs: Callable[[float, Array], Array],
    u0: Array,
    dt: float,
    n_steps: int,
    cfg: ImexConfig,
    t0: float = 0.0,
) -> Array:
    """Integrate over n_steps; returns the (n_steps+1, dim) trajectory."""
    u = np.asarray(u0, dtype=float)
    out = np.empty((n_steps + 1, u.size))
    out[0] = u
    history = [u.copy()]
    for n in range(n_steps):
        result = imexrb_step(
            rhs, t0 + (n + 1) * dt, dt, history[0], history, cfg
        )
        history.insert(0, result.u_next.copy())
        del history[cfg.window:]
        out[n + 1] = result.u_next
    return out
