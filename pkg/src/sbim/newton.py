"""Damped Newton root solver shared by the implicit schemes and the prox."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

Array = np.ndarray


class NewtonResult(NamedTuple):
    x: Array
    residual_norm: float
    converged: bool
    iterations: int


_BACKTRACK = tuple(0.5**j for j in range(9))  # 1, 1/2, ..., 1/256


def plain_newton(
    residual: Callable[[Array], Array],
    jacobian: Callable[[Array], Array],
    x0: Array,
    tol: float,
    max_iter: int,
) -> NewtonResult:
    """Undamped Newton: full steps, no globalization.

    On a multiwell residual the iterates can wander across basins before
    entering one quadratically; the root it returns is then not generally
    the nearest one.  Fails cleanly on non-finite iterates.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    r = residual(x)
    nr = float(np.linalg.norm(r))
    for it in range(max_iter):
        if nr <= tol:
            return NewtonResult(x, nr, True, it)
        try:
            step = np.linalg.solve(jacobian(x), -r)
        except np.linalg.LinAlgError:
            return NewtonResult(x, nr, False, it)
        x = x + step
        r = residual(x)
        nr = float(np.linalg.norm(r))
        if not np.isfinite(nr):
            return NewtonResult(x, float("inf"), False, it)
    return NewtonResult(x, nr, nr <= tol, max_iter)


def damped_newton(
    residual: Callable[[Array], Array],
    jacobian: Callable[[Array], Array],
    x0: Array,
    tol: float,
    max_iter: int,
) -> NewtonResult:
    """Solve residual(x) = 0 by Newton steps with backtracking.

    Each step is tried at geometrically shrinking lengths until the
    residual norm decreases; if no length along the Newton direction
    helps, the Jacobian is Levenberg-regularized and the search repeats.
    This stays usable on indefinite Jacobians and oscillatory residuals
    where the full step overshoots the nearest root.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    r = residual(x)
    nr = float(np.linalg.norm(r))
    it = 0
    while it < max_iter and nr > tol:
        jac = jacobian(x)
        scale = max(float(np.abs(jac).max()), 1.0)
        lam = 0.0
        accepted = False
        for _ in range(12):
            try:
                step = np.linalg.solve(jac + lam * np.eye(n), -r)
            except np.linalg.LinAlgError:
                lam = max(10.0 * lam, 1e-10 * scale)
                continue
            for t in _BACKTRACK:
                x_new = x + t * step
                r_new = residual(x_new)
                nr_new = float(np.linalg.norm(r_new))
                if np.isfinite(nr_new) and nr_new < nr:
                    x, r, nr = x_new, r_new, nr_new
                    accepted = True
                    break
            if accepted:
                break
            lam = max(10.0 * lam, 1e-10 * scale)
        it += 1
        if not accepted:
            break
    return NewtonResult(x, nr, nr <= tol, it)
