"""Benchmark objectives with exact gradient and Hessian-vector oracles.

Six functions are provided under canonical names: ``sphere``,
``modified-sphere``, ``sum-squares``, ``rotated-hyper-ellipsoid``,
``ackley`` and ``rastrigin``.  Every function is parameterized by a
dimension ``d``, a shift ``B`` (the minimizer is translated to ``B*ones``)
and an additive offset ``C``.  The stored minimum value is always obtained
by evaluating the function at the stored minimizer, never hand-entered;
for the Ackley variant used here that value is not zero.

The Ackley radial term is non-differentiable at the shifted origin.  The
oracles return the symmetric (zero) subgradient contribution for that term
exactly at the kink, so the stored minimizer is a stationary point of the
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError

Array = np.ndarray

OBJECTIVE_NAMES = (
    "sphere",
    "modified-sphere",
    "sum-squares",
    "rotated-hyper-ellipsoid",
    "ackley",
    "rastrigin",
)

_QUADRATIC = {"sphere", "modified-sphere", "sum-squares", "rotated-hyper-ellipsoid"}


@dataclass(frozen=True)
class ObjectiveSpec:
    """Immutable description of one benchmark instance.

    All oracles are pure functions of (spec, inputs) and safe to call from
    any number of workers.
    """

    kind: str
    dimension: int
    lower: Array
    upper: Array
    shift: float
    offset: float
    minimizer: Array = field(repr=False)
    min_value: float = 0.0
    lipschitz_grad_hint: Optional[float] = None
    quadratic: bool = False

    def _check(self, x: Array, name: str = "x") -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionError(
                f"{name} has shape {x.shape}, expected ({self.dimension},) "
                f"for {self.kind}"
            )
        return x

    def value(self, x: Array) -> float:
        x = self._check(x)
        return _VALUE[self.kind](self, x - self.shift) + self.offset

    def grad(self, x: Array) -> Array:
        x = self._check(x)
        return _GRAD[self.kind](self, x - self.shift)

    def hess_vec(self, x: Array, v: Array) -> Array:
        x = self._check(x)
        v = self._check(v, "v")
        return _HESSVEC[self.kind](self, x - self.shift, v)

    def hess_dense(self, x: Array) -> Array:
        """Dense Hessian assembled column-by-column from hess_vec."""
        d = self.dimension
        eye = np.eye(d)
        return np.column_stack([self.hess_vec(x, eye[:, j]) for j in range(d)])

    def sample_in_box(self, rng: np.random.Generator) -> Array:
        """Uniform point in the box by per-coordinate inverse transform."""
        u = rng.random(self.dimension)
        return self.lower + (self.upper - self.lower) * u


# ---------------------------------------------------------------------------
# formula implementations (z = x - B*ones)

def _sphere_value(spec, z):
    return float(z @ z)


def _sphere_grad(spec, z):
    return 2.0 * z


def _sphere_hessvec(spec, z, v):
    return 2.0 * v


def _ms_weights(d):
    # 2^i for i = 1..d
    return np.ldexp(np.ones(d), np.arange(1, d + 1))


def _modified_sphere_value(spec, z):
    w = _ms_weights(spec.dimension)
    return float((z * z @ w - 1745.0) / 899.0)


def _modified_sphere_grad(spec, z):
    w = _ms_weights(spec.dimension)
    return 2.0 * w * z / 899.0


def _modified_sphere_hessvec(spec, z, v):
    w = _ms_weights(spec.dimension)
    return 2.0 * w * v / 899.0


def _sum_squares_value(spec, z):
    i = np.arange(1, spec.dimension + 1)
    return float(i @ (z * z))


def _sum_squares_grad(spec, z):
    i = np.arange(1, spec.dimension + 1)
    return 2.0 * i * z


def _sum_squares_hessvec(spec, z, v):
    i = np.arange(1, spec.dimension + 1)
    return 2.0 * i * v


def _rhe_weights(d):
    # coordinate j appears in every partial sum with index >= j
    return np.arange(d, 0, -1, dtype=float)


def _rhe_value(spec, z):
    return float(_rhe_weights(spec.dimension) @ (z * z))


def _rhe_grad(spec, z):
    return 2.0 * _rhe_weights(spec.dimension) * z


def _rhe_hessvec(spec, z, v):
    return 2.0 * _rhe_weights(spec.dimension) * v


def _ackley_parts(spec, z):
    d = spec.dimension
    r = float(np.linalg.norm(z))
    a = 0.2 / math.sqrt(d)
    s = float(np.sum(np.cos(2.0 * math.pi * z)))
    return d, r, a, s


def _ackley_value(spec, z):
    d, r, a, s = _ackley_parts(spec, z)
    return float(-20.0 * math.exp(-a * r) - math.exp(-s / math.sqrt(d)) + 20.0 + math.e)


def _ackley_grad(spec, z):
    d, r, a, s = _ackley_parts(spec, z)
    g = np.zeros(spec.dimension)
    if r > 0.0:
        g += 20.0 * a * math.exp(-a * r) * z / r
    q = (2.0 * math.pi / math.sqrt(d)) * np.sin(2.0 * math.pi * z)
    g += -math.exp(-s / math.sqrt(d)) * q
    return g


def _ackley_hessvec(spec, z, v):
    d, r, a, s = _ackley_parts(spec, z)
    out = np.zeros(spec.dimension)
    if r > 0.0:
        zh = z / r
        zv = float(zh @ v)
        c = 20.0 * a * math.exp(-a * r)
        out += c * ((v - zh * zv) / r - a * zh * zv)
    eq = math.exp(-s / math.sqrt(d))
    q = (2.0 * math.pi / math.sqrt(d)) * np.sin(2.0 * math.pi * z)
    qdiag = (4.0 * math.pi**2 / math.sqrt(d)) * np.cos(2.0 * math.pi * z)
    out += -eq * (q * float(q @ v) + qdiag * v)
    return out


def _rastrigin_value(spec, z):
    d = spec.dimension
    return float(np.sum(z * z - 10.0 * np.cos(2.0 * math.pi * z) + 10.0) / d)


def _rastrigin_grad(spec, z):
    d = spec.dimension
    return (2.0 * z + 20.0 * math.pi * np.sin(2.0 * math.pi * z)) / d


def _rastrigin_hessvec(spec, z, v):
    d = spec.dimension
    return (2.0 + 40.0 * math.pi**2 * np.cos(2.0 * math.pi * z)) * v / d


_VALUE: dict[str, Callable] = {
    "sphere": _sphere_value,
    "modified-sphere": _modified_sphere_value,
    "sum-squares": _sum_squares_value,
    "rotated-hyper-ellipsoid": _rhe_value,
    "ackley": _ackley_value,
    "rastrigin": _rastrigin_value,
}

_GRAD: dict[str, Callable] = {
    "sphere": _sphere_grad,
    "modified-sphere": _modified_sphere_grad,
    "sum-squares": _sum_squares_grad,
    "rotated-hyper-ellipsoid": _rhe_grad,
    "ackley": _ackley_grad,
    "rastrigin": _rastrigin_grad,
}

_HESSVEC: dict[str, Callable] = {
    "sphere": _sphere_hessvec,
    "modified-sphere": _modified_sphere_hessvec,
    "sum-squares": _sum_squares_hessvec,
    "rotated-hyper-ellipsoid": _rhe_hessvec,
    "ackley": _ackley_hessvec,
    "rastrigin": _rastrigin_hessvec,
}


def _box(kind: str, dim: int, shift: float) -> tuple[Array, Array]:
    halves = {
        "sphere": 5.12,
        "modified-sphere": 5.12,
        "sum-squares": 10.0,
        "rotated-hyper-ellipsoid": 65.536,
    }
    if kind in halves:
        w = halves[kind]
        return -w * np.ones(dim), w * np.ones(dim)
    # nonconvex functions: initialization window centered on the minimizer
    return (shift - 4.0) * np.ones(dim), (shift + 4.0) * np.ones(dim)


def _lipschitz_hint(kind: str, dim: int) -> Optional[float]:
    if kind == "sphere":
        return 2.0
    if kind == "modified-sphere":
        return 2.0 ** dim * 2.0 / 899.0
    if kind in ("sum-squares", "rotated-hyper-ellipsoid"):
        return 2.0 * dim
    return None


def make_objective(
    name: str, dim: int, shift_b: float = 0.0, offset_c: float = 0.0
) -> ObjectiveSpec:
    """Build one of the six benchmark objectives by canonical name."""
    if name not in OBJECTIVE_NAMES:
        raise ValueError(f"unknown objective {name!r}; choose from {OBJECTIVE_NAMES}")
    if dim < 1:
        raise ValueError("dimension must be a positive integer")
    lower, upper = _box(name, dim, shift_b)
    minimizer = shift_b * np.ones(dim)
    spec = ObjectiveSpec(
        kind=name,
        dimension=dim,
        lower=lower,
        upper=upper,
        shift=shift_b,
        offset=offset_c,
        minimizer=minimizer,
        min_value=0.0,
        lipschitz_grad_hint=_lipschitz_hint(name, dim),
        quadratic=name in _QUADRATIC,
    )
    # F* is stored by evaluation at x*, never assumed
    object.__setattr__(spec, "min_value", spec.value(minimizer))
    return spec


@dataclass
class FdReport:
    """Finite-difference comparison of the analytic oracles."""

    grad_rel_err: float
    hess_rel_err: float
    degenerate_step: bool = False


def fd_check(
    spec: ObjectiveSpec, x: Array, step: float, v: Optional[Array] = None
) -> FdReport:
    """Compare analytic gradient/Hessian-vector against central differences.

    Report-only: a non-positive step is flagged as degenerate instead of
    raising.
    """
    x = spec._check(x)
    if not step > 0.0:
        return FdReport(float("nan"), float("nan"), degenerate_step=True)
    d = spec.dimension
    g_fd = np.zeros(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        g_fd[j] = (spec.value(x + e) - spec.value(x - e)) / (2.0 * step)
    g = spec.grad(x)
    grad_err = float(np.linalg.norm(g - g_fd) / max(np.linalg.norm(g), 1e-12))

    if v is None:
        v = np.arange(1, d + 1, dtype=float)
    v = np.asarray(v, dtype=float)
    vn = np.linalg.norm(v)
    if vn == 0.0:
        return FdReport(grad_err, float("nan"), degenerate_step=True)
    v = v / vn
    hv_fd = (spec.grad(x + step * v) - spec.grad(x - step * v)) / (2.0 * step)
    hv = spec.hess_vec(x, v)
    hess_err = float(np.linalg.norm(hv - hv_fd) / max(np.linalg.norm(hv), 1e-12))
    return FdReport(grad_err, hess_err)
