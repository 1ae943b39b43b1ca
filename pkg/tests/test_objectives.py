import math

import numpy as np
import pytest

from sbim.errors import DimensionError
from sbim.objectives import OBJECTIVE_NAMES, fd_check, make_objective


def brute_value(name, dim, x, b=0.0, c=0.0):
    """Independent re-implementation of the printed formulas (loops, no numpy)."""
    z = [xi - b for xi in x]
    if name == "sphere":
        return sum(zi * zi for zi in z) + c
    if name == "modified-sphere":
        return (sum(z[i] ** 2 * 2 ** (i + 1) for i in range(dim)) - 1745.0) / 899.0 + c
    if name == "sum-squares":
        return sum((i + 1) * z[i] ** 2 for i in range(dim)) + c
    if name == "rotated-hyper-ellipsoid":
        total = 0.0
        for i in range(dim):
            for j in range(i + 1):
                total += z[j] ** 2
        return total + c
    if name == "ackley":
        r = math.sqrt(sum(zi * zi for zi in z))
        s = sum(math.cos(2 * math.pi * zi) for zi in z)
        return (
            -20.0 * math.exp(-0.2 / math.sqrt(dim) * r)
            - math.exp(-s / math.sqrt(dim))
            + 20.0
            + math.e
            + c
        )
    if name == "rastrigin":
        return (
            sum(zi * zi - 10 * math.cos(2 * math.pi * zi) + 10 for zi in z) / dim + c
        )
    raise ValueError(name)


def central_grad(fun, x, h=1e-6):
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def test_sphere_minimum_value():
    spec = make_objective("sphere", 2)
    assert spec.value(np.zeros(2)) == 0.0


def test_modified_sphere_at_origin():
    spec = make_objective("modified-sphere", 10)
    expected = -1745.0 / 899.0
    assert spec.value(np.zeros(10)) == pytest.approx(expected, rel=0, abs=1e-15)
    assert spec.min_value == spec.value(spec.minimizer)


def test_sum_squares_value_and_grad():
    spec = make_objective("sum-squares", 3)
    assert spec.value(np.ones(3)) == 6.0
    spec2 = make_objective("sum-squares", 2)
    np.testing.assert_allclose(spec2.grad(np.ones(2)), [2.0, 4.0], rtol=0, atol=0)


def test_rastrigin_shifted_minimum():
    spec = make_objective("rastrigin", 1, shift_b=15.0)
    assert spec.value(np.array([15.0])) == pytest.approx(0.0, abs=1e-12)
    assert spec.min_value == pytest.approx(0.0, abs=1e-12)


def test_rastrigin_grad_hand_value():
    spec = make_objective("rastrigin", 1)
    # 2*0.5 + 20*pi*sin(pi) = 1
    assert spec.grad(np.array([0.5]))[0] == pytest.approx(1.0, abs=1e-12)


def test_sphere_hess_vec():
    spec = make_objective("sphere", 3)
    np.testing.assert_array_equal(spec.hess_vec(np.ones(3), np.eye(3)[0]), [2, 0, 0])


def test_sum_squares_hess_vec():
    spec = make_objective("sum-squares", 2)
    np.testing.assert_array_equal(spec.hess_vec(np.zeros(2), np.ones(2)), [2.0, 4.0])


def test_rhe_hess_vec_matches_printed_formula():
    # Expected value computed by double finite differencing of the printed
    # double-sum formula, which is diagonal in the coordinates.
    spec = make_objective("rotated-hyper-ellipsoid", 2)
    fun = lambda x: brute_value("rotated-hyper-ellipsoid", 2, x)
    x0 = np.array([0.3, -0.7])
    v = np.array([1.0, 0.0])
    h = 1e-5
    hv_fd = (central_grad(fun, x0 + h * v) - central_grad(fun, x0 - h * v)) / (2 * h)
    hv = spec.hess_vec(x0, v)
    np.testing.assert_allclose(hv, hv_fd, atol=5e-5)
    np.testing.assert_allclose(hv, [4.0, 0.0], atol=1e-12)


def test_values_match_brute_force_everywhere():
    rng = np.random.default_rng(7)
    for name in OBJECTIVE_NAMES:
        for dim in (1, 2, 5):
            b, c = 1.5, -0.25
            spec = make_objective(name, dim, shift_b=b, offset_c=c)
            for _ in range(20):
                x = spec.sample_in_box(rng)
                assert spec.value(x) == pytest.approx(
                    brute_value(name, dim, x, b, c), rel=1e-12, abs=1e-12
                )


def test_gradients_match_fd_100_points_per_function():
    rng = np.random.default_rng(11)
    for name in OBJECTIVE_NAMES:
        spec = make_objective(name, 3)
        for _ in range(100):
            x = spec.sample_in_box(rng)
            report = fd_check(spec, x, 1e-6)
            assert report.grad_rel_err <= 1e-6, (name, x, report.grad_rel_err)
            assert report.hess_rel_err <= 1e-5, (name, x, report.hess_rel_err)


def test_quadratic_hess_vec_is_x_independent():
    rng = np.random.default_rng(3)
    for name in ("sphere", "modified-sphere", "sum-squares", "rotated-hyper-ellipsoid"):
        spec = make_objective(name, 4)
        v = rng.normal(size=4)
        h1 = spec.hess_vec(rng.normal(size=4), v)
        h2 = spec.hess_vec(rng.normal(size=4), v)
        np.testing.assert_array_equal(h1, h2)
        assert spec.quadratic


def test_translation_covariance_bit_for_bit():
    rng = np.random.default_rng(5)
    for name in OBJECTIVE_NAMES:
        b = 2.75
        shifted = make_objective(name, 3, shift_b=b)
        plain = make_objective(name, 3, shift_b=0.0)
        for _ in range(10):
            x = shifted.sample_in_box(rng)
            assert shifted.value(x) == plain.value(x - b * np.ones(3))


def test_min_value_is_evaluated_not_assumed():
    # the printed Ackley variant is not zero at its stored minimizer
    spec = make_objective("ackley", 1)
    assert spec.min_value == spec.value(spec.minimizer)
    assert spec.min_value == pytest.approx(math.e - math.exp(-1.0), abs=1e-12)
    spec10 = make_objective("ackley", 10)
    assert spec10.min_value == pytest.approx(math.e - math.exp(-math.sqrt(10)), abs=1e-12)


def test_ackley_gradient_zero_at_kink():
    spec = make_objective("ackley", 2, shift_b=3.0)
    np.testing.assert_array_equal(spec.grad(3.0 * np.ones(2)), np.zeros(2))


def test_dimension_mismatch_rejected():
    spec = make_objective("sphere", 3)
    with pytest.raises(DimensionError):
        spec.value(np.zeros(2))
    with pytest.raises(DimensionError):
        spec.grad(np.zeros(4))
    with pytest.raises(DimensionError):
        spec.hess_vec(np.zeros(3), np.zeros(2))


def test_fd_check_degenerate_step():
    spec = make_objective("sphere", 2)
    report = fd_check(spec, np.ones(2), 0.0)
    assert report.degenerate_step


def test_lipschitz_hints():
    assert make_objective("sphere", 5).lipschitz_grad_hint == 2.0
    assert make_objective("sum-squares", 5).lipschitz_grad_hint == 10.0
    assert make_objective("rotated-hyper-ellipsoid", 5).lipschitz_grad_hint == 10.0
    assert make_objective("modified-sphere", 3).lipschitz_grad_hint == pytest.approx(
        16.0 / 899.0
    )
    assert make_objective("ackley", 2).lipschitz_grad_hint is None
    assert make_objective("rastrigin", 2).lipschitz_grad_hint is None


def test_box_bounds():
    assert make_objective("sphere", 2).upper[0] == 5.12
    assert make_objective("sum-squares", 2).upper[0] == 10.0
    assert make_objective("rotated-hyper-ellipsoid", 2).upper[0] == 65.536
    ack = make_objective("ackley", 2, shift_b=15.0)
    assert ack.lower[0] == 11.0 and ack.upper[0] == 19.0
