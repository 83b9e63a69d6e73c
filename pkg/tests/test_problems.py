import math

import numpy as np
import pytest

from mlpicard.problems import (
    PROBLEMS,
    build_problem,
    heat_quadratic,
    manufactured_sine,
    pde_residual_fd,
)
from mlpicard.selfcheck import lipschitz_margins


def test_heat_exact_point_values():
    # oracle: |x|^2 + d (T - t) with gradient 2x
    problem = heat_quadratic(2, 1.0)
    out = problem.exact(0.0, np.array([[1.0, 1.0]]))[0]
    assert out[0] == pytest.approx(4.0, abs=1e-15)
    assert out[1:] == pytest.approx([2.0, 2.0], abs=1e-15)


def test_heat_terminal_matches_exact_at_horizon():
    problem = heat_quadratic(3, 0.7)
    rng = np.random.default_rng(1)
    x = rng.uniform(-2, 2, size=(50, 3))
    np.testing.assert_array_equal(problem.exact(problem.horizon, x)[:, 0], problem.terminal(x))


def test_heat_lipschitz_constants_from_box():
    problem = heat_quadratic(4, 1.0, box_radius=2.5)
    assert np.all(problem.lip_g == 5.0)
    assert np.all(problem.lip_f == 0.0)


def test_heat_residual_cancels():
    # du/dt = -d and (1/2) lap = +d cancel; finite differences see ~0
    problem = heat_quadratic(2, 1.0)
    rng = np.random.default_rng(3)
    for _ in range(100):
        t = float(rng.uniform(1e-3, 1 - 1e-3))
        x = rng.uniform(-2, 2, size=(1, 2))
        assert abs(float(pde_residual_fd(problem, t, x)[0])) <= 1e-6


def test_sine_terminal_matches_exact_at_horizon():
    problem = manufactured_sine(2, c=0.5)
    rng = np.random.default_rng(5)
    x = rng.uniform(-3, 3, size=(100, 2))
    np.testing.assert_array_equal(problem.exact(problem.horizon, x)[:, 0], problem.terminal(x))


def test_sine_residual_analytic_cancellation():
    # direct evaluation of the construction: du/dt + lap/2 + f vanishes to rounding
    d, c = 3, 0.4
    problem = manufactured_sine(d, c=c, beta=0.5, gamma=0.5)
    rng = np.random.default_rng(8)
    t = rng.uniform(0.0, 1.0, size=1000)
    x = rng.uniform(-3.0, 3.0, size=(1000, d))
    worst = 0.0
    for ti, xi in zip(t, x):
        phi = ti + c * xi.sum()
        du_dt = math.cos(phi)
        half_lap = -0.5 * d * c * c * math.sin(phi)
        e = problem.exact(float(ti), xi[None, :])
        f = float(problem.nonlinearity(float(ti), xi[None, :], e[:, 0], e[:, 1:])[0])
        worst = max(worst, abs(du_dt + half_lap + f))
    assert worst <= 1e-12


def test_sine_residual_finite_differences():
    problem = manufactured_sine(2, c=0.5)
    rng = np.random.default_rng(13)
    for _ in range(1000):
        t = float(rng.uniform(1e-3, 1 - 1e-3))
        x = rng.uniform(-2, 2, size=(1, 2))
        assert abs(float(pde_residual_fd(problem, t, x)[0])) <= 1e-6


def test_sine_case_without_nonlinearity_is_source_only():
    problem = manufactured_sine(2, c=0.5, beta=0.0, gamma=0.0)
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, size=(20, 2))
    w1, w2 = rng.normal(size=(2, 20))
    z1, z2 = rng.normal(size=(2, 20, 2))
    f1 = problem.nonlinearity(0.3, x, w1, z1)
    f2 = problem.nonlinearity(0.3, x, w2, z2)
    np.testing.assert_array_equal(f1, f2)
    assert np.all(problem.lip_f == 0.0)


def test_sine_lipschitz_structure():
    problem = manufactured_sine(3, c=0.25, beta=0.7, gamma=0.2)
    assert problem.lip_f[0] == 0.7
    assert problem.lip_f[1] == 0.2
    assert np.all(problem.lip_f[2:] == 0.0)
    assert np.all(problem.lip_g == 0.25)


def test_lipschitz_spot_checks_hold():
    rng = np.random.default_rng(23)
    for name in PROBLEMS:
        problem = build_problem(name, dim=2)
        f_margin, g_margin = lipschitz_margins(problem, rng, pairs=10_000)
        assert f_margin <= 1e-12
        assert g_margin <= 1e-12


def test_sine_deriv_ratio_dominates_true_growth():
    # oracle: the heat operator acts on span{sin, cos} as the 2x2 matrix
    # [[-kappa, -1], [1, -kappa]]; iterate it for the true sup norms
    d, c = 2, 0.5
    problem = manufactured_sine(d, c=c)
    kappa = 0.5 * d * c * c
    mat = np.array([[-kappa, -1.0], [1.0, -kappa]])
    vec = np.array([1.0, 0.0])
    amp = max(1.0, c)
    for k in range(0, 80):
        true_sup = amp * float(np.linalg.norm(vec))
        ratio = true_sup / math.exp(0.75 * math.lgamma(k + 1))
        assert ratio <= problem.deriv_ratio * (1.0 + 1e-12)
        vec = mat @ vec
    assert math.isfinite(problem.deriv_ratio)


def test_registry_and_overrides():
    problem = build_problem("manufactured_sine", dim=4, beta=0.0)
    assert problem.lip_f[0] == 0.0
    assert problem.lip_g[0] == pytest.approx(0.25)  # default c = 1/dim
    with pytest.raises(ValueError):
        build_problem("manufactured_sine", dim=2, nope=1.0)
    with pytest.raises(ValueError):
        build_problem("unknown", dim=2)


def test_builder_validation():
    with pytest.raises(ValueError):
        heat_quadratic(0, 1.0)
    with pytest.raises(ValueError):
        manufactured_sine(2, horizon=-1.0)
    with pytest.raises(ValueError):
        manufactured_sine(2, beta=-0.5)
