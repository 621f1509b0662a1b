"""Tests for the deterministic convergence model."""
import math

import numpy as np
import pytest
from scipy import integrate

from beamsync.analytic import (
    ModelState,
    g_func,
    initial_level,
    laplacian_cdf,
    laplacian_pdf,
    model_step,
    model_step_closed_form,
    normal_pdf,
    phi0_from_y,
    q_function,
    rayleigh_initial_level,
    require_unit_gains,
    run_model,
    step_with_fixed_sigma,
    variances,
)
from beamsync.errors import DomainError
from beamsync.perturbation import Moments, StepSchedule, make_dist, moments

UNIFORM_PI_30 = moments(make_dist("uniform", math.pi / 30))
UNIFORM_PI_20 = moments(make_dist("uniform", math.pi / 20))


@pytest.mark.parametrize("x", [-2.0, 0.0, 0.5, 1.0, 3.0, 6.0])
def test_q_function_matches_quadrature(x):
    tail, _ = integrate.quad(normal_pdf, x, np.inf, epsabs=1e-13)
    assert q_function(x) == pytest.approx(tail, abs=1e-9)


def test_g_at_zero():
    assert g_func(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_g_is_positive_and_decreasing():
    xs = np.linspace(0.0, 8.0, 200)
    g = g_func(xs)
    assert np.all(g >= 0)
    assert np.all(np.diff(g) <= 0)


def test_g_rejects_negative_argument():
    with pytest.raises(DomainError):
        g_func(-0.1)


def test_phi0_from_y():
    assert phi0_from_y(50.0, 100) == pytest.approx(1.0)
    assert phi0_from_y(100.0, 100) == 0.0


def test_laplacian_pdf_integrates_to_one():
    total, _ = integrate.quad(lambda x: laplacian_pdf(x, 0.4), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_laplacian_cdf():
    assert laplacian_cdf(0.0, 1.0) == pytest.approx(0.5)
    assert laplacian_cdf(-1.0, 1.0) == pytest.approx(0.5 * math.exp(-1.0))
    step = laplacian_cdf(np.array([-0.1, 0.0, 0.1]), 0.0)
    assert list(step) == [0.0, 1.0, 1.0]


def test_require_unit_gains():
    require_unit_gains(None)
    require_unit_gains(np.ones(5))
    with pytest.raises(DomainError, match="unit gains"):
        require_unit_gains([1.0, 0.5])


@pytest.mark.parametrize("y,n", [(0.0, 10), (-1.0, 10), (10.5, 10), (1.0, 0)])
def test_model_step_domain(y, n):
    with pytest.raises(DomainError):
        model_step(y, n, UNIFORM_PI_30)


def test_no_perturbation_is_a_fixed_point():
    """C_delta = C_2delta = 1 gives sigma1 = 0 and F(y) = y."""
    m = Moments(0.0, 0.0)
    assert variances(30.0, 100, m)[0] == 0.0
    assert model_step(30.0, 100, m) == 30.0


def test_two_point_full_coherence_has_no_in_phase_spread():
    m = moments(make_dist("two_point", 0.2))
    assert variances(100.0, 100, m)[0] == pytest.approx(0.0, abs=1e-12)


def test_quadrature_variance_formula():
    m = UNIFORM_PI_30
    _, s2 = variances(50.0, 100, m)
    assert s2 == pytest.approx(50.0 * (1 - 0.2 * m.c_2delta), rel=1e-12)


def test_in_phase_variance_matches_laplacian_sample():
    """sigma1^2 agrees with the per-sensor variance summed over Laplacian phases."""
    rng = np.random.default_rng(2024)
    phis = rng.laplace(0.0, 1.0, 1_000_000)
    m = UNIFORM_PI_30
    c, c2 = m.c_delta, m.c_2delta
    per_sensor = 0.5 + 0.5 * np.cos(2 * phis) * c2 - np.cos(phis) ** 2 * c ** 2
    direct = 100 * np.mean(per_sensor)
    assert variances(50.0, 100, m)[0] == pytest.approx(direct, rel=0.01)


@pytest.mark.parametrize("y", [1.0, 10.0, 50.0, 90.0, 99.9])
@pytest.mark.parametrize("m", [UNIFORM_PI_30, UNIFORM_PI_20, moments(make_dist("three_point", 0.2, 0.1))])
def test_two_forms_of_the_step_agree(y, m):
    assert model_step(y, 100, m) == pytest.approx(model_step_closed_form(y, 100, m), rel=1e-12)


@pytest.mark.parametrize("y", [1.0, 20.0, 70.0, 100.0])
def test_step_never_decreases_and_stays_below_n(y):
    f = model_step(y, 100, UNIFORM_PI_20)
    assert y <= f <= 100.0


@pytest.mark.parametrize("y", [1.0, 5.0, 40.0, 80.0, 99.0])
@pytest.mark.parametrize("delta0", [math.pi / 100, math.pi / 30, math.pi / 10, 0.5, 1.0])
def test_fixed_sigma_slope_lies_between_c_and_one(y, delta0):
    m = moments(make_dist("uniform", delta0))
    sigma1 = math.sqrt(variances(y, 100, m)[0])
    h = 1e-5
    slope = (step_with_fixed_sigma(y + h, sigma1, m) - step_with_fixed_sigma(y - h, sigma1, m)) / (2 * h)
    expected = 1.0 - m.one_minus_c * q_function(y * m.one_minus_c / sigma1)
    assert slope == pytest.approx(expected, abs=1e-8)
    assert m.c_delta < expected <= 1.0
    assert m.c_delta < slope <= 1.0 + 1e-9


def test_model_step_is_a_gaussian_expectation():
    """F(y) = E[max(C y + x1, y)] with x1 ~ N(0, sigma1^2)."""
    n, y = 100, 10.0
    m = UNIFORM_PI_30
    sigma1 = math.sqrt(variances(y, n, m)[0])
    rng = np.random.default_rng(20240501)
    x1 = rng.normal(0.0, sigma1, size=2_000_000)
    samples = np.maximum(m.c_delta * y + x1, y)
    stderr = samples.std() / math.sqrt(samples.size)
    assert abs(samples.mean() - model_step(y, n, m)) < 5 * stderr


@pytest.mark.parametrize("phi0", [0.05, 0.3, 1.0, 2.0])
def test_laplacian_cosine_moments_by_quadrature(phi0):
    def moment(k):
        half, _ = integrate.quad(lambda p: math.cos(k * p) * laplacian_pdf(p, phi0), 0.0, 60 * phi0,
                                 limit=500, epsabs=1e-13, epsrel=1e-12)
        return 2 * half

    assert moment(1) == pytest.approx(1 / (1 + phi0 ** 2), abs=1e-8)
    assert moment(2) == pytest.approx(1 / (1 + 4 * phi0 ** 2), abs=1e-8)


@pytest.mark.parametrize("n", [10, 100, 2000])
@pytest.mark.parametrize("share", [0.05, 0.3, 0.75, 0.99, 1.0])
def test_phi0_reproduces_the_level(n, share):
    y = share * n
    phi0 = phi0_from_y(y, n)
    assert 1 / (1 + phi0 ** 2) == pytest.approx(share, rel=1e-12)


def test_fixed_sigma_step_without_spread():
    assert step_with_fixed_sigma(12.0, 0.0, UNIFORM_PI_20) == 12.0


def test_initial_levels():
    assert initial_level(100) == 10.0
    assert initial_level(100, "rayleigh") == pytest.approx(math.sqrt(100 * math.pi) / 2)
    with pytest.raises(DomainError):
        initial_level(100, "zero")


def test_rayleigh_level_matches_random_phasors():
    rng = np.random.default_rng(7)
    phases = rng.uniform(0, 2 * math.pi, size=(2000, 100))
    strengths = np.abs(np.exp(1j * phases).sum(axis=1))
    assert strengths.mean() == pytest.approx(rayleigh_initial_level(100), rel=0.05)


class TestRunModel:

    def test_starts_at_sqrt_n(self):
        ys = run_model(100, make_dist("uniform", math.pi / 20), 5)
        assert ys[0] == 10.0
        assert len(ys) == 5

    def test_monotone_and_bounded(self):
        ys = run_model(100, make_dist("uniform", math.pi / 20), 2000)
        assert np.all(np.diff(ys) >= 0)
        assert np.all(ys <= 100.0)

    def test_reaches_three_quarters_of_n(self):
        ys = run_model(100, make_dist("uniform", math.pi / 20), 1000)
        assert ys[-1] > 75.0

    def test_follows_step_schedule(self):
        wide, narrow = make_dist("uniform", math.pi / 10), make_dist("uniform", math.pi / 100)
        ys = run_model(50, StepSchedule([(1, wide), (4, narrow)]), 6)
        assert ys[1] == model_step(ys[0], 50, moments(wide))
        assert ys[3] == model_step(ys[2], 50, moments(wide))
        assert ys[4] == model_step(ys[3], 50, moments(narrow))

    def test_rejects_empty_horizon(self):
        with pytest.raises(DomainError):
            run_model(10, make_dist("uniform", 0.1), 0)


def test_model_state_step():
    state = ModelState.at(50.0, 100, UNIFORM_PI_30)
    assert state.phi0 == pytest.approx(1.0)
    following = state.step(UNIFORM_PI_30)
    assert following.y == model_step(50.0, 100, UNIFORM_PI_30)
    assert following.phi0 < state.phi0
