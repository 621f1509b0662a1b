"""Tests for the greedy model-driven parameter search."""
import math

import numpy as np
import pytest

from beamsync.analytic import model_step, run_model
from beamsync.errors import ArgumentError, DomainError
from beamsync.optimizer import (
    DELTA_GRID,
    P_GRID,
    SCHEDULE_COLUMNS,
    golden_section_max,
    matching_three_point,
    optimize_step_params,
    run_optimized_model,
)
from beamsync.perturbation import cosine_defects, make_dist, moments


@pytest.mark.parametrize("peak", [0.0, 0.37, 1.3, 3.0])
def test_golden_section_finds_maximum(peak):
    found = golden_section_max(lambda x: -(x - peak) ** 2, 0.0, 3.0, tol=1e-8)
    assert found == pytest.approx(peak, abs=1e-7)


def test_golden_section_on_tiny_interval():
    assert golden_section_max(lambda x: x, 1.0, 1.0 + 1e-9) == pytest.approx(1.0, abs=1e-8)


def test_unknown_family_rejected():
    with pytest.raises(ArgumentError, match="unknown family"):
        optimize_step_params(10.0, 100, "gaussian")


def test_level_outside_domain_rejected():
    with pytest.raises(DomainError):
        optimize_step_params(120.0, 100, "uniform")


@pytest.mark.parametrize("family", ["two_point", "uniform", "three_point"])
def test_full_coherence_is_a_fixed_point(family):
    params, y_next = optimize_step_params(100.0, 100, family)
    assert y_next == 100.0
    assert params.delta0 == DELTA_GRID[0]
    assert params.p == (0.5 if family == "three_point" else None)


@pytest.mark.parametrize("family", ["two_point", "uniform"])
@pytest.mark.parametrize("fraction", [0.05, 0.3, 0.75, 0.95])
def test_optimum_beats_every_grid_point(family, fraction):
    n = 200
    y = fraction * n
    _, y_next = optimize_step_params(y, n, family)
    best_grid = max(model_step(y, n, moments(make_dist(family, float(d)))) for d in DELTA_GRID)
    assert y_next >= best_grid - 1e-12 * n


@pytest.mark.parametrize("fraction", [0.1, 0.6, 0.95])
def test_three_point_optimum_beats_its_grid(fraction):
    n = 200
    y = fraction * n
    _, y_next = optimize_step_params(y, n, "three_point")
    for d in DELTA_GRID[::8]:
        for p in P_GRID:
            assert y_next >= model_step(y, n, moments(make_dist("three_point", float(d), float(p)))) - 1e-12 * n


def test_narrower_perturbations_near_coherence():
    low, _ = optimize_step_params(0.10 * 200, 200, "uniform")
    high, _ = optimize_step_params(0.99 * 200, 200, "uniform")
    assert high.delta0 < low.delta0


@pytest.mark.parametrize("fraction", [0.05, 0.25, 0.5, 0.8, 0.97])
def test_three_point_never_worse_than_uniform(fraction):
    n = 2000
    y = fraction * n
    _, uniform_next = optimize_step_params(y, n, "uniform")
    _, three_next = optimize_step_params(y, n, "three_point")
    assert three_next >= uniform_next - 1e-9 * n


def test_returned_params_reproduce_y_next():
    params, y_next = optimize_step_params(40.0, 100, "uniform")
    assert model_step(40.0, 100, moments(params.dist())) == pytest.approx(y_next, rel=1e-12)
    assert params.moments.c_delta == pytest.approx(moments(params.dist()).c_delta, rel=1e-15)


class TestMatchingThreePoint:

    def test_round_trip(self):
        d1, d2 = cosine_defects("three_point", 0.3, 0.2)
        delta0, p = matching_three_point(float(d1), float(d2))
        assert delta0 == pytest.approx(0.3, rel=1e-10)
        assert p == pytest.approx(0.2, rel=1e-10)

    def test_reproduces_uniform_moments(self):
        d1, d2 = (float(v) for v in cosine_defects("uniform", math.pi / 30))
        delta0, p = matching_three_point(d1, d2)
        m = moments(make_dist("three_point", delta0, p))
        assert m.one_minus_c == pytest.approx(d1, rel=1e-9)
        assert m.one_minus_c2 == pytest.approx(d2, rel=1e-9)

    def test_out_of_reach(self):
        assert matching_three_point(0.0, 0.0) is None
        # wide two-point law: delta0 beyond pi/2
        d1, d2 = (float(v) for v in cosine_defects("two_point", 2.0))
        assert matching_three_point(d1, d2) is None


class TestRunOptimizedModel:

    @pytest.fixture(scope="class")
    def uniform_run(self):
        return run_optimized_model(50, "uniform", 300)

    def test_shapes(self, uniform_run):
        ys, schedule = uniform_run
        assert ys[0] == pytest.approx(math.sqrt(50))
        assert ys.size == 300
        assert len(schedule) == 300
        assert [e.timeslot for e in schedule][:3] == [1, 2, 3]

    def test_levels_follow_predictions(self, uniform_run):
        ys, schedule = uniform_run
        assert np.array_equal(schedule.y_predicted()[:-1], ys[1:])
        assert np.all(np.diff(ys) >= 0)
        assert np.all(ys <= 50.0)

    def test_schedule_is_feasible(self, uniform_run):
        _, schedule = uniform_run
        assert schedule.is_feasible()
        assert np.all(schedule.c_pairs() <= 1.0)

    def test_frame_and_slot_table(self, uniform_run):
        _, schedule = uniform_run
        frame = schedule.to_frame()
        assert list(frame.columns) == SCHEDULE_COLUMNS
        table = schedule.slot_table()
        assert table.dist_at(5).delta0 == pytest.approx(schedule.delta0s()[4])
        assert table.dist_at(10_000).delta0 == pytest.approx(schedule.delta0s()[-1])

    def test_beats_fixed_distribution(self, uniform_run):
        ys, _ = uniform_run
        fixed = run_model(50, make_dist("uniform", math.pi / 30), 300)
        assert np.all(ys >= fixed - 1e-9 * 50)

    def test_stop_fraction(self):
        ys, schedule = run_optimized_model(30, "uniform", 5000, stop_fraction=0.5)
        assert ys[-1] >= 15.0
        assert np.all(ys[:-1] < 15.0)
        assert len(schedule) == ys.size - 1

    def test_three_point_schedule(self):
        ys, schedule = run_optimized_model(20, "three_point", 40)
        assert all(0.0 < e.p <= 0.5 for e in schedule)
        assert schedule.is_feasible()

    def test_rejects_empty_horizon(self):
        with pytest.raises(DomainError):
            run_optimized_model(10, "uniform", 0)
