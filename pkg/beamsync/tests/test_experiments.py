"""Tests for the experiment types on small configurations."""
import math

import numpy as np
import pandas as pd
import pytest
import yaml

from beamsync.errors import ConfigError
from beamsync.experiments import get_experiment_class
from beamsync.experiments.base import MANIFEST_NAME, CheckResult
from beamsync.experiments.protocol_experiment import max_relative_gap
from beamsync.main import Experiments, load, load_presets, parse_experiments, run_preset
from beamsync.protocol import TRACE_COLUMNS

UNIFORM = {"family": "uniform", "delta0": "pi/20"}


def run_block(tmp_path, block, name="exp"):
    experiments = Experiments(parse_experiments({"experiments": {name: block}}, "test"), relative_to=tmp_path)
    return experiments.run(name)


def names(result):
    return sorted(p.name for p in result.files)


def read(path):
    return pd.read_csv(path, comment="#")


class TestCheckResult:

    @pytest.mark.parametrize("direction,value,threshold,expected", [
        ("at_least", 1.0, 1.0, True),
        ("at_least", 0.9, 1.0, False),
        ("at_most", 0.0, 0.0, True),
        ("below", 0.1, 0.1, False),
        ("below", 0.05, 0.1, True),
        ("at_least", math.nan, 0.0, False),
    ])
    def test_passed(self, direction, value, threshold, expected):
        assert CheckResult("c", value, threshold, direction).passed is expected

    def test_missing_metric_fails(self, tmp_path):
        block = {"type": "model", "dist": UNIFORM, "horizon": 5, "checks": {"t_fraction": 10}}
        result = run_block(tmp_path, block)
        assert math.isnan(result.checks[0].value)
        assert not result.passed


def test_max_relative_gap():
    a = np.array([1.0, 2.0, 4.0])
    b = np.array([1.0, 1.0, 5.0])
    assert max_relative_gap(a, b, 1) == pytest.approx(0.5)
    assert max_relative_gap(a, b, 3) == pytest.approx(0.2)
    assert math.isnan(max_relative_gap(a, b, 4))


class TestProtocolExperiment:

    BLOCK = {
        "type": "protocol",
        "figure": "figX",
        "n_sensors": 10,
        "dist": UNIFORM,
        "horizon": 500,
        "seeds": 3,
        "params": {"trace_files": 2, "gap_after": 100},
        "checks": {"monotone": 1, "bounded": 1},
    }

    def test_outputs_and_checks(self, tmp_path):
        result = run_block(tmp_path, self.BLOCK)
        assert names(result) == ["manifest.yaml", "mean_trace.csv", "trace_seed1.csv", "trace_seed2.csv"]
        assert result.passed
        trace = read(result.output_dir / "trace_seed1.csv")
        assert list(trace.columns) == ["timeslot", "y", "y_best", "accepted", "delta0_used"]
        assert len(trace) == 500
        assert 0.0 <= result.metrics["seed_gap"] < 1.0

    def test_csv_header_carries_figure_and_seed(self, tmp_path):
        result = run_block(tmp_path, self.BLOCK)
        head = (result.output_dir / "trace_seed2.csv").read_text().splitlines()[:3]
        assert head == ["# figure: figX", "# experiment: exp", "# seed: 2"]

    def test_manifest(self, tmp_path):
        result = run_block(tmp_path, self.BLOCK)
        doc = yaml.safe_load((result.output_dir / MANIFEST_NAME).read_text())
        assert doc["experiment"] == "exp"
        assert doc["figure"] == "figX"
        assert doc["config"]["seeds"] == [1, 2, 3]
        assert "trace_seed1.csv" in doc["files"]
        assert {c["name"] for c in doc["checks"]} == {"monotone", "bounded"}
        assert all(c["passed"] for c in doc["checks"])

    def test_reruns_are_byte_identical(self, tmp_path):
        first = run_block(tmp_path / "a", self.BLOCK)
        second = run_block(tmp_path / "b", self.BLOCK)
        for one, two in zip(sorted(first.files), sorted(second.files)):
            assert one.name == two.name
            assert one.read_bytes() == two.read_bytes()

    def test_seed_override_changes_traces(self, tmp_path):
        experiments = Experiments(parse_experiments({"experiments": {"exp": self.BLOCK}}, "test"), tmp_path)
        base = experiments.run("exp")
        base_trace = (base.output_dir / "trace_seed1.csv").read_bytes()
        shifted = experiments.run("exp", seed=11)
        assert names(shifted) == ["manifest.yaml", "mean_trace.csv", "trace_seed11.csv", "trace_seed12.csv"]
        assert (shifted.output_dir / "trace_seed11.csv").read_bytes() != base_trace


def test_model_experiment(tmp_path):
    block = {"type": "model", "n_sensors": 50, "dist": UNIFORM, "horizon": 800, "checks": {"final_fraction": 0.75}}
    result = run_block(tmp_path, block)
    frame = read(result.output_dir / "model_trace.csv")
    assert frame.y.iloc[0] == pytest.approx(math.sqrt(50))
    assert result.metrics["t_fraction"] <= 800
    assert result.passed


def test_model_trace_uses_protocol_trace_columns(tmp_path):
    block = {"type": "model", "n_sensors": 20, "dist": UNIFORM, "horizon": 30}
    result = run_block(tmp_path, block)
    frame = read(result.output_dir / "model_trace.csv")
    assert list(frame.columns) == TRACE_COLUMNS + ["y_over_n"]
    assert (frame.y_best == frame.y).all()
    assert frame.accepted.isna().all()
    assert frame.delta0_used.to_numpy() == pytest.approx(math.pi / 20)


def test_model_trace_follows_schedule_steps(tmp_path):
    block = {
        "type": "model",
        "n_sensors": 20,
        "schedule": [{"from_slot": 1, "dist": UNIFORM}, {"from_slot": 11, "dist": {"family": "uniform", "delta0": "pi/60"}}],
        "horizon": 20,
    }
    frame = read(run_block(tmp_path, block).output_dir / "model_trace.csv")
    assert frame.delta0_used.iloc[9] == pytest.approx(math.pi / 20)
    assert frame.delta0_used.iloc[10] == pytest.approx(math.pi / 60)


def test_compare_experiment(tmp_path):
    block = {
        "type": "compare",
        "n_sensors": 20,
        "horizon": 300,
        "seeds": 4,
        "params": {"dists": [UNIFORM, {"family": "two_point", "delta0": "pi/30"}], "compare_after": 50},
    }
    result = run_block(tmp_path, block)
    assert names(result) == ["compare_two_point_1.csv", "compare_uniform_0.csv", "manifest.yaml"]
    frame = read(result.output_dir / "compare_uniform_0.csv")
    assert list(frame.columns) == ["timeslot", "model_y", "mc_y_best_mean", "rel_gap"]
    assert len(frame) == 300
    metrics = result.metrics
    assert {"max_rel_gap", "max_rel_gap_uniform", "max_rel_gap_two_point"} <= set(metrics)
    assert metrics["max_rel_gap"] == max(metrics["max_rel_gap_uniform"], metrics["max_rel_gap_two_point"])


def test_compare_uniform_tracks_model_within_five_percent(tmp_path):
    """50-seed mean for N=100, uniform pi/30, within 5% of the Rayleigh-started model from slot 11."""
    block = {
        "type": "compare",
        "n_sensors": 100,
        "horizon": 300,
        "seeds": 50,
        "params": {"dists": [{"family": "uniform", "delta0": "pi/30"}], "model_init": "rayleigh", "compare_after": 11},
        "checks": {"max_rel_gap_uniform": 0.05},
    }
    result = run_block(tmp_path, block)
    assert result.passed, result.metrics


def test_optimized_experiment(tmp_path):
    block = {
        "type": "optimized",
        "n_sensors": 50,
        "horizon": 150,
        "params": {"families": ["uniform", "three_point"], "fixed_deltas": ["pi/10", "pi/30"]},
        "checks": {"feasible": 1, "dominance": 1, "three_point_dominates": 1.0},
    }
    result = run_block(tmp_path, block)
    assert names(result) == [
        "manifest.yaml", "model_traces.csv", "paired_families.csv", "schedule_three_point.csv", "schedule_uniform.csv",
    ]
    assert result.passed
    traces = read(result.output_dir / "model_traces.csv")
    assert {"optimized_uniform", "optimized_three_point", "fixed_0.314159", "fixed_0.10472"} <= set(traces.columns)
    schedule = read(result.output_dir / "schedule_uniform.csv")
    assert len(schedule) == 150


def test_scaling_experiment(tmp_path):
    block = {
        "type": "scaling",
        "dist": UNIFORM,
        "horizon": 3000,
        "params": {"n_list": [10, 20, 40], "mode": "fixed", "monte_carlo_seeds": 2},
        "checks": {"all_reached": 1, "monotone": 1},
    }
    result = run_block(tmp_path, block)
    assert result.passed
    frame = read(result.output_dir / "scaling.csv")
    assert frame.n_sensors.tolist() == [10, 20, 40]
    assert frame.mc_t_fraction.notna().all()


def test_scaling_params_reject_unsorted_sizes(tmp_path):
    block = {"type": "scaling", "dist": UNIFORM, "params": {"n_list": [20, 10]}}
    with pytest.raises(ConfigError, match="ascending"):
        run_block(tmp_path, block)


def test_ordering_experiment(tmp_path):
    block = {
        "type": "theorem2",
        "horizon": 100,
        "params": {"n_values": [40, 10], "dists": [{"family": "uniform", "delta0": "pi/30"}], "optimized_family": "uniform"},
        "checks": {"violations": 0},
    }
    result = run_block(tmp_path, block)
    assert result.passed
    assert result.metrics["pairs"] == 2.0
    frame = read(result.output_dir / "theorem2.csv")
    assert frame[["n1", "n2"]].values.tolist() == [[10, 40], [10, 40]]


def test_ordering_experiment_needs_something_to_check(tmp_path):
    block = {"type": "theorem2", "params": {"n_values": [10, 20]}}
    with pytest.raises(ConfigError, match="nothing to check"):
        run_block(tmp_path, block)


def test_histogram_experiment(tmp_path):
    block = {
        "type": "histogram",
        "figure": "fig5",
        "n_sensors": 50,
        "dist": UNIFORM,
        "horizon": 3000,
        "seeds": 2,
        "params": {"stop_fraction": 0.8, "bins": 21, "histograms": 1},
    }
    result = run_block(tmp_path, block)
    assert names(result) == ["histogram_seed1.csv", "laplacian_fit.csv", "manifest.yaml"]
    fit = read(result.output_dir / "laplacian_fit.csv")
    assert (fit.y_over_n >= 0.8).all()
    assert len(read(result.output_dir / "histogram_seed1.csv")) == 21


def test_histogram_at_fixed_slot(tmp_path):
    block = {"type": "histogram", "n_sensors": 20, "dist": UNIFORM, "horizon": 50, "params": {"slot": 10}}
    result = run_block(tmp_path, block)
    fit = read(result.output_dir / "laplacian_fit.csv")
    assert fit.slot.tolist() == [10]


def test_histogram_rejects_even_bins(tmp_path):
    block = {"type": "histogram", "dist": UNIFORM, "params": {"bins": 40}}
    with pytest.raises(ConfigError, match="odd"):
        run_block(tmp_path, block)


def test_tracking_experiment(tmp_path):
    block = {
        "type": "tracking",
        "n_sensors": 20,
        "dist": UNIFORM,
        "horizon": 300,
        "seeds": 2,
        "feedback_window": 1,
        "doppler_magnitude": "pi/200",
        "drift_law": "uniform",
        "params": {"freeze_fraction": 0.6, "warmup_horizon": 3000, "trailing": 100},
        "checks": {"warmup_share": 1.0},
    }
    result = run_block(tmp_path, block)
    assert names(result) == ["manifest.yaml", "tracking_seed1.csv", "tracking_seed2.csv"]
    assert result.passed
    frame = read(result.output_dir / "tracking_seed1.csv")
    assert len(frame) == 300
    assert (frame.adaptive_ratio <= 1.0 + 1e-12).all()


def test_tracking_extra_drift_law_is_reported_not_checked(tmp_path):
    block = {
        "type": "tracking",
        "n_sensors": 20,
        "dist": UNIFORM,
        "horizon": 100,
        "feedback_window": 1,
        "doppler_magnitude": "pi/200",
        "drift_law": "uniform",
        "params": {"freeze_fraction": 0.6, "warmup_horizon": 3000, "trailing": 50, "extra_drift_laws": ["sign"]},
        "checks": {"warmup_share": 1.0},
    }
    result = run_block(tmp_path, block)
    assert names(result) == ["manifest.yaml", "tracking_seed1.csv", "tracking_sign_seed1.csv"]
    assert {"tracking_ratio_sign", "adaptive_level_sign", "control_level_sign"} <= set(result.metrics)
    assert [c.name for c in result.checks] == ["warmup_share"]
    head = (result.output_dir / "tracking_sign_seed1.csv").read_text().splitlines()
    assert "# drift_law: sign" in head


def test_load_config_file(tmp_path):
    path = tmp_path / "conf.yaml"
    path.write_text(yaml.safe_dump({"experiments": {
        "one": {"type": "model", "dist": UNIFORM, "horizon": 10},
        "two": {"type": "model", "dist": UNIFORM, "horizon": 10, "path": "out/{experiment-name}"},
    }}))
    experiments = load(path)
    assert experiments.names() == ["one", "two"]
    results = experiments.run_all()
    assert results[1].output_dir == (tmp_path / "out" / "two").absolute()


@pytest.mark.parametrize("document", [{}, {"experiments": []}, {"experiments": {"x": 3}}])
def test_parse_rejects_malformed_documents(document):
    with pytest.raises(ConfigError):
        parse_experiments(document, "test")


class TestPresets:

    EXPECTED = {"fig2", "fig3", "fig5", "fig6", "fig7", "fig8", "fig9a", "fig9b", "fig10", "theorem2"}

    def test_all_presets_load(self):
        assert set(load_presets().names()) == self.EXPECTED

    @pytest.mark.parametrize("name", sorted(EXPECTED))
    def test_preset_instantiates(self, name, tmp_path):
        experiments = load_presets(tmp_path)
        config = experiments.config(name)
        experiment = get_experiment_class(config.type)(name, config, tmp_path)
        assert set(config.checks) <= set(experiment.check_directions)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            load_presets().config("fig99")

    def test_short_preset_run(self, tmp_path):
        result = run_preset("fig3", horizon=50, out_dir=tmp_path)
        assert result.output_dir == (tmp_path / "fig3").absolute()
        assert len(read(result.output_dir / "trace_seed1.csv")) == 50
        # the two-seed gap window starts after the shortened horizon
        assert math.isnan(result.metrics["seed_gap"])
        assert not result.passed
