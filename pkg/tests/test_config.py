import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctap.config import ConfigError, RunConfig, load_config, parse_override, parse_text


def test_defaults_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_text(cfg.to_text()) == cfg


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1.0, 5000.0),
    st.floats(1.0, 3.0),
    st.integers(1, 200),
    st.booleans(),
    st.sampled_from(["sin2", "linear_smoothed"]),
)
def test_arbitrary_values_round_trip(t_f, d_min, count, figures, ramp):
    cfg = RunConfig().with_pairs(
        [
            ("plan.t_f", repr(t_f)),
            ("plan.d_min", repr(d_min)),
            ("sweep.count", str(count)),
            ("output.figures", str(figures).lower()),
            ("plan.ramp", ramp),
        ]
    )
    assert RunConfig.from_text(cfg.to_text()) == cfg
    assert cfg.plan.t_f == t_f and cfg.sweep.count == count


def test_comments_and_blank_lines():
    text = "# header\n\nplan.t_f = 120  # inline\n  sweep.parameter = d_min\n"
    assert parse_text(text) == [("plan.t_f", "120"), ("sweep.parameter", "d_min")]


@pytest.mark.parametrize(
    "pairs",
    [
        [("plan.tf", "1")],
        [("nosection.x", "1")],
        [("plan", "1")],
        [("plan.t_f", "fast")],
        [("grid.nx", "1.5")],
        [("output.figures", "maybe")],
    ],
)
def test_bad_keys_and_values(pairs):
    with pytest.raises(ConfigError):
        RunConfig().with_pairs(pairs)


def test_malformed_lines():
    with pytest.raises(ConfigError):
        parse_text("plan.t_f 300")
    with pytest.raises(ConfigError):
        parse_override("plan.t_f")
    assert parse_override(" plan.t_f = 5 ") == ("plan.t_f", "5")


@pytest.mark.parametrize(
    "pairs",
    [
        [("plan.d_min", "8")],
        [("grid.nx", "100")],
        [("grid.dt", "0")],
        [("sim.record_stride", "0")],
        [("model.eps_mode", "mean")],
        [("sweep.parameter", "U")],
        [("sweep.count", "0")],
        [("sweep.values", "1,a")],
        [("grid.ly", "12")],
        [("plan.ramp", "cubic")],
    ],
)
def test_validation_fails_before_any_run(pairs):
    with pytest.raises(ConfigError):
        RunConfig().with_pairs(pairs).validate()


def test_defaults_validate():
    RunConfig().validate()


def test_sweep_values():
    cfg = RunConfig().with_pairs([("sweep.values", "2.0, 2.2,2.4")])
    np.testing.assert_allclose(cfg.sweep_values(), [2.0, 2.2, 2.4])
    cfg = RunConfig().with_pairs([("sweep.start", "1"), ("sweep.stop", "2"), ("sweep.count", "3")])
    np.testing.assert_allclose(cfg.sweep_values(), [1.0, 1.5, 2.0])
    assert RunConfig().with_pairs([("sweep.count", "1")]).sweep_values().tolist() == [RunConfig().sweep.start]
    assert len(RunConfig().inner_tf_values()) == RunConfig().tf_sweep.count


def test_builders():
    cfg = RunConfig()
    plan = cfg.trajectory_plan(d_min=2.4)
    assert plan.d_min == 2.4 and plan.t_f == cfg.plan.t_f
    sim = cfg.sim_config(nonlinearity_U=0.3, t_f=50.0)
    assert sim.nonlinearity_U == 0.3 and sim.plan.t_f == 50.0
    assert cfg.grid2d().ny == cfg.grid.ny


def test_load_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("plan.t_f = 123\nsweep.count = 7\n")
    cfg = load_config(p, ["sweep.count=9"])
    assert cfg.plan.t_f == 123.0 and cfg.sweep.count == 9
    assert load_config(None) == RunConfig()
    assert dataclasses.replace(cfg, plan=RunConfig().plan).plan == RunConfig().plan
