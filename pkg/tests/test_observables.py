import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctap.csvio import read_table
from ctap.gridsim import Grid2D, GridField, harmonic_state, initial_vortex
from ctap.observables import (
    ObservableSeries,
    angular_momentum,
    density_centroid_y,
    oscillation_period,
    populations_from_profile,
    region_populations,
    zero_crossings,
)

GRID = Grid2D(64, 256, 6.0, 16.0)


def sweep(values, lz):
    n = len(values)
    return ObservableSeries(values, lz, np.zeros((3, n)), np.ones(n), np.zeros(n), label="t_f")


# ------------------------------------------------------- angular momentum

def test_vortex_carries_one_quantum():
    f = initial_vortex(GRID, -7.0)
    assert angular_momentum(f) == pytest.approx(1.0, abs=1e-6)
    assert angular_momentum(f, about_y=-7.0) == pytest.approx(1.0, abs=1e-6)


def test_conjugate_vortex_reverses():
    f = initial_vortex(GRID, 3.0)
    g = GridField(GRID, np.conj(f.amplitudes))
    assert angular_momentum(g) == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("k", range(12))
def test_cosine_law(k):
    theta = 2 * math.pi * k / 12
    f = initial_vortex(GRID, 2.0, phase_theta=theta)
    assert angular_momentum(f) == pytest.approx(math.cos(theta), abs=1e-6)


@pytest.mark.parametrize("alpha", [math.pi / 7, 1.0])
def test_global_phase_invariance(alpha):
    f = initial_vortex(GRID, -4.0, phase_theta=0.9)
    g = GridField(GRID, np.exp(1j * alpha) * f.amplitudes)
    assert angular_momentum(g) == pytest.approx(angular_momentum(f), abs=1e-13)


def test_real_field_has_no_circulation():
    x, y = GRID.x, GRID.y
    f = GridField(GRID, np.outer(harmonic_state(1, x), harmonic_state(0, y - 1.0)))
    assert abs(angular_momentum(f)) <= 1e-12


def test_centroid():
    assert density_centroid_y(initial_vortex(GRID, -7.0)) == pytest.approx(-7.0, abs=1e-10)


# ------------------------------------------------------------ populations

def test_left_state_is_in_left_region():
    p = region_populations(initial_vortex(GRID, -7.0), (-7.0, 3.0, 9.0))
    np.testing.assert_allclose(p, [1, 0, 0], atol=1e-9)


def test_left_state_tail_at_rest_separation():
    # y-profile of the vortex is (phi_0^2 + phi_1^2) / 2; its tail beyond the midpoint at 3.5
    z = 3.5
    tail = 0.5 * (math.erfc(z) + z * math.exp(-z * z) / math.sqrt(math.pi))
    # the row on the midpoint counts half, so the grid sum is a trapezoid rule: add its h^2 term
    slope = math.exp(-z * z) * (2 * z - 4 * z**3) / (2 * math.sqrt(math.pi))
    tail -= GRID.dy**2 / 12 * slope
    p = region_populations(initial_vortex(GRID, -7.0), (-7.0, 0.0, 7.0))
    assert p[1] == pytest.approx(tail, abs=1e-8)
    assert p[0] + p[1] == pytest.approx(1.0, abs=1e-12)


def test_symmetric_state_splits_evenly():
    # merged-pair ground state centred on the left/middle midpoint
    x, y = GRID.x, GRID.y
    psi = np.outer(harmonic_state(0, x), harmonic_state(0, y + 1.5))
    f = GridField(GRID, psi / math.sqrt(GridField(GRID, psi).norm()))
    p = region_populations(f, (-3.0, 0.0, 9.0))
    assert p[0] == pytest.approx(p[1], abs=1e-6)
    assert p[0] == pytest.approx(0.5, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(-10, -0.5),
    st.floats(-0.4, 0.4),
    st.floats(0.5, 10),
)
def test_populations_partition_the_norm(seed, a, b, c):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(GRID.nx, GRID.ny)) + 1j * rng.normal(size=(GRID.nx, GRID.ny))
    f = GridField(GRID, psi)
    f.amplitudes /= math.sqrt(f.norm())
    p = region_populations(f, (a, b, c))
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(f.norm(), abs=1e-10)


def test_row_on_midpoint_is_shared():
    y = np.array([-1.0, 0.0, 1.0])
    p = populations_from_profile(y, np.array([1.0, 2.0, 3.0]), np.array([-1.0, 1.0, 3.0]))
    np.testing.assert_allclose(p, [2.0, 4.0, 0.0])


def test_unsorted_centres_rejected():
    with pytest.raises(ValueError):
        region_populations(initial_vortex(GRID, 0.0), (1.0, 0.0, 2.0))


# ------------------------------------------------------------------ period

def test_period_of_synthetic_cosine():
    t = np.linspace(800, 1000, 41)
    est = oscillation_period(sweep(t, np.cos(0.2 * t)))
    assert est.period == pytest.approx(10 * math.pi, rel=0.02)


def test_offset_does_not_move_the_period():
    t = np.linspace(800, 1000, 41)
    a = oscillation_period(sweep(t, np.cos(0.2 * t)))
    b = oscillation_period(sweep(t, 0.3 + np.cos(0.2 * t)))
    assert b.period == pytest.approx(a.period, rel=0.02)


@settings(max_examples=40, deadline=None)
@given(st.floats(20.0, 60.0), st.floats(0, 2 * math.pi), st.floats(-0.3, 0.3))
def test_period_recovered_for_any_phase(period, phase, offset):
    t = np.linspace(0, 200, 161)
    est = oscillation_period(sweep(t, offset + np.cos(2 * math.pi * t / period + phase)))
    assert est.period == pytest.approx(period, rel=0.03)


def test_too_few_crossings():
    t = np.linspace(0, 10, 21)
    with pytest.raises(ValueError):
        oscillation_period(sweep(t, np.cos(0.2 * t)))


def test_failed_points_are_skipped():
    t = np.linspace(800, 1000, 41)
    s = sweep(t, np.cos(0.2 * t))
    s.Lz[5] = 40.0
    s.status[5] = "failed: boom"
    assert oscillation_period(s).period == pytest.approx(10 * math.pi, rel=0.02)


def test_zero_crossings_interpolate():
    np.testing.assert_allclose(zero_crossings([0, 1, 2], [1.0, -1.0, -1.0]), [0.5])
    np.testing.assert_allclose(zero_crossings([0, 1, 2], [1.0, 0.0, -1.0]), [1.0])


# ------------------------------------------------------------------ series

def test_series_csv(tmp_path):
    s = sweep([1.0, 2.0], [0.5, -0.5])
    s.write_csv(tmp_path / "s.csv")
    header, rows = read_table(tmp_path / "s.csv")
    assert header == ["t_f", "Lz", "pop_L", "pop_M", "pop_R", "norm", "energy", "status"]
    assert rows[1][1] == "-0.5" and rows[0][-1] == "ok"


def test_series_shape_checks():
    with pytest.raises(ValueError):
        ObservableSeries([1.0], [0.0], np.zeros((3, 1)), [1.0], [0.0], status=["ok", "ok"])
    assert len(ObservableSeries.empty()) == 0
