import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite import hermval
from scipy.integrate import quad

from ctap.csvio import read_table
from ctap.specfun import (
    BracketError,
    DomainError,
    double_well_doublet,
    doublet_table,
    fd_eigensolve_1d,
    fd_grid,
    pcf_d,
    write_doublet_csv,
)


def hermite_d(n: int, x: float) -> float:
    c = np.zeros(n + 1)
    c[n] = 1.0
    return 2.0 ** (-n / 2) * math.exp(-x * x / 4) * hermval(x / math.sqrt(2.0), c)


def five_point(f, x, h=1e-3):
    # fourth-order central difference; a larger step keeps roundoff out of the comparison
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def double_well(y, d):
    return 0.5 * np.minimum((y - d / 2) ** 2, (y + d / 2) ** 2)


# ----------------------------------------------------------------- pcf_d

@pytest.mark.parametrize("n", range(6))
@pytest.mark.parametrize("x", [-7.5, -3.0, -2.0, -0.4, 0.0, 1.1, 2.9, 4.5, 7.9])
def test_integer_order_reduces_to_hermite(n, x):
    ref = hermite_d(n, x)
    got = pcf_d(n, x).value
    assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


def test_half_order_at_one_matches_quadrature():
    # integral representation valid for nu > -1
    nu, x = 0.5, 1.0
    integral, _ = quad(
        lambda t: math.exp(-t * t / 2) * t**nu * math.cos(x * t - nu * math.pi / 2),
        0,
        np.inf,
        epsabs=1e-14,
        epsrel=1e-13,
    )
    oracle = math.sqrt(2 / math.pi) * math.exp(x * x / 4) * integral
    assert oracle == pytest.approx(0.84220324406984, abs=1e-13)
    assert pcf_d(nu, x).value == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize(
    "nu,x",
    [(0.5, 1.0), (2.3, -5.0), (0.1, 9.0), (3.7, -12.0), (1.2, 5.5), (-0.5, 2.0), (4.9, 0.3), (0.9, -20.0)],
)
def test_against_arbitrary_precision(nu, x):
    ref = float(mpmath.pcfd(nu, x))
    ref_d = float(mpmath.diff(lambda z: mpmath.pcfd(nu, z), x))
    p = pcf_d(nu, x)
    assert p.value == pytest.approx(ref, rel=1e-11)
    assert p.derivative == pytest.approx(ref_d, rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.95, 5.95), st.floats(-9.0, 9.0))
def test_derivative_matches_central_difference(nu, x):
    d = pcf_d(nu, x).derivative
    fd = five_point(lambda z: pcf_d(nu, z).value, x)
    scale = max(abs(d), abs(pcf_d(nu, x).value))
    assert abs(fd - d) <= 1e-7 * scale


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.95, 5.95), st.floats(-7.0, 7.0))
def test_weber_equation_residual(nu, x):
    # D'' = (x^2/4 - nu - 1/2) D, second derivative from the first
    d2 = five_point(lambda z: pcf_d(nu, z).derivative, x)
    v = pcf_d(nu, x).value
    rhs = (x * x / 4 - nu - 0.5) * v
    assert abs(d2 - rhs) <= 1e-7 * max(abs(v), abs(rhs), abs(d2))


@pytest.mark.parametrize("nu,x", [(-1.0, 0.0), (6.0, 0.0), (0.5, 41.0), (0.5, math.nan), (math.inf, 1.0)])
def test_domain_is_enforced(nu, x):
    with pytest.raises(DomainError):
        pcf_d(nu, x)


def test_integer_arguments_are_accepted():
    assert pcf_d(1, 2).value == pytest.approx(hermite_d(1, 2.0), rel=1e-13)


# ----------------------------------------------------- double well levels

def test_merged_wells_are_the_oscillator():
    w0 = double_well_doublet(0.0, 0)
    w1 = double_well_doublet(0.0, 1)
    assert (w0.nu_even, w0.nu_odd) == pytest.approx((0.0, 1.0), abs=1e-8)
    assert (w1.nu_even, w1.nu_odd) == pytest.approx((2.0, 3.0), abs=1e-8)


def test_far_separated_wells_are_degenerate():
    for n in (0, 1):
        w = double_well_doublet(12.0, n)
        assert 0 <= w.tunneling_J <= 1e-9
        assert w.site_energy_eps == pytest.approx(n + 0.5, abs=1e-9)


def test_known_splittings_at_seven():
    # frozen from the FD oracle below; these set the scale of residual coupling at rest
    assert double_well_doublet(7.0, 0).tunneling_J == pytest.approx(9.5e-6, rel=0.05)
    assert double_well_doublet(7.0, 1).tunneling_J == pytest.approx(2.1e-4, rel=0.05)


@pytest.mark.parametrize("d", [1.0, 2.5, 4.0, 6.0])
def test_doublet_against_finite_differences(d):
    y, h = fd_grid(16.0, 12)
    e = fd_eigensolve_1d(double_well(y, d), h, 4)
    for n in (0, 1):
        w = double_well_doublet(d, n)
        assert w.nu_even == pytest.approx(e[2 * n] - 0.5, abs=1e-6)
        assert w.nu_odd == pytest.approx(e[2 * n + 1] - 0.5, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 11.0))
def test_doublet_ordering(d):
    w0 = double_well_doublet(d, 0)
    w1 = double_well_doublet(d, 1)
    assert w0.nu_even <= w0.nu_odd < w1.nu_even <= w1.nu_odd
    assert w0.tunneling_J >= 0 and w1.tunneling_J >= w0.tunneling_J
    assert -0.5 <= w0.nu_even <= 1.0 and 0.5 <= w1.nu_even <= 3.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 9.0), st.floats(0.05, 1.0))
def test_splitting_shrinks_with_separation(d, step):
    for n in (0, 1):
        assert double_well_doublet(d + step, n).tunneling_J < double_well_doublet(d, n).tunneling_J


def test_bad_doublet_arguments():
    with pytest.raises(DomainError):
        double_well_doublet(-1.0, 0)
    with pytest.raises(DomainError):
        double_well_doublet(2.0, 2)
    assert issubclass(BracketError, ValueError)


def test_doublet_csv_round_trip(tmp_path):
    rows = doublet_table([1.0, 2.0], 0)
    write_doublet_csv(tmp_path / "d.csv", rows)
    header, body = read_table(tmp_path / "d.csv")
    assert header == ["d", "nu_even", "nu_odd", "J", "eps"]
    assert float(body[1][3]) == pytest.approx(rows[1].tunneling_J, rel=1e-11)


# ---------------------------------------------------------- FD eigensolver

def test_fd_harmonic_levels():
    y, h = fd_grid(8.0, 12)
    e = fd_eigensolve_1d(0.5 * y**2, h, 6)
    np.testing.assert_allclose(e, np.arange(6) + 0.5, atol=1e-8)


def test_fd_box_levels():
    # particle in a box of width 2: E_k = (k pi / 2)^2 / 2
    y, h = fd_grid(1.0, 10)
    e = fd_eigensolve_1d(np.zeros_like(y), h, 4)
    k = np.arange(1, 5)
    np.testing.assert_allclose(e, 0.5 * (k * math.pi / 2) ** 2, rtol=1e-8)


def test_fd_rejects_non_nesting_grid():
    with pytest.raises(ValueError):
        fd_eigensolve_1d(np.zeros(100), 0.1, 2)
