"""Parabolic cylinder functions and the piecewise-harmonic double well.

All quantities are in oscillator units: lengths in units of the single-trap
ground-state size, energies in units of the trap quantum, times in inverse
trap frequency.

The eigenfunctions of the double well ``W(y) = min((y - d/2)**2, (y + d/2)**2) / 2``
are ``D_nu(sqrt(2) * (|y| - d/2))`` on each half, so the symmetric (even) states
satisfy ``D'_nu(-d/sqrt(2)) = 0`` and the antisymmetric (odd) states satisfy
``D_nu(-d/sqrt(2)) = 0``, with energies ``nu + 1/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import rgamma

__all__ = [
    "DomainError",
    "ConvergenceError",
    "BracketError",
    "PcfValue",
    "WellDoublet",
    "pcf_d",
    "double_well_doublet",
    "fd_eigensolve_1d",
    "fd_grid",
    "doublet_table",
    "write_doublet_csv",
]

NU_RANGE = (-1.0, 6.0)
X_MAX = 40.0
# |x| at which the Maclaurin series hands over to the asymptotic expansion
ASYMPTOTIC_SWITCH = 8.0
# positive x above this loses too many digits in the series (terms ~ exp(x^2/4),
# result ~ exp(-x^2/4)); integrate the ODE inward from the asymptotic region instead
POSITIVE_SERIES_LIMIT = 3.0
_SERIES_MAX_TERMS = 600
_ASYMPTOTIC_MAX_TERMS = 60
_TAYLOR_STEP = 0.25
_TAYLOR_TERMS = 40


class DomainError(ValueError):
    """Argument outside the supported domain."""


class ConvergenceError(ArithmeticError):
    """A series or refinement did not meet its tolerance."""


class BracketError(ValueError):
    """No sign change was found where a root was expected."""


@dataclass(frozen=True)
class PcfValue:
    nu: float
    x: float
    value: float
    derivative: float


@dataclass(frozen=True)
class WellDoublet:
    separation_d: float
    band_n: int
    nu_even: float
    nu_odd: float
    tunneling_J: float
    site_energy_eps: float


# --------------------------------------------------------------------------
# parabolic cylinder function D_nu(x)
# --------------------------------------------------------------------------

def _check_domain(nu: float, x: float) -> None:
    if not (NU_RANGE[0] < nu < NU_RANGE[1]) or not math.isfinite(nu):
        raise DomainError(f"order nu={nu!r} outside ({NU_RANGE[0]}, {NU_RANGE[1]})")
    if not math.isfinite(x) or abs(x) > X_MAX:
        raise DomainError(f"argument x={x!r} outside [-{X_MAX}, {X_MAX}]")


def _series(nu: float, x: float) -> tuple[float, float]:
    """Maclaurin series of Weber's equation y'' = (x^2/4 - nu - 1/2) y."""
    a = nu + 0.5
    d0 = 2.0 ** (nu / 2) * math.sqrt(math.pi) * float(rgamma((1.0 - nu) / 2))
    d1 = -(2.0 ** ((nu + 1) / 2)) * math.sqrt(math.pi) * float(rgamma(-nu / 2))
    if x == 0.0:
        return d0, d1
    c = [0.0, 0.0, d0, d1]  # padded: c[k + 2] holds the x**k coefficient
    val = d0 + d1 * x
    der = d1
    scale = abs(val)
    xk = x  # x**(k - 1)
    quiet = 0
    for k in range(2, _SERIES_MAX_TERMS):
        ck = (-a * c[k] + 0.25 * c[k - 2]) / (k * (k - 1))
        c.append(ck)
        dterm = k * ck * xk
        xk *= x
        term = ck * xk
        val += term
        der += dterm
        scale = max(scale, abs(term), abs(dterm))
        floor = 1e-16 * scale
        if k > x * x and abs(term) <= 1e-17 * max(abs(val), floor) and abs(dterm) <= 1e-17 * max(abs(der), floor):
            quiet += 1
            if quiet >= 4:
                return val, der
        else:
            quiet = 0
    raise ConvergenceError(f"power series for D_{nu}({x}) did not converge")


def _kummer_negative(nu: float, x: float) -> tuple[float, float]:
    """``D_nu(x)`` for x < 0 from the confluent hypergeometric form.

    ``D_nu(x) = 2**(nu/2) exp(-x^2/4) [A M(-nu/2, 1/2, w) + B x M((1-nu)/2, 3/2, w)]``
    with ``w = x^2/2``. For negative x both parts carry the same sign, so nothing
    cancels even when the recessive branch dominates (integer nu), unlike the
    Maclaurin series whose terms grow like exp(x^2/4).
    """
    A = math.sqrt(math.pi) * float(rgamma((1.0 - nu) / 2))
    B = -math.sqrt(2.0 * math.pi) * float(rgamma(-nu / 2))
    a1, a2 = -nu / 2, (1.0 - nu) / 2
    w = 0.5 * x * x
    c = e = 1.0  # current terms of the two series (w**k included)
    m1 = m2 = 1.0  # M values
    dm1 = 0.0  # sum k c_k w^(k-1)
    s2 = 1.0  # sum (2k+1) e_k w^k
    for k in range(_SERIES_MAX_TERMS):
        c *= (a1 + k) / ((0.5 + k) * (k + 1)) * w
        e *= (a2 + k) / ((1.5 + k) * (k + 1)) * w
        m1 += c
        m2 += e
        dm1 += (k + 1) * c / w if w else 0.0
        s2 += (2 * k + 3) * e
        if k > w and abs(c) <= 1e-17 * abs(m1) and abs(e) <= 1e-17 * abs(m2):
            break
    else:
        raise ConvergenceError(f"hypergeometric series for D_{nu}({x}) did not converge")
    f = A * m1 + B * x * m2
    fp = A * x * dm1 + B * s2
    pref = 2.0 ** (nu / 2) * math.exp(-w / 2)
    return pref * f, pref * (fp - 0.5 * x * f)


def _asymptotic_positive(nu: float, z: float) -> float:
    """Recessive expansion of D_nu(z), z >= ASYMPTOTIC_SWITCH."""
    term = 1.0
    total = 1.0
    inv = 1.0 / (2.0 * z * z)
    for k in range(_ASYMPTOTIC_MAX_TERMS):
        nxt = -term * (nu - 2 * k) * (nu - 2 * k - 1) * inv / (k + 1)
        if abs(nxt) > abs(term):
            break
        total += nxt
        term = nxt
        if abs(term) < 1e-17 * abs(total):
            break
    return z**nu * math.exp(-z * z / 4.0) * total


def _asymptotic_negative(nu: float, z: float) -> float:
    """D_nu(-z) for z >= ASYMPTOTIC_SWITCH (dominant plus recessive parts)."""
    grow = 1.0
    total = 1.0
    inv = 1.0 / (2.0 * z * z)
    for k in range(_ASYMPTOTIC_MAX_TERMS):
        nxt = grow * (nu + 2 * k + 1) * (nu + 2 * k + 2) * inv / (k + 1)
        if abs(nxt) > abs(grow):
            break
        total += nxt
        grow = nxt
        if abs(grow) < 1e-17 * abs(total):
            break
    dominant = math.sqrt(2.0 * math.pi) * float(rgamma(-nu)) * z ** (-nu - 1) * math.exp(z * z / 4.0) * total
    return dominant + math.cos(math.pi * nu) * _asymptotic_positive(nu, z)


def _asymptotic(nu: float, x: float) -> tuple[float, float]:
    if x > 0:
        v = _asymptotic_positive(nu, x)
        vp1 = _asymptotic_positive(nu + 1.0, x)
    else:
        v = _asymptotic_negative(nu, -x)
        vp1 = _asymptotic_negative(nu + 1.0, -x)
    # D'_nu = x/2 D_nu - D_{nu+1}
    return v, 0.5 * x * v - vp1


def _taylor_inward(nu: float, x: float) -> tuple[float, float]:
    """Integrate Weber's equation from x = ASYMPTOTIC_SWITCH down to x > 0.

    Heading towards the origin the recessive solution grows, so the stepping is
    stable.
    """
    a = nu + 0.5
    x0 = ASYMPTOTIC_SWITCH
    y, yp = _asymptotic(nu, x0)
    nsteps = max(1, math.ceil((x0 - x) / _TAYLOR_STEP))
    h = (x - x0) / nsteps
    for _ in range(nsteps):
        q = x0 * x0 / 4.0 - a
        c = [y, yp, q * y / 2.0]
        for k in range(1, _TAYLOR_TERMS - 2):
            nxt = q * c[k] + 0.5 * x0 * c[k - 1] + (0.25 * c[k - 2] if k >= 2 else 0.0)
            c.append(nxt / ((k + 2) * (k + 1)))
        y = 0.0
        yp = 0.0
        hk = 1.0
        for k, ck in enumerate(c):
            y += ck * hk
            if k + 1 < len(c):
                yp += (k + 1) * c[k + 1] * hk
            hk *= h
        x0 += h
    return y, yp


def pcf_d(nu: float, x: float) -> PcfValue:
    """Evaluate the parabolic cylinder function ``D_nu(x)`` and its x-derivative.

    Parameters
    ----------
    nu : float
        Order, ``-1 < nu < 6``.
    x : float
        Real argument, ``|x| <= 40``.

    Raises
    ------
    DomainError
        If ``nu`` or ``x`` is outside the supported range.
    ConvergenceError
        If the power series exhausts its term budget.
    """
    nu = float(nu)
    x = float(x)
    _check_domain(nu, x)
    if abs(x) >= ASYMPTOTIC_SWITCH:
        v, d = _asymptotic(nu, x)
    elif x > POSITIVE_SERIES_LIMIT:
        v, d = _taylor_inward(nu, x)
    elif x < 0.0:
        v, d = _kummer_negative(nu, x)
    else:
        v, d = _series(nu, x)
    if not (math.isfinite(v) and math.isfinite(d)):
        raise ConvergenceError(f"non-finite D_{nu}({x})")
    return PcfValue(nu=nu, x=x, value=v, derivative=d)


# --------------------------------------------------------------------------
# double well eigenproblem
# --------------------------------------------------------------------------

_SCAN_STEP = 0.05


def _parity_roots(f, n_roots: int, upper: float) -> list[float]:
    grid = np.linspace(-0.5, upper, int(round((upper + 0.5) / _SCAN_STEP)) + 1)
    vals = [f(v) for v in grid]
    roots: list[float] = []
    for i in range(len(grid) - 1):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(grid[i]))
        elif fa * fb < 0.0:
            r = brentq(f, grid[i], grid[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(float(r))
        if len(roots) == n_roots:
            break
    return roots


@lru_cache(maxsize=4096)
def double_well_doublet(d: float, band_n: int) -> WellDoublet:
    """Exact even/odd levels of band ``band_n`` of the piecewise-harmonic double well.

    The k-th root (counting from the bottom) of each parity belongs to band k.
    For ``d -> 0`` the doublet of band n merges into the oscillator levels
    ``2n`` and ``2n + 1``; for ``d -> inf`` both tend to ``n``.

    Raises
    ------
    DomainError
        For negative separation or a band other than 0 or 1.
    BracketError
        If no sign change is found for the requested root.
    """
    d = float(d)
    if d < 0 or not math.isfinite(d):
        raise DomainError(f"separation d={d!r} must be >= 0")
    if band_n not in (0, 1):
        raise DomainError(f"band {band_n!r} not supported (0 or 1)")
    x = -d / math.sqrt(2.0)
    if abs(x) > X_MAX:
        raise DomainError(f"separation d={d!r} too large for the PCF evaluator")
    upper = 2 * band_n + 1.5
    even = _parity_roots(lambda v: pcf_d(v, x).derivative, band_n + 1, upper)
    odd = _parity_roots(lambda v: pcf_d(v, x).value, band_n + 1, upper)
    if len(even) <= band_n or len(odd) <= band_n:
        raise BracketError(f"band {band_n} not resolvable at d={d}: no sign change in nu scan")
    nu_e, nu_o = even[band_n], odd[band_n]
    return WellDoublet(
        separation_d=d,
        band_n=band_n,
        nu_even=nu_e,
        nu_odd=nu_o,
        tunneling_J=(nu_o - nu_e) / 2.0,
        site_energy_eps=(nu_e + nu_o) / 2.0 + 0.5,
    )


def doublet_table(separations: Iterable[float], band_n: int) -> list[WellDoublet]:
    return [double_well_doublet(float(d), band_n) for d in separations]


def write_doublet_csv(path: str | Path, rows: Sequence[WellDoublet]) -> None:
    """Write ``(d, nu_even, nu_odd, J, eps)`` rows."""
    from .csvio import write_table

    write_table(
        path,
        ["d", "nu_even", "nu_odd", "J", "eps"],
        [(r.separation_d, r.nu_even, r.nu_odd, r.tunneling_J, r.site_energy_eps) for r in rows],
    )


# --------------------------------------------------------------------------
# finite-difference oracle
# --------------------------------------------------------------------------

def fd_grid(half_width: float, levels: int = 11) -> tuple[np.ndarray, float]:
    """Interior nodes of a hard-wall box ``[-half_width, half_width]``.

    The node count is ``2**levels - 1`` so the grid nests under two successive
    halvings and always contains ``y = 0``.
    """
    n = 2**levels - 1
    h = 2.0 * half_width / (n + 1)
    y = -half_width + h * np.arange(1, n + 1)
    return y, h


def _lowest(v: np.ndarray, h: float, k: int) -> np.ndarray:
    diag = 1.0 / h**2 + v
    off = np.full(v.size - 1, -0.5 / h**2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1), eigvals_only=True)


def fd_eigensolve_1d(
    potential_samples: np.ndarray,
    grid_spacing: float,
    k_lowest: int,
    tol: float = 1e-8,
) -> np.ndarray:
    """Lowest eigenvalues of ``-1/2 d^2/dy^2 + V(y)`` with hard walls.

    ``potential_samples`` are the interior nodes; the walls sit one spacing
    beyond each end. The three-point Laplacian is solved on the given grid and
    on two successive coarsenings (every other node), and the two Richardson
    estimates are compared to bound the error.

    Raises
    ------
    ValueError
        If the node count does not nest twice (``len + 1`` divisible by 4).
    ConvergenceError
        If the refinement error estimate exceeds ``tol``.
    """
    v = np.asarray(potential_samples, dtype=float)
    if v.ndim != 1 or (v.size + 1) % 4 or v.size < 31:
        raise ValueError("need 4m - 1 interior nodes (m >= 8) so the grid nests twice")
    if not 1 <= k_lowest <= 8:
        raise ValueError("k_lowest must be in 1..8")
    h = float(grid_spacing)
    e1 = _lowest(v, h, k_lowest)
    e2 = _lowest(v[1::2], 2 * h, k_lowest)
    e4 = _lowest(v[1::2][1::2], 4 * h, k_lowest)
    r1 = (4.0 * e1 - e2) / 3.0
    r2 = (4.0 * e2 - e4) / 3.0
    # r2 carries ~16x the O(h^4) error of r1
    err = np.abs(r1 - r2) / 15.0
    if np.any(err > tol):
        raise ConvergenceError(
            f"eigenvalues not converged to {tol:g}: residual estimate {err.max():.3g}"
        )
    return r1
