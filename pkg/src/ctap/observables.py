"""Observables of grid fields and series containers for runs and sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .gridsim import GridField

__all__ = [
    "ObservableSeries",
    "PeriodEstimate",
    "angular_momentum",
    "density_centroid_y",
    "region_populations",
    "populations_from_profile",
    "oscillation_period",
    "zero_crossings",
]


@dataclass
class ObservableSeries:
    """Time- or parameter-indexed observables.

    ``populations`` has shape ``(3, N)`` with rows for the left, middle and
    right regions. ``Lz`` is NaN where it is not defined (three-level runs).
    """

    values: np.ndarray
    Lz: np.ndarray
    populations: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    label: str = "t"
    status: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.size
        self.Lz = np.asarray(self.Lz, dtype=float).reshape(n)
        self.populations = np.asarray(self.populations, dtype=float).reshape(3, n)
        self.norm = np.asarray(self.norm, dtype=float).reshape(n)
        self.energy = np.asarray(self.energy, dtype=float).reshape(n)
        if not self.status:
            self.status = ["ok"] * n
        if len(self.status) != n:
            raise ValueError("status length does not match the series")

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def empty(cls, label: str = "t") -> "ObservableSeries":
        z = np.zeros(0)
        return cls(z, z, np.zeros((3, 0)), z, z, label=label)

    @property
    def ok(self) -> np.ndarray:
        return np.array([s == "ok" for s in self.status], dtype=bool)

    def header(self) -> list[str]:
        return [self.label, "Lz", "pop_L", "pop_M", "pop_R", "norm", "energy", "status"]

    def rows(self) -> list[tuple]:
        p = self.populations
        return [
            (self.values[i], self.Lz[i], p[0, i], p[1, i], p[2, i], self.norm[i], self.energy[i], self.status[i])
            for i in range(len(self))
        ]

    def write_csv(self, path: str | Path) -> None:
        from .csvio import write_table

        write_table(path, self.header(), self.rows())


def _spectral_derivative(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    shape = [1] * a.ndim
    shape[axis] = k.size
    return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(a, axis=axis), axis=axis)


def _derivative_wavenumbers(k: np.ndarray) -> np.ndarray:
    # the Nyquist mode has no odd partner; drop it so real fields keep real derivatives
    kd = k.copy()
    if kd.size % 2 == 0:
        kd[kd.size // 2] = 0.0
    return kd


def density_centroid_y(field: "GridField") -> float:
    g = field.grid
    rho_y = np.sum(np.abs(field.amplitudes) ** 2, axis=0)
    return float(np.sum(g.y * rho_y) / np.sum(rho_y))


def angular_momentum(field: "GridField", about_y: float | None = None) -> float:
    """``<L_z>`` about the axis ``(x, y) = (0, about_y)``.

    Computed as ``Im <psi|x d/dy - (y - about_y) d/dx|psi> / <psi|psi>`` with
    spectral derivatives. ``about_y`` defaults to the density centroid.
    """
    g = field.grid
    psi = field.amplitudes
    y0 = density_centroid_y(field) if about_y is None else float(about_y)
    dpsi_dy = _spectral_derivative(psi, _derivative_wavenumbers(g.ky), axis=1)
    dpsi_dx = _spectral_derivative(psi, _derivative_wavenumbers(g.kx), axis=0)
    x = g.x[:, None]
    y = g.y[None, :] - y0
    op = x * dpsi_dy - y * dpsi_dx
    num = np.vdot(psi, op)
    return float(num.imag / np.vdot(psi, psi).real)


def region_populations(field: "GridField", trap_centers_y: Sequence[float]) -> np.ndarray:
    """Integrated density in the bands left of, between and right of the trap midpoints.

    A grid row lying exactly on a midpoint is shared equally by both sides.
    """
    c = np.asarray(trap_centers_y, dtype=float)
    if c.shape != (3,) or not (c[0] <= c[1] <= c[2]):
        raise ValueError("trap centers must be three ascending values")
    g = field.grid
    rho_y = np.sum(np.abs(field.amplitudes) ** 2, axis=0) * g.dx * g.dy
    return populations_from_profile(g.y, rho_y, c)


def populations_from_profile(y: np.ndarray, weights: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Split per-row weights (last axis) at the two midpoints of ``centers``."""
    b1 = 0.5 * (centers[0] + centers[1])
    b2 = 0.5 * (centers[1] + centers[2])
    wl = np.where(y < b1, 1.0, np.where(y == b1, 0.5, 0.0))
    wr = np.where(y > b2, 1.0, np.where(y == b2, 0.5, 0.0))
    wm = 1.0 - wl - wr
    return np.stack([weights @ wl, weights @ wm, weights @ wr], axis=0)


def zero_crossings(values: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Linearly interpolated abscissae where ``signal`` changes sign."""
    v = np.asarray(values, dtype=float)
    s = np.asarray(signal, dtype=float)
    out: list[float] = []
    for i in range(len(s) - 1):
        a, b = s[i], s[i + 1]
        if a == 0.0:
            if not out or out[-1] != v[i]:
                out.append(float(v[i]))
        elif a * b < 0.0:
            out.append(float(v[i] - a * (v[i + 1] - v[i]) / (b - a)))
    if len(s) and s[-1] == 0.0 and (not out or out[-1] != v[-1]):
        out.append(float(v[-1]))
    return np.asarray(out)


@dataclass(frozen=True)
class PeriodEstimate:
    period: float
    uncertainty: float
    crossings: int


def oscillation_period(sweep: ObservableSeries) -> PeriodEstimate:
    """Period of ``Lz`` versus the sweep variable from mean-subtracted zero crossings.

    Consecutive crossings are half a period apart; the estimate is twice
    their mean spacing and the uncertainty twice their standard deviation.
    Failed runs are skipped.

    Raises
    ------
    ValueError
        With fewer than three zero crossings.
    """
    mask = sweep.ok & np.isfinite(sweep.Lz)
    v = sweep.values[mask]
    lz = sweep.Lz[mask]
    z = zero_crossings(v, lz - lz.mean()) if lz.size else np.zeros(0)
    if z.size < 3:
        raise ValueError(f"need at least 3 zero crossings to estimate a period, found {z.size}")
    gaps = np.diff(z)
    return PeriodEstimate(period=2.0 * float(gaps.mean()), uncertainty=2.0 * float(gaps.std()), crossings=int(z.size))
