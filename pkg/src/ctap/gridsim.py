"""Split-step Fourier integration of the 2D Schroedinger / Gross-Pitaevskii equation.

    i d/dt psi = [-(1/2) laplacian + x**2/2 + W(y, t) + U |psi|**2] psi

on a periodic rectangle. One Strang step applies half a potential phase, a
full kinetic step in Fourier space, and the other half phase with the
density refreshed.

Without interaction the Hamiltonian is a sum of an x part and a y part and
the discrete Strang step factorizes exactly into a 1D step along each axis.
Runs with ``U = 0`` therefore evolve the singular-value factors of the
initial field instead of the full grid; a vortex built from two product
states stays rank two for all times. Interacting runs use the full 2D grid.

Sweeps over ``t_f`` at fixed plan shape share one stepping loop: the
potential depends on time only through ``t / t_f``, so with a common step
count ``N`` each member uses ``dt_i = t_f_i / N``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .observables import ObservableSeries, angular_momentum, populations_from_profile
from .trapgeom import PotentialSnapshot, TrajectoryPlan, distances_at_fraction

__all__ = [
    "Grid2D",
    "GridField",
    "SimConfig",
    "SimulationError",
    "BoundaryDensityWarning",
    "RunResult",
    "harmonic_state",
    "initial_vortex",
    "step",
    "energy",
    "chemical_potential",
    "interaction_energy",
    "run_ctap",
    "run_tf_batch",
    "write_field_csv",
]

EDGE_DENSITY_LIMIT = 1e-8
_SVD_CUTOFF = 1e-13


class SimulationError(RuntimeError):
    """The integration produced non-finite values."""


class BoundaryDensityWarning(RuntimeWarning):
    """Density reached the periodic boundary."""


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on ``[-lx, lx) x [-ly, ly)``; arrays are indexed ``[ix, iy]``."""

    nx: int = 256
    ny: int = 1024
    lx: float = 6.0
    ly: float = 16.0

    def __post_init__(self) -> None:
        if not (_is_pow2(self.nx) and _is_pow2(self.ny)):
            raise ValueError(f"nx and ny must be powers of two, got {self.nx} x {self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("half-widths must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.lx / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.ly / self.ny

    @property
    def x(self) -> np.ndarray:
        return -self.lx + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return -self.ly + self.dy * np.arange(self.ny)

    @property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, self.dy)

    @property
    def cell(self) -> float:
        return self.dx * self.dy

    @property
    def max_kinetic(self) -> float:
        return 0.5 * (np.abs(self.kx).max() ** 2 + np.abs(self.ky).max() ** 2)


@dataclass
class GridField:
    grid: Grid2D
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(f"amplitudes shape {a.shape} does not match grid {(self.grid.nx, self.grid.ny)}")
        self.amplitudes = a

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "GridField":
        return GridField(self.grid, self.amplitudes.copy())


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``dt`` is the largest step allowed; a run of duration ``t_f`` takes
    ``ceil(t_f / dt)`` equal steps.
    """

    plan: TrajectoryPlan
    dt: float = 5e-4
    nonlinearity_U: float = 0.0
    record_stride: int = 2000

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.nonlinearity_U >= 0):
            raise ValueError(f"nonlinearity_U must be >= 0, got {self.nonlinearity_U}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    def n_steps(self, t_f: float | None = None) -> int:
        t = self.plan.t_f if t_f is None else t_f
        return max(1, int(math.ceil(t / self.dt - 1e-9))) if t > 0 else 0

    def check_step(self, grid: Grid2D) -> float:
        """Return ``dt * max kinetic eigenvalue``; warn when it exceeds 1."""
        c = self.dt * grid.max_kinetic
        if c >= 1.0:
            warnings.warn(
                f"dt * max kinetic energy = {c:.3g} >= 1; the unitary splitting stays stable but "
                "the highest grid modes are poorly resolved in time",
                RuntimeWarning,
                stacklevel=2,
            )
        return c


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------

def harmonic_state(n: int, z: np.ndarray) -> np.ndarray:
    """Unit-frequency oscillator eigenfunction ``phi_n(z)`` for ``n`` in {0, 1}."""
    g = np.pi**-0.25 * np.exp(-0.5 * z * z)
    if n == 0:
        return g
    if n == 1:
        return math.sqrt(2.0) * z * g
    raise ValueError("only n = 0 and n = 1 are needed")


def initial_vortex(grid: Grid2D, center_y: float, phase_theta: float = 0.0, margin: float = 6.0) -> GridField:
    """Normalized ``phi_1(x) phi_0(y') + i exp(-i theta) phi_0(x) phi_1(y')`` with ``y' = y - center_y``.

    Raises
    ------
    ValueError
        If the centre is closer than ``margin`` to the y boundary.
    """
    if abs(center_y) + margin > grid.ly:
        raise ValueError(f"center {center_y} leaves less than {margin} to the boundary at +-{grid.ly}")
    if grid.lx < margin:
        raise ValueError(f"x half-width {grid.lx} smaller than margin {margin}")
    x = grid.x
    yp = grid.y - center_y
    psi = np.outer(harmonic_state(1, x), harmonic_state(0, yp)) + 1j * np.exp(-1j * phase_theta) * np.outer(
        harmonic_state(0, x), harmonic_state(1, yp)
    )
    f = GridField(grid, psi)
    f.amplitudes /= math.sqrt(f.norm())
    return f


# --------------------------------------------------------------------------
# single steps and energies
# --------------------------------------------------------------------------

def _potential(grid: Grid2D, snap: PotentialSnapshot) -> np.ndarray:
    return 0.5 * grid.x[:, None] ** 2 + snap.w(grid.y)[None, :]


def _kinetic_symbol(grid: Grid2D) -> np.ndarray:
    return 0.5 * (grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2)


def step(field: GridField, snapshot: PotentialSnapshot, dt: float, U: float = 0.0, index: int | None = None) -> GridField:
    """One Strang step of length ``dt``.

    Raises
    ------
    SimulationError
        If the result is not finite.
    """
    g = field.grid
    v = _potential(g, snapshot)
    psi = field.amplitudes
    psi = np.exp(-0.5j * dt * (v + U * np.abs(psi) ** 2)) * psi
    psi = np.fft.ifft2(np.exp(-1j * dt * _kinetic_symbol(g)) * np.fft.fft2(psi))
    psi = np.exp(-0.5j * dt * (v + U * np.abs(psi) ** 2)) * psi
    if not np.all(np.isfinite(psi)):
        where = "" if index is None else f" at step {index}"
        raise SimulationError(f"non-finite amplitudes{where}")
    return GridField(g, psi)


def interaction_energy(field: GridField, U: float) -> float:
    """``U * int |psi|^4`` for the normalized field."""
    n = field.norm()
    return float(U * np.sum(field.density() ** 2) * field.grid.cell / n**2)


def _energies(field: GridField, snapshot: PotentialSnapshot) -> tuple[float, float]:
    g = field.grid
    psi = field.amplitudes
    n = field.norm()
    kin = np.sum(_kinetic_symbol(g) * np.abs(np.fft.fft2(psi)) ** 2) * g.cell / psi.size
    pot = np.sum(_potential(g, snapshot) * np.abs(psi) ** 2) * g.cell
    return float(kin / n), float(pot / n)


def energy(field: GridField, snapshot: PotentialSnapshot, U: float = 0.0) -> float:
    """Mean-field energy per particle ``<T + V> + (U/2) int |psi|^4``."""
    kin, pot = _energies(field, snapshot)
    return kin + pot + 0.5 * interaction_energy(field, U)


def chemical_potential(field: GridField, snapshot: PotentialSnapshot, U: float = 0.0) -> float:
    """``mu = <psi| -laplacian/2 + V + U |psi|^2 |psi>`` per unit norm."""
    kin, pot = _energies(field, snapshot)
    return kin + pot + interaction_energy(field, U)


# --------------------------------------------------------------------------
# propagation engines
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    """Outcome of one member of a batch.

    The final state is kept either as rank factors ``(fx, fy)`` with
    ``psi = fx.T @ fy`` or as a full field, depending on the engine.
    """

    t_f: float
    series: ObservableSeries
    status: str = "ok"
    grid: Grid2D | None = None
    factors: tuple[np.ndarray, np.ndarray] | None = None
    amplitudes: np.ndarray | None = None

    @property
    def field(self) -> GridField | None:
        if self.factors is not None:
            return GridField(self.grid, self.factors[0].T @ self.factors[1])
        if self.amplitudes is not None:
            return GridField(self.grid, self.amplitudes)
        return None

    @property
    def final(self) -> tuple[float, np.ndarray, float, float]:
        s = self.series
        return float(s.Lz[-1]), s.populations[:, -1], float(s.norm[-1]), float(s.energy[-1])


def _centers(plan: TrajectoryPlan, s: float) -> tuple[float, float, float]:
    d_lm, d_mr = distances_at_fraction(plan, s)
    return (-float(d_lm), 0.0, float(d_mr))


def _observe(field: GridField, snap: PotentialSnapshot, U: float) -> tuple[float, np.ndarray, float, float]:
    g = field.grid
    rho_y = np.sum(field.density(), axis=0) * g.cell
    pops = populations_from_profile(g.y, rho_y, np.asarray(snap.trap_centers_y))
    return angular_momentum(field), pops, float(rho_y.sum()), energy(field, snap, U)


def _edge_density(field: GridField) -> float:
    rho = field.density()
    return float(max(rho[0].max(), rho[-1].max(), rho[:, 0].max(), rho[:, -1].max()))


def _factorize(field: GridField) -> tuple[np.ndarray, np.ndarray]:
    u, sv, vh = np.linalg.svd(field.amplitudes, full_matrices=False)
    r = int(np.sum(sv > _SVD_CUTOFF * sv[0]))
    return (u[:, :r] * sv[:r]).T.copy(), vh[:r].copy()


class _Batch:
    """State of ``B`` runs advanced together through ``N`` common steps."""

    def __init__(self, config: SimConfig, grid: Grid2D, initial: GridField, t_fs: np.ndarray, n_steps: int):
        self.config = config
        self.grid = grid
        self.t_fs = t_fs
        self.n = n_steps
        self.dts = t_fs / n_steps
        self.U = config.nonlinearity_U
        self.separable = self.U == 0.0
        ky2 = grid.ky**2
        if self.separable:
            fx, fy = _factorize(initial)
            self.rank = fx.shape[0]
            b = t_fs.size
            self.fx = np.broadcast_to(fx, (b,) + fx.shape).copy()
            self.fy = np.broadcast_to(fy, (b,) + fy.shape).copy()
            dts = self.dts[:, None, None]
            self.kin_x = np.exp(-0.5j * dts * (grid.kx**2)[None, None, :])
            self.half_x = np.exp(-0.25j * dts * (grid.x**2)[None, None, :])
            self.kin_y = np.exp(-0.5j * dts * ky2[None, None, :])
        else:
            self.psi = np.broadcast_to(initial.amplitudes, (t_fs.size,) + initial.amplitudes.shape).copy()
            self.kin = np.exp(-1j * self.dts[:, None, None] * _kinetic_symbol(grid)[None])
            self.vx = 0.5 * grid.x[:, None] ** 2

    def advance(self, k0: int, k1: int) -> None:
        """Steps ``k0 .. k1 - 1``; the potential of step ``k`` is taken at its midpoint."""
        plan = self.config.plan
        y = self.grid.y
        for k in range(k0, k1):
            s = (k + 0.5) / self.n
            d_lm, d_mr = distances_at_fraction(plan, s)
            w = 0.5 * np.minimum(np.minimum((y + d_lm) ** 2, y**2), (y - d_mr) ** 2)
            if self.separable:
                half = np.exp(-0.5j * self.dts[:, None, None] * w[None, None, :])
                f = half * self.fy
                f = np.fft.ifft(self.kin_y * np.fft.fft(f, axis=-1), axis=-1)
                self.fy = half * f
                g = self.half_x * self.fx
                g = np.fft.ifft(self.kin_x * np.fft.fft(g, axis=-1), axis=-1)
                self.fx = self.half_x * g
            else:
                dt = self.dts[:, None, None]
                v = self.vx + w[None, :]
                psi = np.exp(-0.5j * dt * (v + self.U * np.abs(self.psi) ** 2)) * self.psi
                psi = np.fft.ifft2(self.kin * np.fft.fft2(psi), axes=(-2, -1))
                self.psi = np.exp(-0.5j * dt * (v + self.U * np.abs(psi) ** 2)) * psi
        if not self._finite():
            raise SimulationError(f"non-finite amplitudes between steps {k0} and {k1}")

    def _finite(self) -> bool:
        arr = self.fy if self.separable else self.psi
        return bool(np.all(np.isfinite(arr)))

    def field(self, i: int) -> GridField:
        """Current field of run ``i``."""
        if self.separable:
            return GridField(self.grid, self.fx[i].T @ self.fy[i])
        return GridField(self.grid, self.psi[i].copy())


def _record_points(n: int, stride: int) -> list[int]:
    pts = list(range(0, n, stride))
    if not pts or pts[-1] != n:
        pts.append(n)
    return pts


def run_ctap(config: SimConfig, initial: GridField) -> tuple[ObservableSeries, GridField]:
    """Propagate ``initial`` through the full plan and record observables.

    Observables are recorded every ``record_stride`` steps and at the end.
    A :class:`BoundaryDensityWarning` is issued if the density at the domain
    edge exceeds 1e-8.
    """
    grid = initial.grid
    config.check_step(grid)
    t_f = config.plan.t_f
    n = config.n_steps()
    if n == 0:
        snap = PotentialSnapshot(_centers(config.plan, 0.0))
        lz, pops, nrm, en = _observe(initial, snap, config.nonlinearity_U)
        return ObservableSeries([0.0], [lz], pops.reshape(3, 1), [nrm], [en]), initial.copy()
    batch = _Batch(config, grid, initial, np.array([t_f]), n)
    times, lzs, pops, norms, ens = [], [], [], [], []
    done = 0
    edge = 0.0
    for k in _record_points(n, config.record_stride):
        batch.advance(done, k)
        done = k
        f = batch.field(0)
        snap = PotentialSnapshot(_centers(config.plan, k / n))
        lz, p, nrm, en = _observe(f, snap, config.nonlinearity_U)
        times.append(k * t_f / n)
        lzs.append(lz)
        pops.append(p)
        norms.append(nrm)
        ens.append(en)
        edge = max(edge, _edge_density(f))
    if edge > EDGE_DENSITY_LIMIT:
        warnings.warn(f"edge density {edge:.3g} exceeds {EDGE_DENSITY_LIMIT:g}", BoundaryDensityWarning, stacklevel=2)
    series = ObservableSeries(times, lzs, np.array(pops).T, norms, ens)
    return series, f


def run_tf_batch(
    config: SimConfig,
    initial: GridField,
    t_f_values: Sequence[float],
    n_steps: int | None = None,
    keep_fields: bool = False,
) -> list[RunResult]:
    """Run the plan shape of ``config`` for several durations in one stepping loop.

    All members take ``n_steps`` steps (default ``ceil(max(t_f) / dt)``), so
    member ``i`` uses ``dt_i = t_f_i / n_steps <= dt``. Passing the same
    ``n_steps`` to disjoint chunks of a sweep gives results independent of
    the chunking.
    """
    t_fs = np.asarray(t_f_values, dtype=float)
    if t_fs.size == 0:
        return []
    if np.any(t_fs <= 0):
        raise ValueError("t_f values must be positive")
    grid = initial.grid
    if n_steps is None:
        n_steps = config.n_steps(float(t_fs.max()))
    batch = _Batch(config, grid, initial, t_fs, n_steps)
    batch.advance(0, n_steps)
    snap = PotentialSnapshot(_centers(config.plan, 1.0))
    out = []
    for i, t_f in enumerate(t_fs):
        f = batch.field(i)
        lz, p, nrm, en = _observe(f, snap, config.nonlinearity_U)
        status = "ok"
        if _edge_density(f) > EDGE_DENSITY_LIMIT:
            status = "edge"
        series = ObservableSeries([t_f], [lz], p.reshape(3, 1), [nrm], [en], label="t_f", status=[status])
        res = RunResult(float(t_f), series, status, grid)
        if keep_fields:
            if batch.separable:
                res.factors = (batch.fx[i].copy(), batch.fy[i].copy())
            else:
                res.amplitudes = f.amplitudes
        out.append(res)
    return out


def write_field_csv(path: str | Path, field: GridField, quantity: str = "density", note: str = "") -> None:
    """Write ``|psi|^2`` or ``arg(psi)`` as a matrix, one row per x index.

    The first line is a ``#`` comment with the grid metadata.
    """
    from .csvio import fmt

    g = field.grid
    if quantity == "density":
        m = field.density()
    elif quantity == "phase":
        m = np.angle(field.amplitudes)
    else:
        raise ValueError("quantity must be 'density' or 'phase'")
    meta = f"# quantity={quantity} nx={g.nx} ny={g.ny} lx={fmt(g.lx)} ly={fmt(g.ly)} dx={fmt(g.dx)} dy={fmt(g.dy)}"
    if note:
        meta += " " + note
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(meta + "\n")
        for row in m:
            fh.write(",".join(fmt(v) for v in row) + "\n")
