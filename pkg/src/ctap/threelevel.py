"""Reduced three-level description of the transfer.

In the basis of localized trap states ``(|L>, |M>, |R>)`` each transverse band
``n`` evolves under

    H_n(t) = eps_n(t) * I + [[0, J_LM, 0], [J_LM, 0, J_MR], [0, J_MR, 0]]

with tunneling rates from the exact double-well doublets and a diagonal taken
from the instantaneous three-well spectrum. The final angular momentum of a
vortex carried through the sequence follows from the accumulated phase
difference of the two bands.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline

from .observables import ObservableSeries
from .specfun import double_well_doublet, fd_eigensolve_1d
from .trapgeom import TrajectoryPlan, distances_at_fraction

__all__ = [
    "ThreeLevelState",
    "CouplingSchedule",
    "PhaseRecord",
    "NormDriftError",
    "hamiltonian",
    "mixing_angle",
    "dark_state",
    "eigenvalue_flow",
    "propagate",
    "phase_functionals",
    "phase_rate",
    "three_well_levels",
    "build_schedule",
    "predicted_lz",
    "write_schedule_csv",
    "write_phase_csv",
]

EpsMode = Literal["dark", "center"]

# half-width of the hard-wall box used for the instantaneous three-well spectrum
_BOX_HALF_WIDTH = 16.0
_FD_BLOCKS = 1024  # grid has 4 * _FD_BLOCKS - 1 interior nodes
_J_TABLE_NODES = 61


class NormDriftError(ArithmeticError):
    """Propagation lost unitarity beyond tolerance."""


@dataclass
class ThreeLevelState:
    amplitudes: np.ndarray
    band_n: int = 0

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(3)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(self.populations.sum())


@dataclass(frozen=True)
class CouplingSchedule:
    times: np.ndarray
    J_LM: np.ndarray
    J_MR: np.ndarray
    eps: np.ndarray
    band_n: int = 0

    def __post_init__(self) -> None:
        arrs = [np.asarray(a, dtype=float) for a in (self.times, self.J_LM, self.J_MR, self.eps)]
        for name, a in zip(("times", "J_LM", "J_MR", "eps"), arrs):
            object.__setattr__(self, name, a)
        n = arrs[0].size
        if any(a.shape != (n,) for a in arrs):
            raise ValueError("schedule arrays must be 1-D and share one length")
        t = arrs[0]
        # a single sample at t = 0 is the zero-duration schedule
        if n < 1 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must increase strictly from 0")
        if np.any(arrs[1] < 0) or np.any(arrs[2] < 0):
            raise ValueError("tunneling rates must be non-negative")

    @property
    def t_f(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class PhaseRecord:
    t_f: float
    gamma: float
    theta_rel: float
    predicted_Lz: float


def hamiltonian(J_LM: float, J_MR: float, eps: float = 0.0) -> np.ndarray:
    return np.array(
        [[eps, J_LM, 0.0], [J_LM, eps, J_MR], [0.0, J_MR, eps]],
        dtype=float,
    )


def mixing_angle(J_LM: float, J_MR: float) -> float:
    """Mixing angle ``atan2(J_LM, J_MR)`` of the dark state.

    It starts at 0 when only the distal pair couples (``J_LM = 0``) and ends
    at ``pi/2`` when only the proximal pair does.

    Raises
    ------
    ValueError
        If both rates vanish.
    """
    if J_LM == 0 and J_MR == 0:
        raise ValueError("mixing angle undefined for J_LM = J_MR = 0")
    return math.atan2(J_LM, J_MR)


def dark_state(theta_mix: float, band_n: int = 0) -> ThreeLevelState:
    """Null vector ``cos(theta)|L> - sin(theta)|R>`` of the coupling matrix."""
    return ThreeLevelState(np.array([math.cos(theta_mix), 0.0, -math.sin(theta_mix)]), band_n)


def eigenvalue_flow(schedule: CouplingSchedule) -> np.ndarray:
    """Instantaneous eigenvalues, shape ``(N, 3)``, ascending: ``eps - W, eps, eps + W``."""
    w = np.hypot(schedule.J_LM, schedule.J_MR)
    return np.stack([schedule.eps - w, schedule.eps, schedule.eps + w], axis=1)


def propagate(
    schedule: CouplingSchedule,
    initial: ThreeLevelState,
    max_step: float | None = None,
    record_stride: int = 1,
) -> tuple[ThreeLevelState, ObservableSeries]:
    """Integrate ``i da/dt = H(t) a`` with classical fourth-order Runge-Kutta.

    The schedule is interpolated by cubic splines. The diagonal only adds a
    common phase, which is integrated exactly; RK4 handles the couplings. The fixed step is
    ``min(0.01, t_f / 1e4)`` unless ``max_step`` is smaller. The recorded
    energy is ``<H(t)>``.

    Raises
    ------
    NormDriftError
        If the norm drifts by more than 1e-6.
    """
    a = initial.amplitudes.copy()
    t_f = schedule.t_f
    n0 = float(np.vdot(a, a).real)
    if t_f == 0.0:
        return ThreeLevelState(a, initial.band_n), _single_record(schedule, a)
    h_cap = min(0.01, t_f / 1e4)
    if max_step is not None:
        h_cap = min(h_cap, float(max_step))
    nsteps = int(math.ceil(t_f / h_cap))
    h = t_f / nsteps
    splines = [CubicSpline(schedule.times, v) for v in (schedule.J_LM, schedule.J_MR, schedule.eps)]
    tq = np.linspace(0.0, t_f, 2 * nsteps + 1)  # step ends and midpoints
    jlm, jmr, eps = (s(tq) for s in splines)
    # eps * I commutes with the couplings: its phase is applied exactly and RK4 only sees J
    eps_phase = splines[2].antiderivative()(tq[::2])

    def deriv(k: int, v: np.ndarray) -> np.ndarray:
        return -1j * np.array([jlm[k] * v[1], jlm[k] * v[0] + jmr[k] * v[2], jmr[k] * v[1]])

    b = a.copy()
    rec_t, rec_a = [0.0], [a.copy()]
    for i in range(nsteps):
        k0 = 2 * i
        k1 = deriv(k0, b)
        k2 = deriv(k0 + 1, b + 0.5 * h * k1)
        k3 = deriv(k0 + 1, b + 0.5 * h * k2)
        k4 = deriv(k0 + 2, b + h * k3)
        b = b + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (i + 1) % record_stride == 0 or i + 1 == nsteps:
            rec_t.append((i + 1) * h)
            rec_a.append(b * np.exp(-1j * eps_phase[i + 1]))
    a = rec_a[-1]
    drift = abs(float(np.vdot(a, a).real) - n0)
    if drift > 1e-6:
        raise NormDriftError(f"norm drift {drift:.3g} with step {h:.3g}; reduce max_step")
    amps = np.array(rec_a)
    t = np.array(rec_t)
    pops = (np.abs(amps) ** 2).T
    idx = np.rint(t / h).astype(int) * 2
    energy = np.array(
        [np.vdot(v, hamiltonian(jlm[j], jmr[j], eps[j]) @ v).real for v, j in zip(amps, idx)]
    )
    series = ObservableSeries(t, np.full(t.size, np.nan), pops, pops.sum(axis=0), energy)
    return ThreeLevelState(a, initial.band_n), series


def _single_record(schedule: CouplingSchedule, a: np.ndarray) -> ObservableSeries:
    p = np.abs(a) ** 2
    e = np.vdot(a, hamiltonian(schedule.J_LM[0], schedule.J_MR[0], schedule.eps[0]) @ a).real
    return ObservableSeries([0.0], [np.nan], p.reshape(3, 1), [p.sum()], [e])


def phase_functionals(schedule_band0: CouplingSchedule, schedule_band1: CouplingSchedule) -> PhaseRecord:
    """Global phase ``gamma`` and relative phase ``theta_rel`` of the two bands.

    ``gamma = 3/2 t_f + int eps_0 dt`` and ``theta_rel = -t_f + int (eps_1 - eps_0) dt``
    (trapezoid rule). ``theta_rel`` vanishes for static harmonic traps.

    Raises
    ------
    ValueError
        If the schedules do not share a time grid.
    """
    t0, t1 = schedule_band0.times, schedule_band1.times
    if t0.shape != t1.shape or not np.array_equal(t0, t1):
        raise ValueError("band schedules must share the same time grid")
    t_f = schedule_band0.t_f
    gamma = 1.5 * t_f + float(np.trapezoid(schedule_band0.eps, t0))
    theta = -t_f + float(np.trapezoid(schedule_band1.eps - schedule_band0.eps, t0))
    return PhaseRecord(t_f=t_f, gamma=gamma, theta_rel=theta, predicted_Lz=math.cos(theta))


# --------------------------------------------------------------------------
# schedules from the trap geometry
# --------------------------------------------------------------------------

def _aligned_box(d_lm: float, d_mr: float) -> tuple[np.ndarray, float]:
    """Uniform grid whose nodes hit both potential kinks on all three nested levels."""
    k1, k2 = -0.5 * d_lm, 0.5 * d_mr
    n = 4 * _FD_BLOCKS - 1
    target = 2.0 * _BOX_HALF_WIDTH / (n + 1)
    q = max(1, int(round((k2 - k1) / (4 * target))))
    h = (k2 - k1) / (4 * q)
    p = int(math.ceil((k1 + _BOX_HALF_WIDTH) / (4 * h)))
    y = (k1 - 4 * p * h) + h * np.arange(1, n + 1)
    return y, h


@lru_cache(maxsize=8192)
def _levels_cached(d_a: float, d_b: float, k: int) -> tuple[float, ...]:
    y, h = _aligned_box(d_a, d_b)
    w = 0.5 * np.minimum(np.minimum((y + d_a) ** 2, y**2), (y - d_b) ** 2)
    return tuple(fd_eigensolve_1d(w, h, k))


def three_well_levels(d_lm: float, d_mr: float, k: int = 6) -> np.ndarray:
    """Lowest ``k`` levels of ``W(y)`` for traps at ``(-d_lm, 0, d_mr)``.

    The spectrum is mirror-symmetric in the two distances, which halves the
    cache footprint over a symmetric sequence.
    """
    a, b = sorted((round(float(d_lm), 12), round(float(d_mr), 12)))
    return np.array(_levels_cached(a, b, k))


def band_energy(levels: np.ndarray, band_n: int, mode: EpsMode = "dark") -> float:
    """Diagonal energy of band ``n`` from the sorted three-well spectrum.

    ``dark`` takes the middle member of the band triplet, the branch that
    carries the transfer; ``center`` takes the triplet mean.
    """
    trip = levels[3 * band_n : 3 * band_n + 3]
    if mode == "dark":
        return float(trip[1])
    if mode == "center":
        return float(trip.mean())
    raise ValueError(f"unknown eps mode {mode!r}")


@lru_cache(maxsize=64)
def _j_table(d_lo: float, d_hi: float, band_n: int) -> CubicSpline:
    d = np.linspace(d_lo, d_hi, _J_TABLE_NODES)
    logj = np.log([double_well_doublet(float(x), band_n).tunneling_J for x in d])
    return CubicSpline(d, logj)


def tunneling_rate(d: np.ndarray, band_n: int, d_lo: float, d_hi: float) -> np.ndarray:
    """``J_n(d)`` from a log-spline through exact doublets on ``[d_lo, d_hi]``."""
    return np.exp(_j_table(float(d_lo), float(d_hi), band_n)(np.asarray(d, dtype=float)))


@lru_cache(maxsize=64)
def _normalized_schedule(shape: TrajectoryPlan, band_n: int, samples: int, eps_mode: str):
    s = np.linspace(0.0, 1.0, samples)
    d_lm, d_mr = distances_at_fraction(shape, s)
    jlm = tunneling_rate(d_lm, band_n, shape.d_min, shape.d_max)
    jmr = tunneling_rate(d_mr, band_n, shape.d_min, shape.d_max)
    eps = np.array([band_energy(three_well_levels(a, b), band_n, eps_mode) for a, b in zip(d_lm, d_mr)])
    return s, jlm, jmr, eps


def build_schedule(
    plan: TrajectoryPlan, band_n: int, samples: int = 401, eps_mode: EpsMode = "dark"
) -> CouplingSchedule:
    """Couplings and diagonal for band ``n`` sampled uniformly over ``[0, t_f]``.

    Everything except the time axis depends only on the plan shape, so the
    normalized schedule is cached and rescaled for each ``t_f``.
    """
    if plan.t_f <= 0:
        raise ValueError("schedule needs t_f > 0")
    shape = dataclasses.replace(plan, t_f=1.0)
    s, jlm, jmr, eps = _normalized_schedule(shape, band_n, samples, eps_mode)
    return CouplingSchedule(s * plan.t_f, jlm, jmr, eps, band_n)


def phase_rate(plan: TrajectoryPlan, samples: int = 401, eps_mode: EpsMode = "dark") -> float:
    """``d theta_rel / d t_f`` for a fixed plan shape, ``int_0^1 (eps_1 - eps_0 - 1) ds``."""
    shape = dataclasses.replace(plan, t_f=1.0)
    s, _, _, e0 = _normalized_schedule(shape, 0, samples, eps_mode)
    _, _, _, e1 = _normalized_schedule(shape, 1, samples, eps_mode)
    return float(np.trapezoid(e1 - e0 - 1.0, s))


def predicted_lz(plan: TrajectoryPlan, t_f_values, samples: int = 401, eps_mode: EpsMode = "dark") -> list[PhaseRecord]:
    """Phase records over a ``t_f`` sweep at fixed plan shape."""
    out = []
    for t_f in np.asarray(t_f_values, dtype=float):
        p = dataclasses.replace(plan, t_f=float(t_f))
        out.append(phase_functionals(build_schedule(p, 0, samples, eps_mode), build_schedule(p, 1, samples, eps_mode)))
    return out


def write_schedule_csv(path: str | Path, schedule: CouplingSchedule) -> None:
    """``(t, J_LM, J_MR, theta_mix, E_minus, E_dark, E_plus)`` rows."""
    from .csvio import write_table

    flow = eigenvalue_flow(schedule)
    rows = []
    for i, t in enumerate(schedule.times):
        jl, jm = schedule.J_LM[i], schedule.J_MR[i]
        th = mixing_angle(jl, jm) if (jl or jm) else float("nan")
        rows.append((t, jl, jm, th, *flow[i]))
    write_table(path, ["t", "J_LM", "J_MR", "theta_mix", "E_minus", "E_dark", "E_plus"], rows)


def write_phase_csv(path: str | Path, records: list[PhaseRecord]) -> None:
    from .csvio import write_table

    write_table(
        path,
        ["t_f", "gamma", "theta_rel", "predicted_Lz"],
        [(r.t_f, r.gamma, r.theta_rel, r.predicted_Lz) for r in records],
    )
