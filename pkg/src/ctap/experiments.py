"""Sweep orchestration shared by the command line and the acceptance suite."""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .config import RunConfig
from .gridsim import (
    GridField,
    RunResult,
    SimulationError,
    chemical_potential,
    initial_vortex,
    interaction_energy,
    run_tf_batch,
)
from .observables import ObservableSeries, oscillation_period
from .threelevel import PhaseRecord, phase_rate, predicted_lz
from .trapgeom import PotentialSnapshot

__all__ = [
    "OscillationFit",
    "grid_tf_sweep",
    "model_tf_sweep",
    "fit_oscillation",
    "initial_state",
    "initial_chemical_potential",
    "snapshot_indices",
]


def initial_state(cfg: RunConfig) -> GridField:
    """Vortex centred in the left trap at its resting position."""
    return initial_vortex(cfg.grid2d(), -cfg.plan.d_max)


def initial_chemical_potential(cfg: RunConfig, U: float) -> tuple[float, float]:
    """``(mu, U int |psi|^4)`` of the initial vortex in the resting potential."""
    f = initial_state(cfg)
    snap = PotentialSnapshot((-cfg.plan.d_max, 0.0, cfg.plan.d_max))
    return chemical_potential(f, snap, U), interaction_energy(f, U)


def _failed(t_f: float, message: str) -> RunResult:
    nan = float("nan")
    s = ObservableSeries([t_f], [nan], np.full((3, 1), nan), [nan], [nan], label="t_f", status=[f"failed: {message}"])
    return RunResult(t_f, s, status=s.status[0])


def _chunk_job(args) -> list[RunResult]:
    cfg_text, plan_changes, U, t_fs, n_steps, keep = args
    cfg = RunConfig.from_text(cfg_text)
    sim = cfg.sim_config(nonlinearity_U=U, **plan_changes)
    init = initial_vortex(cfg.grid2d(), -sim.plan.d_max)
    try:
        return run_tf_batch(sim, init, t_fs, n_steps, keep)
    except SimulationError:
        pass
    # isolate the failing member(s); the others are recomputed with the same step count
    out = []
    for t in t_fs:
        try:
            out.extend(run_tf_batch(sim, init, [t], n_steps, keep))
        except SimulationError as exc:
            out.append(_failed(float(t), str(exc)))
    return out


def grid_tf_sweep(
    cfg: RunConfig,
    t_f_values,
    workers: int = 1,
    keep_fields: bool = False,
    U: float | None = None,
    **plan_changes,
) -> tuple[ObservableSeries, list[RunResult]]:
    """Final-state observables of grid runs over ``t_f_values``.

    Every run takes the same number of steps, ``ceil(max(t_f) / dt)``, so the
    numbers do not depend on how the sweep is split across workers.
    """
    t_fs = np.asarray(t_f_values, dtype=float)
    U = cfg.sim.nonlinearity_U if U is None else float(U)
    sim = cfg.sim_config(nonlinearity_U=U, **plan_changes)
    n_steps = sim.n_steps(float(t_fs.max()))
    text = cfg.to_text()
    chunks = [c for c in np.array_split(t_fs, max(1, min(workers, t_fs.size))) if c.size]
    jobs = [(text, plan_changes, U, list(c), n_steps, keep_fields) for c in chunks]
    if len(jobs) == 1:
        parts = [_chunk_job(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    results = [r for part in parts for r in part]
    series = ObservableSeries(
        [r.t_f for r in results],
        [r.series.Lz[0] for r in results],
        np.array([r.series.populations[:, 0] for r in results]).T,
        [r.series.norm[0] for r in results],
        [r.series.energy[0] for r in results],
        label="t_f",
        status=[r.status for r in results],
    )
    return series, results


def model_tf_sweep(cfg: RunConfig, t_f_values, **plan_changes) -> list[PhaseRecord]:
    plan = cfg.trajectory_plan(**plan_changes)
    return predicted_lz(plan, t_f_values, cfg.model.samples, cfg.model.eps_mode)


def model_period(cfg: RunConfig, **plan_changes) -> float:
    rate = phase_rate(cfg.trajectory_plan(**plan_changes), cfg.model.samples, cfg.model.eps_mode)
    return 2.0 * math.pi / abs(rate) if rate else math.inf


@dataclass(frozen=True)
class OscillationFit:
    amplitude: float
    offset: float
    period: float
    period_uncertainty: float


def fit_oscillation(series: ObservableSeries) -> OscillationFit:
    """Least-squares ``offset + A cos(2 pi t / P + phi)`` seeded by the zero-crossing period."""
    est = oscillation_period(series)
    mask = series.ok & np.isfinite(series.Lz)
    t = series.values[mask]
    y = series.Lz[mask]
    w0 = 2.0 * math.pi / est.period
    # linear fit at the seed frequency gives the starting amplitude and phase
    basis = np.stack([np.ones_like(t), np.cos(w0 * t), np.sin(w0 * t)], axis=1)
    c, *_ = np.linalg.lstsq(basis, y, rcond=None)

    def model(tt, off, a, b, w):
        return off + a * np.cos(w * tt) + b * np.sin(w * tt)

    try:
        p, _ = curve_fit(model, t, y, p0=[c[0], c[1], c[2], w0], maxfev=5000)
    except RuntimeError:
        p = [c[0], c[1], c[2], w0]
    off, a, b, w = p
    return OscillationFit(
        amplitude=float(math.hypot(a, b)),
        offset=float(off),
        period=float(2.0 * math.pi / abs(w)),
        period_uncertainty=est.uncertainty,
    )


def snapshot_indices(series: ObservableSeries, max_crossings: int = 2) -> dict[str, int]:
    """Sweep indices at the ``Lz`` maximum, minimum and first zero crossings."""
    mask = series.ok & np.isfinite(series.Lz)
    if not mask.any():
        return {}
    idx = np.flatnonzero(mask)
    lz = series.Lz[idx]
    out = {"max": int(idx[np.argmax(lz)]), "min": int(idx[np.argmin(lz)])}
    c = lz - lz.mean()
    k = 0
    for j in range(len(c) - 1):
        if c[j] == 0 or c[j] * c[j + 1] < 0:
            pick = j if abs(c[j]) <= abs(c[j + 1]) else j + 1
            out[f"zero{k + 1}"] = int(idx[pick])
            k += 1
            if k == max_crossings:
                break
    return out


def with_plan(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, plan=dataclasses.replace(cfg.plan, **changes))
