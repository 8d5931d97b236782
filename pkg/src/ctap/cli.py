"""Command line entry point: ``ctap <command> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .config import ConfigError, RunConfig, load_config
from .csvio import fmt, write_table
from .experiments import (
    fit_oscillation,
    grid_tf_sweep,
    initial_chemical_potential,
    initial_state,
    model_period,
    model_tf_sweep,
    snapshot_indices,
)
from .gridsim import SimulationError, run_ctap, write_field_csv
from .observables import oscillation_period
from .threelevel import band_energy, build_schedule, eigenvalue_flow, mixing_angle, three_well_levels
from .trapgeom import distances_at_fraction

COMMANDS = (
    "pulse-sequence",
    "site-energies",
    "sweep-tf",
    "sweep-dmin",
    "sweep-nl",
    "run-single",
    "print-defaults",
)


def _emit_field(out: Path, stem: str, field, note: str, figures: bool) -> None:
    write_field_csv(out / f"{stem}_density.csv", field, "density", note)
    write_field_csv(out / f"{stem}_phase.csv", field, "phase", note)
    if figures:
        g = field.grid
        plotting.field_panels(out / f"{stem}.png", g.x, g.y, field.density(), np.angle(field.amplitudes), note)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_pulse_sequence(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    plan = cfg.trajectory_plan()
    s0 = build_schedule(plan, 0, cfg.model.samples, cfg.model.eps_mode)
    s1 = build_schedule(plan, 1, cfg.model.samples, cfg.model.eps_mode)
    t = s0.times
    d_lm, d_mr = distances_at_fraction(plan, t / plan.t_f)
    theta = np.array([mixing_angle(a, b) for a, b in zip(s0.J_LM, s0.J_MR)])
    flow0 = eigenvalue_flow(s0)
    flow1 = eigenvalue_flow(s1)
    files = [
        write_table(out / "pulse_distances.csv", ["t", "d_LM", "d_MR"], zip(t, d_lm, d_mr)),
        write_table(
            out / "pulse_couplings.csv",
            ["t", "J0_LM", "J0_MR", "J1_LM", "J1_MR"],
            zip(t, s0.J_LM, s0.J_MR, s1.J_LM, s1.J_MR),
        ),
        write_table(out / "pulse_mixing_angle.csv", ["t", "theta_mix"], zip(t, theta)),
        write_table(
            out / "pulse_eigenvalues.csv",
            ["t", "eps0", "E0_minus", "E0_dark", "E0_plus", "eps1", "E1_minus", "E1_dark", "E1_plus"],
            [(t[i], s0.eps[i], *flow0[i], s1.eps[i], *flow1[i]) for i in range(t.size)],
        ),
    ]
    if cfg.output.figures:
        files.append(
            plotting.pulse_sequence(
                out / "pulse_sequence.png", t, d_lm, d_mr, (s0.J_LM, s0.J_MR), (s1.J_LM, s1.J_MR), theta, flow0
            )
        )
    return files


def site_energy_table(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    plan = cfg.trajectory_plan()
    s = np.linspace(0.0, 1.0, cfg.model.samples)
    d_lm, d_mr = distances_at_fraction(plan, s)
    e0, e1 = [], []
    for a, b in zip(d_lm, d_mr):
        lev = three_well_levels(a, b)
        e0.append(band_energy(lev, 0, cfg.model.eps_mode))
        e1.append(band_energy(lev, 1, cfg.model.eps_mode))
    return s * plan.t_f, np.array(e0), np.array(e1)


def cmd_site_energies(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    t, e0, e1 = site_energy_table(cfg)
    files = [write_table(out / "site_energies.csv", ["t", "eps0", "eps1", "eps0_minus_eps1"], zip(t, e0, e1, e0 - e1))]
    if cfg.output.figures:
        files.append(plotting.site_energies(out / "site_energies.png", t, e0, e1))
    return files


def _require_parameter(cfg: RunConfig, name: str) -> None:
    if cfg.sweep.parameter != name:
        raise ConfigError(f"this command sweeps {name}; set sweep.parameter = {name}")


def _sweep_tf_outputs(cfg: RunConfig, out: Path, stem: str, t_fs, workers: int, snapshots: bool, **changes):
    keep = snapshots and cfg.output.snapshots
    series, results = grid_tf_sweep(cfg, t_fs, workers, keep_fields=keep, **changes)
    model = model_tf_sweep(cfg, t_fs, **{k: v for k, v in changes.items() if k != "U"})
    rows = [row + (m.predicted_Lz, m.theta_rel) for row, m in zip(series.rows(), model)]
    files = [write_table(out / f"{stem}.csv", series.header() + ["predicted_Lz", "theta_rel"], rows)]
    if keep:
        for tag, i in snapshot_indices(series).items():
            f = results[i].field
            if f is not None:
                _emit_field(out / "snapshots", f"{stem}_{tag}", f, f"t_f={fmt(series.values[i])}", cfg.output.figures)
    return series, model, files


def cmd_sweep_tf(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    _require_parameter(cfg, "t_f")
    t_fs = cfg.sweep_values()
    series, model, files = _sweep_tf_outputs(cfg, out, "sweep_tf", t_fs, workers, snapshots=True)
    if cfg.output.figures:
        files.append(
            plotting.sweep_tf(
                out / "sweep_tf.png", t_fs, series.Lz, [m.predicted_Lz for m in model], series.populations[2]
            )
        )
    return files


def cmd_sweep_dmin(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    _require_parameter(cfg, "d_min")
    values = cfg.sweep_values()
    for d in values:
        cfg.trajectory_plan(d_min=float(d))
    t_fs = cfg.inner_tf_values()
    rows, curves, files = [], {}, []
    for d in values:
        series, _, f = _sweep_tf_outputs(cfg, out, f"sweep_dmin_{fmt(d)}", t_fs, workers, False, d_min=float(d))
        files += f
        curves[f"d_min = {fmt(d)}"] = (series.values, series.Lz)
        mp = model_period(cfg, d_min=float(d))
        try:
            est = oscillation_period(series)
            rows.append((d, est.period, est.uncertainty, est.crossings, mp, "ok"))
        except ValueError as exc:
            rows.append((d, math.nan, math.nan, 0, mp, f"failed: {exc}"))
    files.append(
        write_table(
            out / "sweep_dmin.csv",
            ["d_min", "period", "period_uncertainty", "crossings", "model_period", "status"],
            rows,
        )
    )
    if cfg.output.figures:
        files.append(plotting.sweep_family(out / "sweep_dmin.png", curves))
    return files


def cmd_sweep_nl(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    _require_parameter(cfg, "nonlinearity_U")
    values = cfg.sweep_values()
    mus = []
    for U in values:
        if U < 0:
            raise ConfigError(f"nonlinearity_U = {U} must be >= 0")
        mu, mu_int = initial_chemical_potential(cfg, float(U))
        if mu_int > cfg.sim.mu_limit:
            raise ConfigError(
                f"U = {fmt(U)} gives an interaction energy {mu_int:.4g} above sim.mu_limit = {cfg.sim.mu_limit}; "
                "outside the weak-interaction regime"
            )
        mus.append((mu, mu_int))
    t_fs = cfg.inner_tf_values()
    rows, curves, files = [], {}, []
    for U, (mu, mu_int) in zip(values, mus):
        series, _, f = _sweep_tf_outputs(cfg, out, f"sweep_nl_{fmt(U)}", t_fs, workers, False, U=float(U))
        files += f
        curves[f"U = {fmt(U)}"] = (series.values, series.Lz)
        try:
            fit = fit_oscillation(series)
            rows.append((U, mu, mu_int, fit.amplitude, fit.offset, fit.period, "ok"))
        except ValueError as exc:
            rows.append((U, mu, mu_int, math.nan, math.nan, math.nan, f"failed: {exc}"))
    files.append(
        write_table(out / "sweep_nl.csv", ["U", "mu", "mu_interaction", "amplitude", "offset", "period", "status"], rows)
    )
    if cfg.output.figures:
        files.append(plotting.sweep_family(out / "sweep_nl.png", curves))
    return files


def cmd_run_single(cfg: RunConfig, out: Path, workers: int) -> list[Path]:
    sim = cfg.sim_config()
    init = initial_state(cfg)
    series, final = run_ctap(sim, init)
    series.write_csv(out / "run_single.csv")
    files = [out / "run_single.csv"]
    if cfg.output.snapshots:
        _emit_field(out, "run_single_final", final, f"t={fmt(sim.plan.t_f)}", cfg.output.figures)
    if cfg.output.figures:
        files.append(plotting.time_series(out / "run_single.png", series.values, series.Lz, series.populations))
    lz, pops = series.Lz[-1], series.populations[:, -1]
    print(f"t_f={fmt(sim.plan.t_f)} Lz={lz:.6f} pop_L={pops[0]:.6f} pop_M={pops[1]:.6f} pop_R={pops[2]:.6f}")
    return files


HANDLERS = {
    "pulse-sequence": cmd_pulse_sequence,
    "site-energies": cmd_site_energies,
    "sweep-tf": cmd_sweep_tf,
    "sweep-dmin": cmd_sweep_dmin,
    "sweep-nl": cmd_sweep_nl,
    "run-single": cmd_run_single,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctap", description="Vortex transport through three traps: model and grid studies.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    p.add_argument("--workers", type=int, default=1, help="parallel processes for sweeps (default 1)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="set a configuration key; repeatable")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "print-defaults":
        sys.stdout.write("# defaults; every key may be set in a config file or with --override\n")
        sys.stdout.write(RunConfig().to_text())
        return 0
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config, args.override)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, dir=str(args.out)))
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"ctap: configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    try:
        files = HANDLERS[args.command](cfg, out, args.workers)
    except ConfigError as exc:
        print(f"ctap: configuration error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"ctap: simulation failed: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
