"""Run configuration in flat ``key = value`` text with dotted section prefixes.

Example::

    # duration sweep at the default geometry
    sweep.parameter = t_f
    sweep.start = 800
    sweep.stop = 1000
    sweep.count = 41

Unknown keys and malformed values are rejected. Every key has a default, so
a file containing only a sweep block is complete.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .gridsim import Grid2D, SimConfig
from .trapgeom import Ramp, TrajectoryPlan

__all__ = ["ConfigError", "RunConfig", "SWEEP_PARAMETERS", "load_config", "parse_text", "parse_override"]

SWEEP_PARAMETERS = ("t_f", "d_min", "nonlinearity_U")


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass(frozen=True)
class PlanSection:
    t_f: float = 300.0
    d_max: float = 7.0
    d_min: float = 2.0
    overlap_fraction: float = 0.76
    ramp: str = "sin2"
    ramp_fraction: float = 0.366
    dwell_fraction: float = 0.04
    frozen: bool = False


@dataclass(frozen=True)
class GridSection:
    nx: int = 256
    ny: int = 1024
    lx: float = 6.0
    ly: float = 16.0
    dt: float = 5e-4


@dataclass(frozen=True)
class SimSection:
    nonlinearity_U: float = 0.0
    record_stride: int = 2000
    # ceiling on the interaction part of the chemical potential
    mu_limit: float = 0.1


@dataclass(frozen=True)
class ModelSection:
    eps_mode: str = "dark"
    samples: int = 401


@dataclass(frozen=True)
class SweepSection:
    """Outer sweep. ``values`` (comma separated) overrides start/stop/count."""

    parameter: str = "t_f"
    start: float = 800.0
    stop: float = 1000.0
    count: int = 41
    values: str = ""


@dataclass(frozen=True)
class InnerSweepSection:
    """Duration sweep run for every outer value of ``sweep-dmin`` and ``sweep-nl``."""

    start: float = 600.0
    stop: float = 1000.0
    count: int = 41


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    figures: bool = True
    snapshots: bool = True


_SECTIONS: dict[str, type] = {
    "plan": PlanSection,
    "grid": GridSection,
    "sim": SimSection,
    "model": ModelSection,
    "sweep": SweepSection,
    "tf_sweep": InnerSweepSection,
    "output": OutputSection,
}


def _convert(raw: str, typ: Any, key: str) -> Any:
    s = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = s.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(s)
        if typ in (int, "int"):
            return int(s)
        if typ in (float, "float"):
            return float(s)
        return s
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(typ, '__name__', typ)}") from None


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    plan: PlanSection = field(default_factory=PlanSection)
    grid: GridSection = field(default_factory=GridSection)
    sim: SimSection = field(default_factory=SimSection)
    model: ModelSection = field(default_factory=ModelSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    tf_sweep: InnerSweepSection = field(default_factory=InnerSweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    # ------------------------------------------------------------------ text
    def to_text(self) -> str:
        lines = []
        for name in _SECTIONS:
            sec = getattr(self, name)
            for f in fields(sec):
                lines.append(f"{name}.{f.name} = {_render(getattr(sec, f.name))}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls().with_pairs(parse_text(text))

    def with_pairs(self, pairs: list[tuple[str, str]]) -> "RunConfig":
        updates: dict[str, dict[str, Any]] = {}
        for key, raw in pairs:
            sec_name, _, attr = key.partition(".")
            sec_cls = _SECTIONS.get(sec_name)
            if sec_cls is None or not attr:
                raise ConfigError(f"unknown key {key!r}")
            ftypes = {f.name: f.type for f in fields(sec_cls)}
            if attr not in ftypes:
                raise ConfigError(f"unknown key {key!r}")
            updates.setdefault(sec_name, {})[attr] = _convert(raw, ftypes[attr], key)
        kwargs = {name: dataclasses.replace(getattr(self, name), **vals) for name, vals in updates.items()}
        return dataclasses.replace(self, **kwargs)

    # ------------------------------------------------------------ builders
    def trajectory_plan(self, **changes: Any) -> TrajectoryPlan:
        p = dataclasses.asdict(self.plan)
        p.update(changes)
        try:
            return TrajectoryPlan(**p)
        except ValueError as exc:
            raise ConfigError(f"plan: {exc}") from None

    def grid2d(self) -> Grid2D:
        g = self.grid
        try:
            return Grid2D(g.nx, g.ny, g.lx, g.ly)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None

    def sim_config(self, **plan_changes: Any) -> SimConfig:
        U = plan_changes.pop("nonlinearity_U", self.sim.nonlinearity_U)
        try:
            return SimConfig(self.trajectory_plan(**plan_changes), self.grid.dt, U, self.sim.record_stride)
        except ValueError as exc:
            raise ConfigError(f"sim: {exc}") from None

    def sweep_values(self) -> np.ndarray:
        s = self.sweep
        if s.values.strip():
            try:
                return np.array([float(v) for v in s.values.split(",") if v.strip()])
            except ValueError:
                raise ConfigError(f"sweep.values: cannot parse {s.values!r}") from None
        return _linspace(s.start, s.stop, s.count, "sweep")

    def inner_tf_values(self) -> np.ndarray:
        s = self.tf_sweep
        return _linspace(s.start, s.stop, s.count, "tf_sweep")

    def validate(self) -> None:
        """Check everything that can be checked without running a simulation."""
        self.trajectory_plan()
        grid = self.grid2d()
        self.sim_config()
        if self.sim.record_stride < 1:
            raise ConfigError("sim.record_stride must be >= 1")
        if self.model.eps_mode not in ("dark", "center"):
            raise ConfigError("model.eps_mode must be 'dark' or 'center'")
        if self.model.samples < 3:
            raise ConfigError("model.samples must be >= 3")
        if self.sweep.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {', '.join(SWEEP_PARAMETERS)}")
        try:
            Ramp(self.plan.ramp)
        except ValueError:
            raise ConfigError(f"plan.ramp must be one of {[r.value for r in Ramp]}") from None
        if self.plan.d_max + 6.0 > grid.ly:
            raise ConfigError(f"grid.ly = {grid.ly} leaves less than 6 beyond the outer traps at d_max = {self.plan.d_max}")
        self.sweep_values()
        self.inner_tf_values()


def _linspace(start: float, stop: float, count: int, name: str) -> np.ndarray:
    if count < 1:
        raise ConfigError(f"{name}.count must be >= 1")
    if count == 1:
        return np.array([float(start)])
    return np.linspace(float(start), float(stop), int(count))


def parse_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {n}: expected 'key = value', got {line.strip()!r}")
        k, v = body.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return pairs


def parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg = RunConfig.from_text(Path(path).read_text())
    if overrides:
        cfg = cfg.with_pairs([parse_override(o) for o in overrides])
    return cfg
