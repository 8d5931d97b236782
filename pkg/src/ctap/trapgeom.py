"""Three-trap geometry and the counter-intuitive separation schedule.

The middle trap sits at ``y = 0``. The left trap is at ``-d_LM(t)`` and the
right one at ``+d_MR(t)``. Each distance follows the same pulse: a ramp from
``d_max`` down to ``d_min``, a dwell, and a mirrored ramp back. The ``d_MR``
pulse leads and the ``d_LM`` pulse trails it by ``(1 - overlap_fraction)``
ramp windows. The pair of pulses is centred in ``[0, t_f]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "Ramp",
    "TrajectoryPlan",
    "PotentialSnapshot",
    "plan_distances",
    "distances_at_fraction",
    "snapshot",
    "write_plan_csv",
]

# width of each quadratic blend in the linear_smoothed ramp, as a fraction of the ramp
_BLEND = 0.2


class Ramp(str, Enum):
    SIN2 = "sin2"
    LINEAR_SMOOTHED = "linear_smoothed"


@dataclass(frozen=True)
class TrajectoryPlan:
    """Separation schedule for a left-to-right transfer.

    Parameters
    ----------
    t_f : float
        Total duration in units of ``1/omega``.
    d_max, d_min : float
        Resting and closest separations in oscillator lengths.
    overlap_fraction : float
        Fraction of a ramp window during which both pulses ramp together.
    ramp : Ramp
        Shape of the ramp segments.
    ramp_fraction : float
        Duration of each ramp (down or up) as a fraction of ``t_f``.
    dwell_fraction : float
        Time spent at ``d_min`` as a fraction of ``t_f``.
    frozen : bool
        Hold both separations at ``d_max`` throughout (static control run).
    """

    t_f: float = 300.0
    d_max: float = 7.0
    d_min: float = 2.0
    overlap_fraction: float = 0.76
    ramp: Ramp = Ramp.SIN2
    ramp_fraction: float = 0.366
    dwell_fraction: float = 0.04
    frozen: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "ramp", Ramp(self.ramp))
        if not (math.isfinite(self.t_f) and self.t_f >= 0):
            raise ValueError(f"t_f must be >= 0, got {self.t_f}")
        if not (0 < self.d_min < self.d_max):
            raise ValueError(f"need 0 < d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}")
        if not (0 < self.overlap_fraction < 1):
            raise ValueError("overlap_fraction must lie in (0, 1)")
        if not (0 < self.ramp_fraction) or self.dwell_fraction < 0:
            raise ValueError("ramp_fraction must be > 0 and dwell_fraction >= 0")
        if self.active_span > 1.0 + 1e-12:
            raise ValueError(
                f"pulses do not fit in t_f: 2*ramp + dwell + delay = {self.active_span:.4g} > 1"
            )

    @property
    def delay_fraction(self) -> float:
        """Lag of the d_LM pulse behind the d_MR pulse, as a fraction of ``t_f``."""
        return (1.0 - self.overlap_fraction) * self.ramp_fraction

    @property
    def pulse_fraction(self) -> float:
        return 2.0 * self.ramp_fraction + self.dwell_fraction

    @property
    def active_span(self) -> float:
        return self.pulse_fraction + self.delay_fraction


def _ramp_profile(u: np.ndarray, ramp: Ramp) -> np.ndarray:
    """Monotone C1 map of [0, 1] onto [0, 1] with zero slope at both ends."""
    u = np.clip(u, 0.0, 1.0)
    if ramp is Ramp.SIN2:
        return np.sin(0.5 * np.pi * u) ** 2
    a = _BLEND
    slope = 1.0 / (1.0 - a)
    return np.where(
        u < a,
        slope * u * u / (2 * a),
        np.where(u > 1 - a, 1.0 - slope * (1 - u) ** 2 / (2 * a), slope * (u - a / 2)),
    )


def _pulse(u: np.ndarray, plan: TrajectoryPlan) -> np.ndarray:
    """Depth of one pulse (0 at rest, 1 at ``d_min``) at pulse-local time ``u``."""
    r = plan.ramp_fraction
    p = plan.pulse_fraction
    g = np.where(
        u < r,
        _ramp_profile(u / r, plan.ramp),
        np.where(u <= r + plan.dwell_fraction, 1.0, _ramp_profile((p - u) / r, plan.ramp)),
    )
    return np.where((u <= 0) | (u >= p), 0.0, g)


def distances_at_fraction(plan: TrajectoryPlan, s: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
    """``(d_LM, d_MR)`` at normalized times ``s = t / t_f`` (vectorized).

    The schedule depends on time only through ``s``, which is what allows
    sweeps over ``t_f`` to share one stepping loop.
    """
    s = np.asarray(s, dtype=float)
    if plan.frozen:
        rest = np.full(s.shape, plan.d_max)
        return rest, rest.copy()
    start = 0.5 * (1.0 - plan.active_span)
    span = plan.d_max - plan.d_min
    d_mr = plan.d_max - span * _pulse(s - start, plan)
    d_lm = plan.d_max - span * _pulse(s - start - plan.delay_fraction, plan)
    return d_lm, d_mr


def plan_distances(plan: TrajectoryPlan, t: float) -> tuple[float, float]:
    """Separations ``(d_LM, d_MR)`` at time ``t``.

    Raises
    ------
    ValueError
        If ``t`` lies outside ``[0, t_f]``.
    """
    t = float(t)
    if not (0.0 <= t <= plan.t_f):
        raise ValueError(f"t={t} outside [0, {plan.t_f}]")
    if plan.t_f == 0.0:
        return plan.d_max, plan.d_max
    d_lm, d_mr = distances_at_fraction(plan, t / plan.t_f)
    return float(d_lm), float(d_mr)


@dataclass(frozen=True)
class PotentialSnapshot:
    """``V(x, y) = x**2/2 + W(y)`` with ``W`` the lower envelope of three unit parabolas."""

    trap_centers_y: tuple[float, float, float]

    def w(self, y: np.ndarray | float) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        c = self.trap_centers_y
        out = (y - c[0]) ** 2
        out = np.minimum(out, (y - c[1]) ** 2)
        out = np.minimum(out, (y - c[2]) ** 2)
        return 0.5 * out

    def __call__(self, x: np.ndarray | float, y: np.ndarray | float) -> np.ndarray:
        return 0.5 * np.asarray(x, dtype=float) ** 2 + self.w(y)

    @property
    def region_bounds(self) -> tuple[float, float]:
        """Midpoints separating the left/middle and middle/right regions."""
        c = self.trap_centers_y
        return 0.5 * (c[0] + c[1]), 0.5 * (c[1] + c[2])


def snapshot(plan: TrajectoryPlan, t: float) -> PotentialSnapshot:
    d_lm, d_mr = plan_distances(plan, t)
    return PotentialSnapshot((-d_lm, 0.0, d_mr))


def write_plan_csv(path: str | Path, plan: TrajectoryPlan, samples: int = 601) -> None:
    """Dump ``(t, d_LM, d_MR)`` on a uniform time grid."""
    from .csvio import write_table

    s = np.linspace(0.0, 1.0, samples)
    d_lm, d_mr = distances_at_fraction(plan, s)
    write_table(path, ["t", "d_LM", "d_MR"], zip(s * plan.t_f, d_lm, d_mr))
