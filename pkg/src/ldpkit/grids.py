"""Uniform time grids.

Every trajectory, noise record and control in the toolkit lives on a
uniform grid [t_start, t_end] with `steps` increments.  States are sampled
at the steps+1 grid points; increments and controls are attached to the
steps left endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

# Two grids are considered aligned when their step indices agree to this
# relative tolerance; guards against accumulated floating point drift in
# t_start/dt arithmetic, not against genuinely mismatched grids.
_ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_start, t_end] with `steps` equal increments."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not np.isfinite(self.t_start) or not np.isfinite(self.t_end):
            raise InputError("grid endpoints must be finite")
        if self.t_end <= self.t_start:
            raise InputError(
                f"grid needs t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )
        if int(self.steps) != self.steps or self.steps < 1:
            raise InputError(f"grid needs a positive integer step count, got {self.steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    def times(self) -> np.ndarray:
        """All steps+1 grid points."""
        return self.t_start + self.dt * np.arange(self.steps + 1)

    def midpoints(self) -> np.ndarray:
        """The steps interval midpoints."""
        return self.t_start + self.dt * (np.arange(self.steps) + 0.5)

    def index_of(self, t: float) -> int:
        """Grid point index of time t; t must sit on the grid."""
        x = (t - self.t_start) / self.dt
        i = int(round(x))
        if i < 0 or i > self.steps or abs(x - i) > _ALIGN_RTOL * max(1.0, abs(x)):
            raise InputError(f"time {t} is not a point of {self}")
        return i


def from_dt(t_start: float, t_end: float, dt: float) -> TimeGrid:
    """Grid on [t_start, t_end] with the step count implied by dt.

    The span must be an integer number of steps (to alignment tolerance);
    a silently stretched dt would break noise-record alignment.
    """
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    raw = (t_end - t_start) / dt
    steps = int(round(raw))
    if steps < 1 or abs(raw - steps) > 1e-6 * max(1.0, raw):
        raise InputError(
            f"window [{t_start}, {t_end}] is not an integer number of dt={dt} steps"
        )
    return TimeGrid(t_start, t_end, steps)


def same_spacing(a: TimeGrid, b: TimeGrid) -> bool:
    return abs(a.dt - b.dt) <= _ALIGN_RTOL * max(a.dt, b.dt)


def step_offset(outer: TimeGrid, inner: TimeGrid) -> int:
    """Index of inner.t_start within outer, requiring equal dt and coverage.

    Raises InputError when the grids do not share spacing or the inner
    window leaves the outer one.
    """
    if not same_spacing(outer, inner):
        raise InputError(
            f"grid spacing mismatch: dt={outer.dt} vs dt={inner.dt}"
        )
    x = (inner.t_start - outer.t_start) / outer.dt
    off = int(round(x))
    if abs(x - off) > _ALIGN_RTOL * max(1.0, abs(x)):
        raise InputError("grids are not offset by a whole number of steps")
    if off < 0 or off + inner.steps > outer.steps:
        raise InputError(
            f"window [{inner.t_start}, {inner.t_end}] not covered by "
            f"[{outer.t_start}, {outer.t_end}]"
        )
    return off
