"""Time stepping: Euler-Maruyama for the noisy equation, Heun for the
controlled (skeleton) equation.

    noisy:     x_{i+1} = x_i + dt f(x_i, t_i) + sqrt(eps) B(x_i) dW_i
    skeleton:  explicit trapezoidal step of  u' = f(u, t) + B(u) v,
               with the control held constant over each step.

f is the full drift A u + F(u) + g(t).  The skeleton scheme is the one
the action discretization (midpoint inversion) is consistent with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError, InputError
from .grids import TimeGrid, same_spacing, step_offset
from .models import ModelSpec, apply_diffusion, drift, h_norm_sq
from .noise import NoisePath

# Trajectories whose H-norm passes this are declared divergent.
BLOWUP_NORM = 1e6


@dataclass(frozen=True)
class Path:
    """States sampled at all grid points; shape (steps+1, dim)."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[0] != self.grid.steps + 1:
            raise InputError(
                f"path states must have shape (steps+1, dim) = "
                f"({self.grid.steps + 1}, dim), got {states.shape}"
            )
        if not np.all(np.isfinite(states)):
            raise InputError("path contains non-finite states")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def at(self, t: float) -> np.ndarray:
        return self.states[self.grid.index_of(t)]

    def restrict(self, grid: TimeGrid) -> "Path":
        off = step_offset(self.grid, grid)
        return Path(grid, self.states[off : off + grid.steps + 1])


def save_path(path: Path, filename) -> None:
    """CSV with a time column and one column per state dimension."""
    table = np.column_stack([path.grid.times(), path.states])
    header = "time," + ",".join(f"x{i + 1}" for i in range(path.dim))
    np.savetxt(filename, table, delimiter=",", fmt="%.17g", header=header, comments="")


def load_path(filename) -> Path:
    table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] < 2:
        raise InputError(f"{filename}: need a time column plus state columns")
    times = table[:, 0]
    if len(times) < 2:
        raise InputError(f"{filename}: need at least two samples")
    dts = np.diff(times)
    dt = dts[0]
    if dt <= 0 or np.max(np.abs(dts - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise InputError(f"{filename}: time column is not a uniform grid")
    grid = TimeGrid(float(times[0]), float(times[-1]), len(times) - 1)
    return Path(grid, table[:, 1:])


def _check_x0(model: ModelSpec, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.dim,):
        raise InputError(
            f"initial state for '{model.name}' must have shape ({model.dim},), got {x0.shape}"
        )
    if not np.all(np.isfinite(x0)):
        raise InputError("initial state contains non-finite values")
    return x0


def em_step_sde(model: ModelSpec, x0, grid: TimeGrid, noise: NoisePath,
                eps: float) -> Path:
    """Euler-Maruyama trajectory of the noisy equation on `grid`.

    The noise record must cover the grid with the same spacing; its
    increments are consumed mode-wise through the model's diffusion.
    """
    x = _check_x0(model, x0)
    if eps < 0:
        raise InputError(f"eps must be non-negative, got {eps}")
    if noise.modes != model.modes:
        raise InputError(
            f"noise carries {noise.modes} modes, model '{model.name}' expects {model.modes}"
        )
    inc = noise.restrict(_steps_window(noise, grid)).increments
    dt = grid.dt
    # premultiplied mode drive: sqrt(eps) * sum_k dW_k c_k e_k per step
    drive = np.sqrt(eps) * (inc * model.mode_weights) @ model.mode_matrix.T
    times = grid.times()
    out = np.empty((grid.steps + 1, model.dim))
    out[0] = x
    limit = BLOWUP_NORM**2
    for i in range(grid.steps):
        x = x + dt * drift(model, x, times[i]) + model.diffusion_factor(x) * drive[i]
        if not np.all(np.isfinite(x)) or h_norm_sq(model, x) > limit:
            raise DivergenceError(
                f"trajectory of '{model.name}' diverged at step {i + 1} "
                f"(t = {times[i + 1]:.6g})",
                step=i + 1,
                time=float(times[i + 1]),
            )
        out[i + 1] = x
    return Path(grid, out)


def _steps_window(noise: NoisePath, grid: TimeGrid) -> TimeGrid:
    """The step window of `grid` inside the noise record (same object when aligned)."""
    if not same_spacing(noise.grid, grid):
        raise InputError(
            f"noise dt {noise.grid.dt} does not match trajectory dt {grid.dt}"
        )
    step_offset(noise.grid, grid)  # raises when not covered
    return grid


def _control_table(model: ModelSpec, grid: TimeGrid, control) -> np.ndarray:
    """Per-step mode coefficients aligned to `grid`, zero outside the support.

    Accepts None (zero control), a (steps, K) array on `grid`, or any
    object carrying .grid and .coeffs (a Control).
    """
    if control is None:
        return np.zeros((grid.steps, model.modes))
    coeffs = getattr(control, "coeffs", None)
    if coeffs is None:
        coeffs = np.asarray(control, dtype=np.float64)
        if coeffs.shape != (grid.steps, model.modes):
            raise InputError(
                f"raw control must have shape ({grid.steps}, {model.modes}), got {coeffs.shape}"
            )
        return coeffs
    cgrid: TimeGrid = control.grid
    if not same_spacing(cgrid, grid):
        raise InputError(
            f"control dt {cgrid.dt} does not match trajectory dt {grid.dt}"
        )
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[1] != model.modes:
        raise InputError(
            f"control carries {coeffs.shape[1]} modes, model expects {model.modes}"
        )
    out = np.zeros((grid.steps, model.modes))
    # overlap of the two step windows, zero elsewhere
    off = int(round((cgrid.t_start - grid.t_start) / grid.dt))
    lo = max(0, off)
    hi = min(grid.steps, off + cgrid.steps)
    if lo < hi:
        out[lo:hi] = coeffs[lo - off : hi - off]
    return out


def integrate_skeleton(model: ModelSpec, x0, grid: TimeGrid, control=None) -> Path:
    """Heun (explicit trapezoidal) trajectory of the controlled equation."""
    x = _check_x0(model, x0)
    if model.max_stable_dt is not None and grid.dt > model.max_stable_dt:
        raise ConfigurationError(
            f"dt = {grid.dt:.3e} exceeds the explicit stability ceiling "
            f"{model.max_stable_dt:.3e} of '{model.name}'"
        )
    table = _control_table(model, grid, control)
    dt = grid.dt
    times = grid.times()
    out = np.empty((grid.steps + 1, model.dim))
    out[0] = x
    limit = BLOWUP_NORM**2
    for i in range(grid.steps):
        v = table[i]
        k1 = drift(model, x, times[i]) + apply_diffusion(model, x, v)
        pred = x + dt * k1
        k2 = drift(model, pred, times[i + 1]) + apply_diffusion(model, pred, v)
        x = x + 0.5 * dt * (k1 + k2)
        if not np.all(np.isfinite(x)) or h_norm_sq(model, x) > limit:
            raise DivergenceError(
                f"skeleton trajectory of '{model.name}' diverged at step {i + 1} "
                f"(t = {times[i + 1]:.6g})",
                step=i + 1,
                time=float(times[i + 1]),
            )
        out[i + 1] = x
    return Path(grid, out)
