"""Path cost: control recovery and the quadratic action.

A path u pays, per step, half the squared mode-coefficient norm of the
control that drives the skeleton equation through it.  The control is
recovered by a midpoint inversion consistent with the Heun stepper:

    r_i = (u_{i+1} - u_i)/dt - f((u_i+u_{i+1})/2, t_i + dt/2)
    v_i = <r_i, e_k>_H / (c_k b(m_i))        per mode k,

so the discrete action is (1/2) dt sum_i |v_i|^2 and the infimum over an
empty feasible set is infinite: residual components outside the mode
span cannot be produced by any control and are reported as a defect
rather than silently dropped.

action_gradient differentiates this discrete functional exactly (the
midpoint states enter both the residual and the diffusion factor), which
is what the minimum-action module descends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NonInvertibleDiffusionError
from .grids import TimeGrid
from .integrate import Path
from .models import ModelSpec, drift, h_norm_sq

# diffusion factors smaller than this cannot be divided out
FACTOR_FLOOR = 1e-10


@dataclass(frozen=True)
class Control:
    """Per-step mode coefficients of a control; shape (steps, K).

    sq_norm is the squared L2-in-time norm dt * sum |coeffs|^2 (midpoint
    rule).  bound_M, when given, is an a-priori budget the control must
    respect.
    """

    grid: TimeGrid
    coeffs: np.ndarray
    bound_M: Optional[float] = None

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 2 or coeffs.shape[0] != self.grid.steps:
            raise InputError(
                f"control coefficients must have shape (steps, K) = "
                f"({self.grid.steps}, K), got {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise InputError("control contains non-finite coefficients")
        object.__setattr__(self, "coeffs", coeffs)
        if self.bound_M is not None and self.sq_norm > self.bound_M * (1 + 1e-12):
            raise InputError(
                f"control norm {self.sq_norm:.6g} exceeds its budget {self.bound_M:.6g}"
            )

    @property
    def sq_norm(self) -> float:
        return float(self.grid.dt * np.sum(self.coeffs**2))

    @property
    def modes(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class ActionReport:
    """Action value with its per-step decomposition and inversion defect."""

    value: float
    per_step: np.ndarray
    defect: float
    control: Control

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "defect": self.defect,
            "per_step": [float(x) for x in self.per_step],
        }


def save_action_report(report: ActionReport, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def _check_path(model: ModelSpec, path: Path) -> None:
    if path.dim != model.dim:
        raise InputError(
            f"path dimension {path.dim} does not match model '{model.name}' ({model.dim})"
        )


def _invert(model: ModelSpec, path: Path):
    """Midpoint residuals, mode coefficients, midpoint states and factors."""
    _check_path(model, path)
    u = path.states
    dt = path.grid.dt
    mids = 0.5 * (u[:-1] + u[1:])
    tmid = path.grid.midpoints()
    resid = np.diff(u, axis=0) / dt - drift(model, mids, tmid)
    b = np.atleast_1d(model.diffusion_factor(mids))
    if np.min(np.abs(b)) < FACTOR_FLOOR:
        i = int(np.argmin(np.abs(b)))
        raise NonInvertibleDiffusionError(
            f"diffusion factor |b| = {abs(b[i]):.3e} at step {i} is below "
            f"{FACTOR_FLOOR:.0e}; no control reproduces this path"
        )
    if np.min(model.mode_weights) <= 0:
        raise NonInvertibleDiffusionError("mode weights must be positive to invert")
    proj = model.mass * resid @ model.mode_matrix          # <r, e_k>_H
    coeffs = proj / (model.mode_weights * b[:, None])
    span = proj @ model.mode_matrix.T
    defects = np.sqrt(h_norm_sq(model, resid - span))
    return coeffs, defects, mids, tmid, b


def control_from_path(model: ModelSpec, path: Path) -> Control:
    """The control whose skeleton trajectory is `path` (midpoint inversion)."""
    coeffs, _, _, _, _ = _invert(model, path)
    return Control(path.grid, coeffs)


def action(model: ModelSpec, path: Path) -> ActionReport:
    """Half the squared control norm of `path`, with per-step terms.

    defect is the L2-in-time H-norm of the residual component outside the
    mode span; a non-negligible defect means no admissible control
    produces the path exactly and the true cost is infinite.
    """
    coeffs, defects, _, _, _ = _invert(model, path)
    dt = path.grid.dt
    per_step = 0.5 * dt * np.sum(coeffs**2, axis=1)
    value = float(np.sum(per_step))
    defect = float(np.sqrt(dt * np.sum(defects**2)))
    return ActionReport(value=value, per_step=per_step, defect=defect,
                        control=Control(path.grid, coeffs))


def _assemble_gradient(model: ModelSpec, path: Path, coeffs, mids, tmid, b,
                       fixed_endpoints) -> np.ndarray:
    dt = path.grid.dt
    # dS through the residual: a_i = dt * mass/b_i * sum_k (h_ik/c_k) e_k
    avec = (dt * model.mass / b)[:, None] * (
        (coeffs / model.mode_weights) @ model.mode_matrix.T
    )
    jta = model.drift_jacT(mids, tmid, avec)
    # dS through the diffusion factor: q_i = dt |h_i|^2 / b_i
    q = dt * np.sum(coeffs**2, axis=1) / b
    qgb = q[:, None] * model.grad_diffusion_factor(mids)
    core = -0.5 * (jta + qgb)
    steps = path.grid.steps
    grad = np.zeros_like(path.states)
    grad[0] = -avec[0] / dt + core[0]
    grad[steps] = avec[-1] / dt + core[-1]
    if steps > 1:
        grad[1:steps] = (avec[:-1] - avec[1:]) / dt + core[:-1] + core[1:]
    if fixed_endpoints[0]:
        grad[0] = 0.0
    if fixed_endpoints[1]:
        grad[steps] = 0.0
    return grad


def action_gradient(model: ModelSpec, path: Path,
                    fixed_endpoints: tuple[bool, bool] = (True, True)) -> np.ndarray:
    """Exact gradient of the discrete action w.r.t. the path states.

    Shape (steps+1, dim); rows for pinned endpoints are zeroed according
    to fixed_endpoints.
    """
    coeffs, _, mids, tmid, b = _invert(model, path)
    return _assemble_gradient(model, path, coeffs, mids, tmid, b, fixed_endpoints)


def value_and_gradient(model: ModelSpec, path: Path,
                       fixed_endpoints: tuple[bool, bool] = (True, True)):
    """Action value and exact gradient from a single inversion pass."""
    coeffs, _, mids, tmid, b = _invert(model, path)
    value = float(0.5 * path.grid.dt * np.sum(coeffs**2))
    grad = _assemble_gradient(model, path, coeffs, mids, tmid, b, fixed_endpoints)
    return value, grad


def save_control(control: Control, filename) -> None:
    """CSV with one row per step: the step's start time, then the K coefficients."""
    grid = control.grid
    times = grid.times()[:-1]
    table = np.column_stack([times, control.coeffs])
    header = "time," + ",".join(f"v{k + 1}" for k in range(control.modes))
    np.savetxt(filename, table, delimiter=",", header=header, comments="", fmt="%.17g")


def load_control(filename) -> Control:
    table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] < 2:
        raise InputError(f"control file {filename} has no coefficient columns")
    times = table[:, 0]
    steps = len(times)
    if steps < 1:
        raise InputError(f"control file {filename} is empty")
    if steps == 1:
        raise InputError(
            f"control file {filename} has a single row; the step size is ambiguous"
        )
    dts = np.diff(times)
    dt = float(np.mean(dts))
    if dt <= 0 or np.max(np.abs(dts - dt)) > 1e-9 * max(abs(dt), 1.0):
        raise InputError(f"control file {filename} has a non-uniform time column")
    grid = TimeGrid(float(times[0]), float(times[0]) + steps * dt, steps)
    return Control(grid, table[:, 1:])
