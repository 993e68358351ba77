"""Minimum-action paths to a target state, and the cost landscape they trace.

A path from the rest state at time -T to a target at time 0 is scored by
the quadratic action; minimizing over the interior states with both
endpoints pinned gives the cheapest transition at that horizon.  Sending
T to infinity through a horizon schedule, warm-starting each longer
window from the previous minimizer, turns the finite-horizon minima into
the transition cost from rest, which is also the rate at which the
stationary distribution's mass decays near the target as the noise
strength goes to zero.

The descent runs on the exact gradient of the discretized functional, so
the optimizer sees a consistent objective down to round-off.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .action import value_and_gradient
from .errors import ConfigurationError, InputError, OptimizationStalledError
from .grids import TimeGrid
from .integrate import Path, integrate_skeleton
from .models import ModelSpec

_OPTIONS = {"maxcor": 10, "gtol": 1e-6, "ftol": 1e-14, "maxiter": 5000,
            "maxfun": 20000}


@dataclass(frozen=True)
class QPResult:
    """Horizon-continuation record for one target state."""

    target: np.ndarray
    horizons: list
    values: list
    iterations: list
    converged_value: float
    converged: bool
    warning: Optional[str]
    path: Path

    def to_dict(self) -> dict:
        return {
            "target": [float(x) for x in np.atleast_1d(self.target)],
            "horizons": [float(t) for t in self.horizons],
            "values": [float(v) for v in self.values],
            "iterations": [int(n) for n in self.iterations],
            "converged_value": float(self.converged_value),
            "converged": self.converged,
            "warning": self.warning,
        }


def save_qp_result(result: QPResult, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2)
        fh.write("\n")


def _check_autonomous(model: ModelSpec) -> None:
    if not model.autonomous:
        raise ConfigurationError(
            f"'{model.name}' has explicit time dependence; transition costs "
            "from rest are defined here only for autonomous drift"
        )


def _check_target(model: ModelSpec, target) -> np.ndarray:
    x = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if x.shape != (model.dim,):
        raise InputError(
            f"target shape {x.shape} does not match model '{model.name}' "
            f"(dim {model.dim})"
        )
    if not np.all(np.isfinite(x)):
        raise InputError("target contains non-finite entries")
    return x


def _initial_states(model: ModelSpec, target: np.ndarray, grid: TimeGrid,
                    init: Union[Path, str]) -> np.ndarray:
    steps = grid.steps
    if isinstance(init, Path):
        if init.dim != model.dim:
            raise InputError(
                f"warm-start path dimension {init.dim} does not match "
                f"model '{model.name}'"
            )
        old_t = init.grid.times()
        new_t = grid.times()
        states = np.column_stack(
            [np.interp(new_t, old_t, init.states[:, d]) for d in range(model.dim)]
        )
    elif init == "linear":
        states = np.linspace(0.0, 1.0, steps + 1)[:, None] * target[None, :]
    elif init == "reversed-flow":
        # the forward flow from the target decays toward rest; played
        # backwards it is a candidate transition path
        forward = integrate_skeleton(model, target, TimeGrid(0.0, grid.t_end - grid.t_start, steps))
        states = forward.states[::-1].copy()
    else:
        raise InputError(
            f"init must be 'linear', 'reversed-flow' or a Path, got {init!r}"
        )
    states[0] = 0.0
    states[steps] = target
    return states


def _minimize(model: ModelSpec, target: np.ndarray, T: float, grid_steps: int,
              init: Union[Path, str]):
    if T <= 0:
        raise InputError(f"horizon must be positive, got {T}")
    if grid_steps < 2:
        raise InputError(f"need at least 2 steps to have interior states, got {grid_steps}")
    grid = TimeGrid(-float(T), 0.0, int(grid_steps))
    states0 = _initial_states(model, target, grid, init)
    steps = grid.steps
    dim = model.dim

    def objective(z):
        states = states0.copy()
        states[1:steps] = z.reshape(steps - 1, dim)
        path = Path(grid, states)
        value, grad = value_and_gradient(model, path)
        return value, grad[1:steps].ravel()

    res = _scipy_minimize(objective, states0[1:steps].ravel(), jac=True,
                          method="L-BFGS-B", options=_OPTIONS)
    states = states0.copy()
    states[1:steps] = res.x.reshape(steps - 1, dim)
    path = Path(grid, states)
    if res.status == 2:
        raise OptimizationStalledError(
            f"optimizer stalled before reaching tolerance: {res.message}",
            path=path,
            value=float(res.fun),
        )
    return path, float(res.fun), int(res.nit), bool(res.status == 0)


def minimize_action(model: ModelSpec, target, T: float, grid_steps: int,
                    init: Union[Path, str] = "linear"):
    """Cheapest discrete path from rest at -T to `target` at 0.

    Returns (path, value).  The optimizer stopping at its iteration cap
    still returns the best path found; a failed line search raises
    OptimizationStalledError carrying the best iterate.
    """
    _check_autonomous(model)
    x = _check_target(model, target)
    path, value, _, _ = _minimize(model, x, T, grid_steps, init)
    return path, value


def default_t_schedule(model: ModelSpec) -> list[float]:
    """Horizons {4, 6, 8} relaxation times; enough for the shipped models."""
    r = model.relax_rate
    return [4.0 / r, 6.0 / r, 8.0 / r]


def quasipotential(model: ModelSpec, target, T_schedule=None,
                   steps_per_unit: float = 50.0, tol: float = 1e-3) -> QPResult:
    """Transition cost from rest via horizon continuation.

    Minimizes at each horizon in turn, warm-starting from the previous
    minimizer held at rest on the extension; stops early once consecutive
    values agree within `tol`.  Values can only decrease with T, so an
    increase beyond optimizer precision is flagged and converged is set
    to False.
    """
    _check_autonomous(model)
    x = _check_target(model, target)
    if T_schedule is None:
        T_schedule = default_t_schedule(model)
    T_schedule = [float(t) for t in T_schedule]
    if len(T_schedule) < 1:
        raise InputError("T_schedule must contain at least one horizon")
    if any(b <= a for a, b in zip(T_schedule, T_schedule[1:])):
        raise InputError(f"T_schedule must be strictly increasing, got {T_schedule}")
    if steps_per_unit <= 0:
        raise InputError(f"steps_per_unit must be positive, got {steps_per_unit}")
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")

    horizons = []
    values = []
    iterations = []
    warning = None
    converged = False
    path = None
    init: Union[Path, str] = "linear"
    for T in T_schedule:
        grid_steps = max(2, int(round(T * steps_per_unit)))
        path, value, nit, opt_ok = _minimize(model, x, T, grid_steps, init)
        horizons.append(T)
        values.append(value)
        iterations.append(nit)
        if not opt_ok and warning is None:
            warning = (
                f"optimizer hit its iteration cap at horizon {T}; "
                "the value may not be fully polished"
            )
        if len(values) >= 2:
            slack = 1e-8 + 1e-5 * abs(values[-2])
            if values[-1] > values[-2] + slack:
                warning = (
                    f"value increased from {values[-2]:.6g} to {values[-1]:.6g} "
                    f"between horizons {horizons[-2]} and {horizons[-1]}; "
                    "the optimizer appears trapped"
                )
                converged = False
                break
            if abs(values[-1] - values[-2]) < tol:
                converged = True
                break
        init = path
    return QPResult(target=x, horizons=horizons, values=values,
                    iterations=iterations, converged_value=values[-1],
                    converged=converged, warning=warning, path=path)
