"""Monte Carlo evidence for the small-noise decay law of rare events.

Stationary samples at several noise strengths give rare-event
frequencies p(eps); if the stationary family satisfies a large
deviations principle, eps * log p(eps) tends to minus the cheapest
transition cost into the event as eps decreases.  This module produces
the samples (a batched pullback evaluated at time 0), the per-eps
estimates with confidence intervals, and the extrapolation of
eps * log p toward eps = 0 that is compared against the cost computed
by the minimum-action module.

Naive sampling only: event radii and the eps schedule must keep the
rarest probability within reach of the sample count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, InputError, InsufficientDataError, NonConvergenceError
from .models import ModelSpec, drift, h_norm, h_norm_sq
from .noise import derive_seed, derive_seeds_from, gaussian_block
from .pullback import _check_eps

_Z95 = 1.959963984540054
_BLOWUP_SQ = 1e12
_CHECK_EVERY = 256


@dataclass(frozen=True)
class Event:
    """Measurable predicate on states from the shipped family.

    kind "norm_ge": H-norm at least `threshold`; "coord_ge": coordinate
    `index` at least `threshold`; "box": all coordinates within
    [lo, hi] componentwise.
    """

    kind: str
    threshold: Optional[float] = None
    index: Optional[int] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    @classmethod
    def norm_ge(cls, threshold: float) -> "Event":
        if threshold < 0:
            raise InputError(f"norm threshold must be non-negative, got {threshold}")
        return cls(kind="norm_ge", threshold=float(threshold))

    @classmethod
    def coord_ge(cls, index: int, threshold: float) -> "Event":
        if index < 0:
            raise InputError(f"coordinate index must be non-negative, got {index}")
        return cls(kind="coord_ge", threshold=float(threshold), index=int(index))

    @classmethod
    def box(cls, lo, hi) -> "Event":
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if lo.shape != hi.shape:
            raise InputError(f"box corners must match, got {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise InputError("box has lo > hi in some coordinate")
        return cls(kind="box", lo=lo, hi=hi)

    def indicator(self, model: ModelSpec, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != model.dim:
            raise InputError(
                f"states must have shape (n, {model.dim}), got {states.shape}"
            )
        if self.kind == "norm_ge":
            return h_norm(model, states) >= self.threshold
        if self.kind == "coord_ge":
            if self.index >= model.dim:
                raise InputError(
                    f"coordinate {self.index} out of range for dim {model.dim}"
                )
            return states[:, self.index] >= self.threshold
        if self.kind == "box":
            if self.lo.shape != (model.dim,):
                raise InputError(
                    f"box corners have shape {self.lo.shape}, model dim is {model.dim}"
                )
            return np.all((states >= self.lo) & (states <= self.hi), axis=1)
        raise InputError(f"unknown event kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "norm_ge":
            return f"norm_ge({self.threshold:g})"
        if self.kind == "coord_ge":
            return f"coord_ge({self.index}, {self.threshold:g})"
        return f"box({self.lo.tolist()}, {self.hi.tolist()})"


@dataclass(frozen=True)
class MCEstimate:
    """One rare-event frequency with its Wilson 95% interval."""

    eps: float
    event: str
    n_samples: int
    hits: int
    p_hat: float
    lo95: float
    hi95: float
    log_scaled: Optional[float]
    low_statistics: bool

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise InputError(f"p_hat must be a probability, got {self.p_hat}")
        if self.hits < 0 or (self.n_samples > 0 and self.hits > self.n_samples):
            raise InputError(
                f"hit count {self.hits} inconsistent with {self.n_samples} samples"
            )

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "event": self.event,
            "n_samples": self.n_samples,
            "hits": self.hits,
            "p_hat": self.p_hat,
            "lo95": self.lo95,
            "hi95": self.hi95,
            "log_scaled": self.log_scaled,
            "low_statistics": self.low_statistics,
        }


def wilson_interval(hits: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """95% score interval for a binomial proportion; valid down to 0 hits."""
    if n < 1:
        raise InputError(f"need at least one sample, got {n}")
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # at the boundary counts center - half is 0 (resp. 1) analytically;
    # do not let round-off dust survive there
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == n else min(1.0, center + half)
    return lo, hi


def make_estimate(eps: float, event: str, n_samples: int, hits: int) -> MCEstimate:
    lo, hi = wilson_interval(hits, n_samples)
    p_hat = hits / n_samples
    log_scaled = eps * math.log(p_hat) if hits > 0 else None
    return MCEstimate(eps=eps, event=event, n_samples=n_samples, hits=hits,
                      p_hat=p_hat, lo95=lo, hi95=hi, log_scaled=log_scaled,
                      low_statistics=hits == 0)


def _default_sample_horizons(model: ModelSpec) -> list[float]:
    r = model.relax_rate
    return [10.0 / r, 20.0 / r]


def _batched_pullback_states(model: ModelSpec, eps: float, seeds, steps_list,
                             dt: float, window: int = 2048) -> list[np.ndarray]:
    """Time-0 states of one chunk, one run per horizon, sharing increments.

    All runs advance through one absolute-step loop, each joining at its
    own start time, so every horizon sees the same realization per seed.
    Increments are generated in windows to keep memory flat in the
    horizon length.
    """
    n = len(seeds)
    big = steps_list[-1]
    scale = math.sqrt(eps)
    rest = np.broadcast_to(model.pullback_init, (n, model.dim)).astype(np.float64)
    x = [None] * len(steps_list)
    for w0 in range(-big, 0, window):
        w1 = min(w0 + window, 0)
        inc = gaussian_block(seeds, w0, w1 - w0, model.modes, dt)
        drive = scale * (inc * model.mode_weights) @ model.mode_matrix.T
        for j in range(w0, w1):
            t = j * dt
            for k, steps in enumerate(steps_list):
                if j == -steps:
                    x[k] = rest.copy()
                if j >= -steps:
                    d = drift(model, x[k], t)
                    b = np.atleast_1d(model.diffusion_factor(x[k]))
                    x[k] = x[k] + dt * d + b[:, None] * drive[:, j - w0, :]
            if j % _CHECK_EVERY == 0 or j == -1:
                sq = h_norm_sq(model, x[-1])
                if not np.all(np.isfinite(sq)) or np.max(sq) > _BLOWUP_SQ:
                    bad = int(np.argmax(np.where(np.isfinite(sq), sq, np.inf)))
                    raise DivergenceError(
                        f"sample with derived seed {seeds[bad]} diverged at "
                        f"t = {t:.6g}; smaller dt or eps needed",
                        step=j + big, time=t,
                    )
    return x


def sample_stationary(model: ModelSpec, eps: float, n_samples: int, seed: int,
                      dt: Optional[float] = None, horizons=None,
                      tol: float = 1e-3, chunk_target: int = 4_000_000) -> np.ndarray:
    """Independent stationary states at time 0; shape (n_samples, dim).

    Each sample integrates its own derived-seed realization from two
    rest-state start times; the H-gap between the two runs at time 0
    must fall below `tol` or the offending seed is reported.
    """
    _check_eps(model, eps)
    if n_samples < 1:
        raise InputError(f"need at least one sample, got {n_samples}")
    if dt is None:
        dt = model.default_dt
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    if model.max_stable_dt is not None and dt > model.max_stable_dt:
        raise InputError(
            f"dt = {dt} exceeds the stable ceiling {model.max_stable_dt} "
            f"of '{model.name}'"
        )
    if horizons is None:
        horizons = _default_sample_horizons(model)
    horizons = [float(h) for h in horizons]
    if len(horizons) < 2 or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise InputError(f"horizons must be at least two, increasing, got {horizons}")
    steps_list = [max(1, math.ceil(h / dt - 1e-9)) for h in horizons]
    if any(b <= a for a, b in zip(steps_list, steps_list[1:])):
        raise InputError(f"horizons {horizons} collapse onto the same step counts at dt={dt}")

    seeds = derive_seeds_from(seed, 0, n_samples)
    window = 2048
    per_sample = min(window, steps_list[-1]) * max(model.modes, model.dim)
    chunk = max(1, min(n_samples, chunk_target // per_sample))
    samples = np.empty((n_samples, model.dim))
    for start in range(0, n_samples, chunk):
        sl = slice(start, min(start + chunk, n_samples))
        states = _batched_pullback_states(model, eps, seeds[sl], steps_list, dt,
                                          window=window)
        gap = h_norm(model, states[-1] - states[-2])
        if np.any(gap >= tol):
            bad = int(np.argmax(gap))
            raise NonConvergenceError(
                f"stationary sample with derived seed {seeds[sl][bad]} has "
                f"pullback gap {gap[bad]:.3e} at tolerance {tol:g}; "
                "longer horizons may be needed",
                gaps=[float(gap[bad])],
                seed=int(seeds[sl][bad]),
            )
        samples[sl] = states[-1]
    return samples


DEFAULT_EPS_SCHEDULE = (0.4, 0.2, 0.1, 0.05)


def estimate_event(model: ModelSpec, event: Event, eps_list=None,
                   n_samples: int = 100_000, seed: int = 0,
                   dt: Optional[float] = None, horizons=None,
                   tol: float = 1e-3) -> list[MCEstimate]:
    """One MCEstimate per eps, all from independent derived seed streams."""
    if eps_list is None:
        eps_list = list(DEFAULT_EPS_SCHEDULE)
    if not isinstance(event, Event):
        raise InputError(f"event must be an Event, got {type(event).__name__}")
    estimates = []
    for j, eps in enumerate(eps_list):
        states = sample_stationary(model, eps, n_samples, derive_seed(seed, j),
                                   dt=dt, horizons=horizons, tol=tol)
        hits = int(np.count_nonzero(event.indicator(model, states)))
        estimates.append(make_estimate(float(eps), event.describe(), n_samples, hits))
    return estimates


def save_estimates(estimates, filename) -> None:
    """CSV: eps,n,hits,p_hat,lo95,hi95,log_scaled (blank when undefined)."""
    with open(filename, "w") as fh:
        fh.write("eps,n,hits,p_hat,lo95,hi95,log_scaled\n")
        for e in estimates:
            tail = "" if e.log_scaled is None else f"{e.log_scaled:.17g}"
            fh.write(
                f"{e.eps:.17g},{e.n_samples},{e.hits},{e.p_hat:.17g},"
                f"{e.lo95:.17g},{e.hi95:.17g},{tail}\n"
            )


@dataclass(frozen=True)
class SlopeFit:
    """Extrapolation of eps*log p to eps -> 0 against a reference cost."""

    intercept: float
    slope: float
    richardson: float
    reference: float
    distance: float
    residuals: list
    n_points: int

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slope": self.slope,
            "richardson": self.richardson,
            "reference": self.reference,
            "distance": self.distance,
            "residuals": [float(r) for r in self.residuals],
            "n_points": self.n_points,
        }


def save_slope_fit(fit: SlopeFit, filename) -> None:
    with open(filename, "w") as fh:
        json.dump(fit.to_dict(), fh, indent=2)
        fh.write("\n")


def ldp_slope(estimates, reference: float) -> SlopeFit:
    """Weighted linear fit of eps*log p_hat in eps, extrapolated to 0.

    Weights come from the estimates' interval widths on the log scale;
    exact (zero-width) points get a floor weight.  Also reports the
    two-point extrapolation from the two smallest eps and the distance
    of the fitted intercept to -reference.
    """
    usable = [e for e in estimates if e.log_scaled is not None]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"slope fit needs at least 3 estimates with hits, got {len(usable)}"
        )
    eps = np.array([e.eps for e in usable])
    if len(np.unique(eps)) < 3:
        raise InsufficientDataError("slope fit needs at least 3 distinct eps values")
    y = np.array([e.log_scaled for e in usable])
    sigma = np.array(
        [
            max(e.eps * (math.log(e.hi95) - math.log(max(e.lo95, 1e-300))) / (2 * _Z95), 1e-12)
            for e in usable
        ]
    )
    slope, intercept = np.polyfit(eps, y, 1, w=1.0 / sigma)
    resid = y - (intercept + slope * eps)
    order = np.argsort(eps)
    e1, e2 = eps[order[0]], eps[order[1]]
    y1, y2 = y[order[0]], y[order[1]]
    if e2 == e1:
        raise InsufficientDataError("two smallest eps coincide; cannot extrapolate")
    richardson = float((y1 * e2 - y2 * e1) / (e2 - e1))
    return SlopeFit(
        intercept=float(intercept),
        slope=float(slope),
        richardson=richardson,
        reference=float(reference),
        distance=float(abs(intercept + reference)),
        residuals=[float(r) for r in resid],
        n_points=len(usable),
    )
