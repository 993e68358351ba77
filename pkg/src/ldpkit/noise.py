"""Driving noise: counter-keyed Gaussian increment records.

Every mode-k increment over a grid step is an independent N(0, dt) draw.
Draws are produced by hashing a 64-bit counter derived from
(seed, absolute step index, mode) through a splitmix-style finalizer and
mapping the resulting uniform through the inverse normal CDF.  There is
no generator state: any sub-window of any window regenerates bit-identical
values, which is what the pullback ladder relies on when it re-integrates
the same realization from successively earlier start times.

Step indices are absolute, anchored at t = 0 (index floor is round(t/dt)),
and may be negative; a zigzag bijection folds them into the counter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .errors import InputError
from .grids import TimeGrid, step_offset

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_SALT_STREAM = np.uint64(0x243F6A8885A308D3)
_SALT_DERIVE = np.uint64(0x452821E638D01377)

_U64_MAX = (1 << 64) - 1


def _as_u64(seed: int) -> np.uint64:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise InputError(f"seed must be an integer, got {seed!r}")
    if seed < 0 or seed > _U64_MAX:
        raise InputError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.uint64(seed)


def _mix64(x: np.ndarray) -> np.ndarray:
    # Stafford variant-13 finalizer; operates in place on a copy.
    x = np.array(x, dtype=np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _MIX_A
    x ^= x >> np.uint64(27)
    x *= _MIX_B
    x ^= x >> np.uint64(31)
    return x


def derive_seed(seed: int, index: int) -> int:
    """Child seed for a numbered sub-stream (one per Monte Carlo sample).

    Double mixing keeps the child streams out of phase with the parent's
    own counter sequence.
    """
    if index < 0:
        raise InputError(f"stream index must be non-negative, got {index}")
    return int(derive_seeds_from(seed, index, 1)[0])


def derive_seeds_from(seed: int, first_index: int, count: int) -> np.ndarray:
    """Child seeds for indices [first_index, first_index + count), as uint64."""
    if first_index < 0 or count < 0:
        raise InputError(
            f"stream index range must be non-negative, got start {first_index} "
            f"count {count}"
        )
    base = _mix64(np.array([_as_u64(seed) ^ _SALT_DERIVE]))
    idx = np.arange(first_index + 1, first_index + count + 1, dtype=np.uint64)
    return _mix64(base + idx * _GOLDEN)


def _stream_states(seeds) -> np.ndarray:
    arr = np.asarray([_as_u64(s) for s in np.atleast_1d(seeds)], dtype=np.uint64)
    return _mix64(arr ^ _SALT_STREAM)


def _zigzag(steps: np.ndarray) -> np.ndarray:
    steps = np.asarray(steps, dtype=np.int64)
    return np.where(steps >= 0, 2 * steps, -2 * steps - 1).astype(np.uint64)


def gaussian_block(seeds, first_step: int, steps: int, modes: int, dt: float) -> np.ndarray:
    """N(0, dt) increments for absolute steps [first_step, first_step+steps).

    Returns shape (len(seeds), steps, modes); each seed indexes an
    independent stream, each (step, mode) cell a fixed counter word.
    """
    if modes < 1:
        raise InputError(f"mode count must be positive, got {modes}")
    if steps < 0:
        raise InputError("step count must be non-negative")
    states = _stream_states(seeds)
    z = _zigzag(first_step + np.arange(steps, dtype=np.int64))
    words = z[:, None] * np.uint64(modes) + np.arange(modes, dtype=np.uint64)[None, :]
    x = states[:, None, None] + (words[None, :, :] + np.uint64(1)) * _GOLDEN
    x = _mix64(x)
    # 53-bit uniform strictly inside (0, 1); ndtri stays finite.
    u = ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u) * np.sqrt(dt)


@dataclass(frozen=True)
class NoisePath:
    """Increment record of one noise realization on a grid.

    increments[i, k] is the mode-k Gaussian increment over
    [t_i, t_i + dt); shape (grid.steps, modes).  seed is kept for
    provenance and is None for records not produced by sample_noise
    (loaded or shifted ones keep the originating seed when known).
    """

    grid: TimeGrid
    increments: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.ndim != 2 or inc.shape[0] != self.grid.steps:
            raise InputError(
                f"increment record must have shape (steps, modes) = "
                f"({self.grid.steps}, K), got {inc.shape}"
            )
        if not np.all(np.isfinite(inc)):
            raise InputError("increment record contains non-finite values")
        object.__setattr__(self, "increments", inc)

    @property
    def modes(self) -> int:
        return self.increments.shape[1]

    def restrict(self, grid: TimeGrid) -> "NoisePath":
        """The record over a sub-window with the same spacing."""
        off = step_offset(self.grid, grid)
        return NoisePath(grid, self.increments[off : off + grid.steps], self.seed)

    def cumulative(self) -> np.ndarray:
        """Brownian path W(t_i) - W(t_start) at all grid points, shape (steps+1, modes)."""
        out = np.zeros((self.grid.steps + 1, self.modes))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


def sample_noise(grid: TimeGrid, modes: int, seed: int) -> NoisePath:
    """The noise realization of `seed` restricted to `grid`.

    Windows with the same dt whose start times sit on the common t = 0
    anchored lattice see one and the same realization: regeneration is a
    pure function of (seed, absolute step, mode).
    """
    dt = grid.dt
    base = int(round(grid.t_start / dt))
    block = gaussian_block([seed], base, grid.steps, modes, dt)
    return NoisePath(grid, block[0], seed)


def shift_noise(noise: NoisePath, s: float) -> NoisePath:
    """Increment record of the time-shifted realization.

    Step i of the result equals step i + s/dt of the input, i.e. the
    result drives a system that experiences the original noise s time
    units early.  s must be a non-negative multiple of dt small enough
    that the shifted window stays inside the sampled one.
    """
    dt = noise.grid.dt
    m_raw = s / dt
    m = int(round(m_raw))
    if abs(m_raw - m) > 1e-9 * max(1.0, abs(m_raw)):
        raise InputError(f"shift {s} is not a multiple of dt={dt}")
    if m == 0:
        return NoisePath(noise.grid, noise.increments, noise.seed)
    if m < 0:
        raise InputError("backward shift leaves the sampled window")
    if m >= noise.grid.steps:
        raise InputError(
            f"shift {s} swallows the whole window [{noise.grid.t_start}, {noise.grid.t_end}]"
        )
    grid = TimeGrid(noise.grid.t_start, noise.grid.t_end - m * dt, noise.grid.steps - m)
    return NoisePath(grid, noise.increments[m:], noise.seed)


_HEADER_DTYPE = np.dtype(
    [
        ("seed", "<u8"),
        ("t_start", "<f8"),
        ("t_end", "<f8"),
        ("steps", "<u8"),
        ("modes", "<u8"),
    ]
)
_SEED_NONE = np.uint64(_U64_MAX)


def save_noise(noise: NoisePath, path) -> None:
    """Little-endian binary dump: header then row-major float64 increments."""
    header = np.zeros(1, dtype=_HEADER_DTYPE)
    header["seed"] = _SEED_NONE if noise.seed is None else np.uint64(noise.seed)
    header["t_start"] = noise.grid.t_start
    header["t_end"] = noise.grid.t_end
    header["steps"] = noise.grid.steps
    header["modes"] = noise.modes
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(noise.increments, dtype="<f8").tobytes())


def load_noise(path) -> NoisePath:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER_DTYPE.itemsize:
        raise InputError(f"{path}: truncated noise dump")
    header = np.frombuffer(raw[: _HEADER_DTYPE.itemsize], dtype=_HEADER_DTYPE)[0]
    steps = int(header["steps"])
    modes = int(header["modes"])
    body = np.frombuffer(raw[_HEADER_DTYPE.itemsize :], dtype="<f8")
    if body.size != steps * modes:
        raise InputError(
            f"{path}: expected {steps * modes} increments, found {body.size}"
        )
    grid = TimeGrid(float(header["t_start"]), float(header["t_end"]), steps)
    seed = None if header["seed"] == _SEED_NONE else int(header["seed"])
    return NoisePath(grid, body.reshape(steps, modes).copy(), seed)
