"""Exception taxonomy shared by the toolkit.

Validation problems (bad arguments, bad configuration) and numerical
failures (divergence, non-convergence, stalled optimization) are kept on
separate branches so callers, in particular the command line layer, can
map them to distinct exit codes.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class InputError(ToolkitError):
    """Malformed arguments: dimension mismatches, bad shapes, bad values."""


class ConfigurationError(ToolkitError):
    """A request that is well-formed but not runnable as configured."""


class DivergenceError(ToolkitError):
    """State norm exploded during integration."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class NonConvergenceError(ToolkitError):
    """Pullback horizon ladder failed to contract."""

    def __init__(self, message, gaps=None, seed=None):
        super().__init__(message)
        self.gaps = list(gaps) if gaps is not None else None
        self.seed = seed


class NonInvertibleDiffusionError(ToolkitError):
    """Diffusion factor too close to zero to recover a control."""


class OptimizationStalledError(ToolkitError):
    """Line search failed; carries the best iterate seen so far."""

    def __init__(self, message, path=None, value=None):
        super().__init__(message)
        self.path = path
        self.value = value


class InsufficientDataError(ToolkitError):
    """Not enough usable points for a requested fit."""
