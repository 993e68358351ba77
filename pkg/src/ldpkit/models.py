"""Model catalogue: dissipative drift + factored noise on a state space H.

Every model describes the Ito equation

    dX = (A X + F(X) + g(t)) dt + sqrt(eps) * B(X) dW,

where A is linear, F is the nonlinearity, g a deterministic forcing, and
the noise W is a sum over K modes e_k with per-mode weights c_k.  All
shipped diffusions act as a scalar factor times the identity on the mode
span, B(u) h = b(u) * sum_k h_k c_k e_k, which is what makes control
recovery (action module) a per-mode division.

The state space carries a weighted inner product <u, v>_H = mass * u.v
(mass = grid spacing for the discretized PDE, 1 otherwise) and a
dissipation norm ||.||_V.  The constants attached to each model are the
ones the contraction and energy estimates are phrased in:

    <A(u-v) + F(u) - F(v), u-v>_H <= -lam ||u-v||_V^2
                                     + c0 ||u-v||_H^2 ||u||_V^2,
    <A u + F(u), u>_H <= -lam ||u||_V^2        (models with equilibrium 0),
    |B(u) - B(v)|  <= beta0 ||u-v||_H,   |B(u)| <= d0   (operator norms).

check_hypothesis samples these inequalities on each model's declared
state domain and reports the worst margins.

All model callables broadcast over leading batch axes; the state always
occupies the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .grids import TimeGrid  # noqa: F401  (re-exported at package root alongside models)


@dataclass(frozen=True)
class HypothesisConstants:
    """Constants of the dissipativity and noise-boundedness inequalities."""

    lam: float      # dissipation rate in front of ||.||_V^2
    c0: float       # interaction coefficient of the pair inequality
    c1: float       # comparison constant: ||u||_V^2 >= c1 ||u||_H^2
    beta0: float    # Lipschitz constant of u -> B(u)
    d0: float       # uniform operator bound on B


@dataclass(frozen=True)
class ModelSpec:
    """One concrete model instance; built through make_model."""

    name: str
    dim: int
    linear: Callable            # u -> A u
    nonlinear: Callable         # u -> F(u)
    forcing: Callable           # t -> g(t), shape t.shape + (dim,)
    diffusion_factor: Callable  # u -> b(u), shape u.shape[:-1]
    grad_diffusion_factor: Callable  # u -> grad b(u), shape u.shape
    drift_jacT: Callable        # (u, t, y) -> (d drift/d u)^T y
    mode_matrix: np.ndarray     # (dim, K), columns H-orthonormal
    mode_weights: np.ndarray    # (K,) positive weights c_k
    constants: HypothesisConstants
    vnorm_sq: Callable          # u -> ||u||_V^2, shape u.shape[:-1]
    sample_state: Callable      # rng -> one state in the model's test domain
    mass: float                 # H inner product weight
    autonomous: bool            # g identically zero
    zero_equilibrium: bool      # drift vanishes at 0 and 0 is the rest state
    relax_rate: float           # contraction scale used for horizon schedules
    eps0: float                 # admissible noise strengths are eps <= eps0
    default_eps: float
    default_dt: float
    pullback_init: np.ndarray   # start state for pullback integrations
    max_stable_dt: Optional[float] = None  # explicit-step stability ceiling, None if unconstrained

    @property
    def modes(self) -> int:
        return self.mode_matrix.shape[1]

    def trace_q(self) -> float:
        """Trace of the mode covariance, sum of c_k^2."""
        return float(np.sum(self.mode_weights**2))


# ---------------------------------------------------------------------------
# norms and shared operations

def h_norm_sq(model: ModelSpec, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return model.mass * np.sum(u * u, axis=-1)


def h_norm(model: ModelSpec, u: np.ndarray) -> np.ndarray:
    return np.sqrt(h_norm_sq(model, u))


def h_inner(model: ModelSpec, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return model.mass * np.sum(np.asarray(u) * np.asarray(v), axis=-1)


def _check_state(model: ModelSpec, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1:] != (model.dim,):
        raise InputError(
            f"state for '{model.name}' must have last axis {model.dim}, got shape {u.shape}"
        )
    return u


def drift(model: ModelSpec, u: np.ndarray, t) -> np.ndarray:
    """Full drift A u + F(u) + g(t)."""
    u = _check_state(model, u)
    return model.linear(u) + model.nonlinear(u) + model.forcing(t)


def apply_diffusion(model: ModelSpec, u: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """B(u) applied to the mode-coefficient vector h: b(u) * sum_k h_k c_k e_k."""
    u = _check_state(model, u)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-1:] != (model.modes,):
        raise InputError(
            f"'{model.name}' carries {model.modes} noise modes, got coefficient shape {coeffs.shape}"
        )
    drive = (coeffs * model.mode_weights) @ model.mode_matrix.T
    return model.diffusion_factor(u)[..., None] * drive


# ---------------------------------------------------------------------------
# model factories

def _zero_forcing(dim):
    def forcing(t):
        return np.zeros(np.shape(t) + (dim,))

    return forcing


def _const_factor(value):
    def factor(u):
        return np.full(np.asarray(u).shape[:-1], value)

    def grad(u):
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    return factor, grad


def _box_sampler(lo, hi, dim):
    def sample(rng):
        return rng.uniform(lo, hi, size=dim)

    return sample


def _make_ou(a: float = 1.0) -> ModelSpec:
    """Scalar linear model dx = -a x dt + sqrt(eps) dB."""
    a = float(a)
    if a <= 0:
        raise InputError(f"ou needs a > 0, got {a}")
    factor, grad_factor = _const_factor(1.0)

    def vnorm_sq(u):
        return np.sum(np.asarray(u) ** 2, axis=-1)

    return ModelSpec(
        name="ou",
        dim=1,
        linear=lambda u: -a * u,
        nonlinear=lambda u: np.zeros_like(np.asarray(u, dtype=np.float64)),
        forcing=_zero_forcing(1),
        diffusion_factor=factor,
        grad_diffusion_factor=grad_factor,
        drift_jacT=lambda u, t, y: -a * y,
        mode_matrix=np.eye(1),
        mode_weights=np.ones(1),
        constants=HypothesisConstants(lam=a, c0=0.0, c1=1.0, beta0=0.0, d0=1.0),
        vnorm_sq=vnorm_sq,
        sample_state=_box_sampler(-2.0, 2.0, 1),
        mass=1.0,
        autonomous=True,
        zero_equilibrium=True,
        relax_rate=a,
        eps0=0.5,
        default_eps=0.1,
        default_dt=1e-3,
        pullback_init=np.zeros(1),
    )


def _make_periodic1d() -> ModelSpec:
    """Scalar forced model dx = -5x dt + (sin x + 0.3 sin 2 pi t) dt + sqrt(eps) dB.

    The forcing is 1-periodic, so the pullback limit is a periodic orbit
    (deterministically) or a small fluctuation around it (under noise).
    """
    factor, grad_factor = _const_factor(1.0)

    def forcing(t):
        return 0.3 * np.sin(2.0 * np.pi * np.asarray(t, dtype=np.float64))[..., None]

    def vnorm_sq(u):
        return np.sum(np.asarray(u) ** 2, axis=-1)

    return ModelSpec(
        name="periodic1d",
        dim=1,
        linear=lambda u: -5.0 * u,
        nonlinear=np.sin,
        forcing=forcing,
        diffusion_factor=factor,
        grad_diffusion_factor=grad_factor,
        drift_jacT=lambda u, t, y: (-5.0 + np.cos(u)) * y,
        mode_matrix=np.eye(1),
        mode_weights=np.ones(1),
        # sin is 1-Lipschitz, so the pair between -5 and sin leaves rate 4.
        constants=HypothesisConstants(lam=4.0, c0=0.0, c1=1.0, beta0=0.0, d0=1.0),
        vnorm_sq=vnorm_sq,
        sample_state=_box_sampler(-2.0, 2.0, 1),
        mass=1.0,
        autonomous=False,
        zero_equilibrium=True,
        relax_rate=4.0,
        eps0=0.5,
        default_eps=0.01,
        default_dt=1e-3,
        pullback_init=np.zeros(1),
    )


def _make_linear2d(variant: str, lam: float = 0.3, beta: float = 2.0) -> ModelSpec:
    """Planar linear models sharing one invariant measure.

    Variant a1 is the symmetric contraction -lam I; variant a2 adds the
    rotation beta J.  Both have isotropic Gaussian statistics with
    per-coordinate variance eps/(2 lam), but different path costs.
    """
    lam = float(lam)
    beta = float(beta)
    if lam <= 0:
        raise InputError(f"linear2d needs lambda > 0, got {lam}")
    if variant == "a1":
        mat = -lam * np.eye(2)
    elif variant == "a2":
        mat = np.array([[-lam, -beta], [beta, -lam]])
    else:  # pragma: no cover - registry controls the variant string
        raise InputError(f"unknown linear2d variant {variant!r}")
    factor, grad_factor = _const_factor(1.0)

    def vnorm_sq(u):
        return np.sum(np.asarray(u) ** 2, axis=-1)

    return ModelSpec(
        name=f"linear2d-{variant}",
        dim=2,
        linear=lambda u: u @ mat.T,
        nonlinear=lambda u: np.zeros_like(np.asarray(u, dtype=np.float64)),
        forcing=_zero_forcing(2),
        diffusion_factor=factor,
        grad_diffusion_factor=grad_factor,
        drift_jacT=lambda u, t, y: y @ mat,
        mode_matrix=np.eye(2),
        mode_weights=np.ones(2),
        constants=HypothesisConstants(lam=lam, c0=0.0, c1=1.0, beta0=0.0, d0=1.0),
        vnorm_sq=vnorm_sq,
        sample_state=_box_sampler(-2.0, 2.0, 2),
        mass=1.0,
        autonomous=True,
        zero_equilibrium=True,
        relax_rate=lam,
        eps0=0.5,
        default_eps=0.1,
        default_dt=1e-3,
        pullback_init=np.zeros(2),
    )


def _make_hopf_radial(c: float = 1.0) -> ModelSpec:
    """Radial normal form dr = (3/2 - r^2) r dt + sqrt(eps) c r dB.

    The drift has the unstable rest point 0 and the attracting radius
    sqrt(3/2); the noise is linear-multiplicative.  This model exists for
    its closed-form stationary solution and sits outside the
    zero-equilibrium inequality on purpose: its non-trivial stationary
    radius is the object of interest.  Pair dissipativity holds on the
    working annulus [1.4, 2.0] used for sampling.
    """
    c = float(c)
    if c <= 0:
        raise InputError(f"hopf-radial needs c > 0, got {c}")

    def factor(u):
        return np.asarray(u, dtype=np.float64)[..., 0]

    def grad_factor(u):
        return np.ones_like(np.asarray(u, dtype=np.float64))

    def vnorm_sq(u):
        return np.sum(np.asarray(u) ** 2, axis=-1)

    return ModelSpec(
        name="hopf-radial",
        dim=1,
        linear=lambda u: np.zeros_like(np.asarray(u, dtype=np.float64)),
        nonlinear=lambda u: (1.5 - u * u) * u,
        forcing=_zero_forcing(1),
        diffusion_factor=factor,
        grad_diffusion_factor=grad_factor,
        drift_jacT=lambda u, t, y: (1.5 - 3.0 * u * u) * y,
        mode_matrix=np.eye(1),
        mode_weights=np.array([c]),
        constants=HypothesisConstants(lam=0.4, c0=0.0, c1=1.0, beta0=c, d0=2.0 * c),
        vnorm_sq=vnorm_sq,
        sample_state=_box_sampler(1.4, 2.0, 1),
        mass=1.0,
        autonomous=True,
        zero_equilibrium=False,
        # linearization rate at the attracting radius: |3/2 - 3 r*^2| = 3
        relax_rate=3.0,
        eps0=0.5,
        default_eps=0.1,
        default_dt=1e-3,
        pullback_init=np.ones(1),
    )


def _make_burgers1d(grid: int = 64, K: int = 16, d0: float = 1.0,
                    diffusion: str = "multiplicative") -> ModelSpec:
    """Viscous conservation-law model on (0, 1) with Dirichlet ends.

        du = u_xx dt + (1/2)(u^2)_x dt + sqrt(eps) B(u) dW

    discretized at `grid` interior points.  The advection term uses the
    energy-conserving split (1/3)(u D u + D u^2) with the centered
    difference D, which keeps <F(u), u>_H = 0 exactly at the discrete
    level.  Noise lives on the first K sine modes with weights k^{-2};
    the shipped multiplicative factor b(u) = d0 / (1 + ||u||_H^2) is
    bounded and Lipschitz, the "additive" variant is b = 1.
    """
    n = int(grid)
    kmax = int(K)
    d0 = float(d0)
    if n < 4:
        raise InputError(f"burgers1d needs at least 4 interior points, got {n}")
    if kmax < 1 or kmax > n:
        raise InputError(f"burgers1d mode count must lie in [1, {n}], got {kmax}")
    if d0 <= 0:
        raise InputError(f"burgers1d needs d0 > 0, got {d0}")
    if diffusion not in ("multiplicative", "additive"):
        raise InputError(
            f"burgers1d diffusion must be 'multiplicative' or 'additive', got {diffusion!r}"
        )
    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)

    def lap(u):
        out = -2.0 * np.asarray(u, dtype=np.float64)
        out[..., :-1] += u[..., 1:]
        out[..., 1:] += u[..., :-1]
        return out / (h * h)

    def dx(u):
        u = np.asarray(u, dtype=np.float64)
        out = np.zeros_like(u)
        out[..., :-1] += u[..., 1:]
        out[..., 1:] -= u[..., :-1]
        return out / (2.0 * h)

    def nonlinear(u):
        u = np.asarray(u, dtype=np.float64)
        return (u * dx(u) + dx(u * u)) / 3.0

    def jacT(u, t, y):
        u = np.asarray(u, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return lap(y) + (dx(u) * y - dx(u * y) - 2.0 * u * dx(y)) / 3.0

    if diffusion == "multiplicative":
        def factor(u):
            u = np.asarray(u, dtype=np.float64)
            return d0 / (1.0 + h * np.sum(u * u, axis=-1))

        def grad_factor(u):
            u = np.asarray(u, dtype=np.float64)
            b = factor(u)
            return (-2.0 * h / d0) * b[..., None] ** 2 * u

        beta0 = d0
    else:
        factor, grad_factor = _const_factor(1.0)
        beta0 = 0.0

    def vnorm_sq(u):
        u = np.asarray(u, dtype=np.float64)
        inner = np.sum(np.diff(u, axis=-1) ** 2, axis=-1)
        return (inner + u[..., 0] ** 2 + u[..., -1] ** 2) / h

    ks = np.arange(1, kmax + 1)
    # exactly H-orthonormal on the interior grid: h * sum_j e_k e_l = delta_kl
    mode_matrix = np.sqrt(2.0) * np.sin(np.pi * np.outer(x, ks))
    mode_weights = ks.astype(np.float64) ** -2.0
    c1 = (4.0 / (h * h)) * np.sin(np.pi * h / 2.0) ** 2

    def sample(rng):
        return rng.uniform(-1.0, 1.0, size=n)

    return ModelSpec(
        name="burgers1d",
        dim=n,
        linear=lap,
        nonlinear=nonlinear,
        forcing=_zero_forcing(n),
        diffusion_factor=factor,
        grad_diffusion_factor=grad_factor,
        drift_jacT=jacT,
        mode_matrix=mode_matrix,
        mode_weights=mode_weights,
        # lam = 1/2 leaves room for the advection cross terms; c0 = 1/9 is
        # the discrete-safe interaction constant (the continuum integration
        # by parts that would give 1/16 is not exact for the split form).
        constants=HypothesisConstants(lam=0.5, c0=1.0 / 9.0, c1=c1, beta0=beta0, d0=d0),
        vnorm_sq=vnorm_sq,
        sample_state=sample,
        mass=h,
        autonomous=True,
        zero_equilibrium=True,
        relax_rate=c1,
        eps0=0.1,
        default_eps=0.05,
        default_dt=h * h / 4.0,
        pullback_init=np.zeros(n),
        max_stable_dt=h * h / 2.0,
    )


# ---------------------------------------------------------------------------
# registry

# name -> (factory, config-facing parameter names mapped to factory kwargs)
_REGISTRY = {
    "ou": (_make_ou, {"a": "a"}),
    "periodic1d": (_make_periodic1d, {}),
    "linear2d-a1": (lambda **kw: _make_linear2d("a1", **kw), {"lambda": "lam"}),
    "linear2d-a2": (lambda **kw: _make_linear2d("a2", **kw), {"lambda": "lam", "beta": "beta"}),
    "hopf-radial": (_make_hopf_radial, {"c": "c"}),
    "burgers1d": (
        _make_burgers1d,
        {"grid": "grid", "K": "K", "d0": "d0", "diffusion": "diffusion"},
    ),
}


def model_names() -> list[str]:
    return list(_REGISTRY)


def make_model(name: str, params: Optional[dict] = None) -> ModelSpec:
    """Build a catalogue model, applying config-style parameter overrides."""
    if name not in _REGISTRY:
        raise InputError(
            f"unknown model {name!r}; available: {', '.join(_REGISTRY)}"
        )
    factory, allowed = _REGISTRY[name]
    params = dict(params or {})
    unknown = set(params) - set(allowed)
    if unknown:
        raise InputError(
            f"model {name!r} does not take parameter(s) {sorted(unknown)}; "
            f"allowed: {sorted(allowed) or 'none'}"
        )
    kwargs = {allowed[k]: v for k, v in params.items()}
    return factory(**kwargs)


# ---------------------------------------------------------------------------
# hypothesis check

@dataclass(frozen=True)
class HypothesisReport:
    """Worst sampled margins of the structural inequalities (<= 0 passes)."""

    model: str
    n_samples: int
    tol: float
    pair_margin: float          # two-solution dissipativity inequality
    self_margin: Optional[float]  # zero-equilibrium inequality, None if n/a
    lipschitz_margin: float     # |B(u)-B(v)| - beta0 ||u-v||_H
    bound_margin: float         # |B(u)| - d0
    passed: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n_samples": self.n_samples,
            "tol": self.tol,
            "pair_margin": self.pair_margin,
            "self_margin": self.self_margin,
            "lipschitz_margin": self.lipschitz_margin,
            "bound_margin": self.bound_margin,
            "passed": self.passed,
        }


def check_hypothesis(model: ModelSpec, n_samples: int = 200, seed: int = 0,
                     tol: float = 1e-8) -> HypothesisReport:
    """Sample the structural inequalities on the model's state domain.

    Margins are the left-hand sides moved to one side, so any value above
    tol is a violation.  The zero-equilibrium inequality is only
    meaningful for models whose rest state is 0 and is skipped otherwise.
    """
    if n_samples < 1:
        raise InputError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    cst = model.constants
    c_max = float(np.max(model.mode_weights))
    pair = -np.inf
    self_m = -np.inf if model.zero_equilibrium else None
    lip = -np.inf
    bound = -np.inf
    for _ in range(n_samples):
        u = model.sample_state(rng)
        v = model.sample_state(rng)
        w = u - v
        du = model.linear(u) + model.nonlinear(u)
        dv = model.linear(v) + model.nonlinear(v)
        pair = max(
            pair,
            float(
                h_inner(model, du - dv, w)
                + cst.lam * model.vnorm_sq(w)
                - cst.c0 * h_norm_sq(model, w) * model.vnorm_sq(u)
            ),
        )
        if self_m is not None:
            self_m = max(
                self_m,
                float(h_inner(model, du, u) + cst.lam * model.vnorm_sq(u)),
            )
        bu = float(model.diffusion_factor(u))
        bv = float(model.diffusion_factor(v))
        lip = max(lip, abs(bu - bv) * c_max - cst.beta0 * float(h_norm(model, w)))
        bound = max(bound, abs(bu) * c_max - cst.d0)
    passed = pair <= tol and lip <= tol and bound <= tol
    if self_m is not None:
        passed = passed and self_m <= tol
    return HypothesisReport(
        model=model.name,
        n_samples=n_samples,
        tol=tol,
        pair_margin=pair,
        self_margin=self_m,
        lipschitz_margin=lip,
        bound_margin=bound,
        passed=passed,
    )
