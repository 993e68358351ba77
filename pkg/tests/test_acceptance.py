"""Acceptance gate: eleven end-to-end checks, one verdict line each.

Every check prints `[criterion NN] PASS/FAIL <measured numbers>` so the
suite's output doubles as a run report (use `pytest -v -s` to see the
lines as they appear).  All randomness is frozen: the Monte Carlo
criteria use fixed base seeds, so a pass here is reproducible bit for
bit on any machine with the same dependency versions.
"""

import math

import numpy as np
import pytest

from ldpkit import (
    Event,
    MCEstimate,
    Path,
    action,
    em_step_sde,
    estimate_event,
    from_dt,
    h_norm_sq,
    integrate_skeleton,
    ldp_slope,
    make_model,
    minimize_action,
    pullback_skeleton,
    pullback_stationary,
    quasipotential,
    sample_noise,
    sample_stationary,
    stationarity_check,
    value_and_gradient,
)
from ldpkit.models import h_inner

MC_SEED = 2026
LADDER_SEED = 10


def verdict(num, ok, detail):
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def lin_models():
    return make_model("linear2d-a1"), make_model("linear2d-a2")


@pytest.fixture(scope="module")
def qp_pair(lin_models):
    a1, a2 = lin_models
    return (
        quasipotential(a1, [1.0, 0.0]),
        quasipotential(a2, [1.0, 0.0]),
    )


@pytest.fixture(scope="module")
def burgers_ladder():
    m = make_model("burgers1d")
    view = from_dt(-round(0.2 / m.default_dt) * m.default_dt, 0.0, m.default_dt)
    return m, view, pullback_stationary(m, m.default_eps, LADDER_SEED, view)


def test_criterion_01_ou_stationary_variance():
    # dx = -x dt + sqrt(eps) dB has stationary variance eps/2; the sampler
    # must land within 10% of it at eps = 0.1 with 10^4 samples
    ou = make_model("ou")
    eps = 0.1
    s = sample_stationary(ou, eps, 10_000, seed=MC_SEED, dt=1e-3)
    ratio = float(s[:, 0].var() / (eps / 2.0))
    verdict(1, 0.9 <= ratio <= 1.1,
            f"ou sample variance / (eps/2a) = {ratio:.4f}, required in [0.9, 1.1]")


def test_criterion_02_rotation_invisible_in_variances(lin_models):
    # the rotational part of the planar drift leaves the stationary law
    # untouched: both variants show per-coordinate variance eps/(2 lambda)
    eps = 0.1
    target = eps / 0.6
    ratios = []
    for m in lin_models:
        s = sample_stationary(m, eps, 10_000, seed=MC_SEED, dt=2e-3)
        ratios.extend((s.var(axis=0) / target).tolist())
    ok = all(abs(r - 1.0) <= 0.07 for r in ratios)
    verdict(2, ok,
            "per-coordinate variance ratios "
            + ", ".join(f"{r:.4f}" for r in ratios)
            + " (both planar variants), required within 7% of eps/(2 lambda)")


def test_criterion_03_transition_cost_is_variant_independent(qp_pair):
    # the cheapest cost to reach ||x|| = 1 is lambda ||x||^2 = 0.3 for
    # both planar variants, although their minimizing paths differ
    v1, v2 = qp_pair[0].converged_value, qp_pair[1].converged_value
    ok = (
        abs(v1 - 0.3) <= 0.02 * 0.3
        and abs(v2 - 0.3) <= 0.02 * 0.3
        and abs(v1 - v2) <= 0.01 * max(v1, v2)
    )
    verdict(3, ok,
            f"transition costs a1 = {v1:.6f}, a2 = {v2:.6f}; "
            "required 0.3 within 2% each and mutual agreement within 1%")


def test_criterion_04_minimizers_are_not_interchangeable(qp_pair, lin_models):
    # the straight-climb minimizer of the symmetric variant is expensive
    # under the rotating drift: its cost there must exceed 0.3 by >= 20%
    _, a2 = lin_models
    cross = action(a2, qp_pair[0].path).value
    verdict(4, cross >= 1.2 * 0.3,
            f"a1 minimizer costs {cross:.4f} under a2, required >= 0.36")


def test_criterion_05_decay_law_oracle_and_monte_carlo(lin_models):
    # exact stationary law: P(||X|| >= 1) = exp(-0.3/eps), so
    # eps log P = -0.3 at every eps; the naive-sampling estimate must
    # extrapolate to the same constant
    exact = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        p = math.exp(-0.3 / eps)
        exact.append(MCEstimate(eps, "norm_ge(1)", 10**6, 1, p, 0.9 * p,
                                1.1 * p, eps * math.log(p), False))
    oracle_dev = max(abs(e.log_scaled + 0.3) for e in exact)
    oracle_fit = ldp_slope(exact, reference=0.3)
    a1, _ = lin_models
    ests = estimate_event(a1, Event.norm_ge(1.0), eps_list=[0.4, 0.2, 0.1],
                          n_samples=10_000, seed=MC_SEED, dt=5e-3)
    fit = ldp_slope(ests, reference=0.3)
    mc_rel = fit.distance / 0.3
    ok = oracle_dev < 1e-10 and oracle_fit.distance < 1e-10 and mc_rel <= 0.15
    verdict(5, ok,
            f"oracle |eps log P + 0.3| <= {oracle_dev:.2e} (<1e-10), "
            f"oracle intercept off by {oracle_fit.distance:.2e}, "
            f"MC intercept {fit.intercept:.4f} off by {mc_rel:.1%} (<=15%)")


def test_criterion_06_action_gradient_vs_finite_differences():
    # exact discrete gradient against central differences on random
    # smooth paths, including the state-dependent-diffusion model
    rng = np.random.default_rng(MC_SEED)
    worst = 0.0
    for name, offset, scale in (
        ("ou", 0.0, 0.4),
        ("linear2d-a2", 0.0, 0.4),
        ("hopf-radial", 1.5, 0.25),
    ):
        model = make_model(name)
        grid = from_dt(0.0, 0.2, 0.01)
        t = np.linspace(0.0, np.pi, grid.steps + 1)
        for _ in range(100):
            states = np.full((grid.steps + 1, model.dim), offset)
            for j in range(1, 4):
                states += np.sin(j * t)[:, None] * (
                    rng.standard_normal(model.dim) * scale / j
                )
            path = Path(grid, states)
            _, grad = value_and_gradient(model, path,
                                         fixed_endpoints=(False, False))
            fd = np.empty_like(grad)
            for i in range(grid.steps + 1):
                for d in range(model.dim):
                    h = 1e-6 * (1.0 + abs(states[i, d]))
                    up = states.copy()
                    up[i, d] += h
                    dn = states.copy()
                    dn[i, d] -= h
                    fd[i, d] = (
                        action(model, Path(grid, up)).value
                        - action(model, Path(grid, dn)).value
                    ) / (2 * h)
            err = np.max(np.abs(grad - fd)) / max(np.max(np.abs(fd)), 1e-12)
            worst = max(worst, float(err))
    verdict(6, worst < 1e-5,
            f"max gradient error over 300 random paths = {worst:.2e} (<1e-5)")


def test_criterion_07_pullback_ladders_contract(burgers_ladder):
    # every model's ladder must contract at its default noise strength,
    # and the scalar linear model must reproduce its dissipation rate
    rows = []
    ok = True
    for name in ("ou", "periodic1d", "linear2d-a1", "linear2d-a2",
                 "hopf-radial"):
        m = make_model(name)
        view = from_dt(-1.0, 0.0, m.default_dt)
        _, diag = pullback_stationary(m, m.default_eps, LADDER_SEED, view)
        decreasing = all(b < a for a, b in zip(diag.gaps, diag.gaps[1:]))
        ok = ok and diag.converged and decreasing and diag.fitted_rate < 0
        rows.append(f"{name} rate {diag.fitted_rate:+.2f}")
    _, _, (path, bdiag) = burgers_ladder
    bdec = all(b < a for a, b in zip(bdiag.gaps, bdiag.gaps[1:]))
    ok = ok and bdiag.converged and bdec and bdiag.fitted_rate < 0
    rows.append(f"burgers1d rate {bdiag.fitted_rate:+.2f}")
    # the 2-gap default ladder scatters too much for a rate comparison,
    # so the scalar check runs a 5-rung ladder on one frozen realization
    ou = make_model("ou")
    _, d5 = pullback_stationary(ou, 0.1, LADDER_SEED, from_dt(-0.5, 0.0, 1e-3),
                                horizons=[5.0, 10.0, 15.0, 20.0, 25.0])
    rate_ok = abs(d5.fitted_rate + 1.0) <= 0.15
    ok = ok and rate_ok
    verdict(7, ok,
            "all six ladders contract (" + "; ".join(rows) + "); "
            f"ou 5-rung fitted rate {d5.fitted_rate:.4f} within 15% of -1")


def test_criterion_08_closed_form_stationary_radius():
    # the radial model solves in closed form through 1/r^2; the stepper
    # must match the quadrature of that formula realization by realization
    hopf = make_model("hopf-radial")
    eps, horizon, dt = 0.1, 7.0, 2.5e-4
    sigma = math.sqrt(eps)
    kappa = 3.0 - sigma**2
    grid = from_dt(-horizon, 0.0, dt)
    times = grid.times()
    worst = 0.0
    for seed in range(10):
        noise = sample_noise(grid, 1, seed)
        r_em = em_step_sde(hopf, hopf.pullback_init, grid, noise,
                           eps).states[-1, 0]
        w = noise.cumulative()[:, 0]
        b = w - w[-1]  # Brownian motion pinned to 0 at time 0
        integral = np.trapezoid(np.exp(kappa * times + 2.0 * sigma * b), dx=dt)
        y0 = math.exp(-kappa * horizon + 2.0 * sigma * b[0]) + 2.0 * integral
        r_exact = y0**-0.5
        worst = max(worst, abs(r_em - r_exact) / r_exact)
    verdict(8, worst < 0.01,
            f"max |r_em - r_exact|/r_exact over 10 realizations = {worst:.2e} (<1%)")


def test_criterion_09_periodic_forcing_periodic_limit():
    # with zero control the pullback limit of the forced model is a
    # 1-periodic orbit; under noise the law is 1-periodic as well
    m = make_model("periodic1d")
    view = from_dt(0.0, 2.0, 1e-3)
    path, diag = pullback_skeleton(m, None, view, horizons=[2.5, 5.0, 7.5])
    half = view.steps // 2
    period_dev = float(np.max(np.abs(path.states[half:] - path.states[:-half])))
    gap = stationarity_check(m, m.default_eps, LADDER_SEED, s=1.0)
    ok = diag.converged and period_dev < 1e-3 and gap < 1e-2
    verdict(9, ok,
            f"orbit periodicity defect {period_dev:.2e} (<1e-3), "
            f"one-period stationarity gap {gap:.2e} (<1e-2)")


def test_criterion_10_discretized_pde_structure(burgers_ladder):
    m, view, (path, diag) = burgers_ladder
    # zero noise, zero control: the pullback limit is the rest state
    flat, _ = pullback_stationary(m, 0.0, LADDER_SEED, view)
    rest_dev = float(np.max(np.abs(flat.states)))
    # the advection term moves no energy
    rng = np.random.default_rng(MC_SEED)
    skew = max(
        abs(float(h_inner(m, m.nonlinear(u), u)))
        for u in (m.sample_state(rng) for _ in range(20))
    )
    # uncontrolled dynamics dissipate energy monotonically
    g = from_dt(0.0, round(800 * m.default_dt, 12), m.default_dt)
    decay = integrate_skeleton(m, m.sample_state(rng), g)
    energy = h_norm_sq(m, decay.states)
    monotone = bool(np.all(np.diff(energy) <= 1e-12))
    ok = rest_dev < 1e-12 and skew < 1e-10 and monotone and diag.converged
    verdict(10, ok,
            f"rest-state deviation {rest_dev:.1e}, advection energy leak "
            f"{skew:.1e} (<1e-10), energy monotone: {monotone}, "
            f"noisy ladder converged: {diag.converged}")


def test_criterion_11_continuation_matches_single_horizon(qp_pair, lin_models):
    # the horizon continuation must agree with a cold-started single
    # optimization at its largest scheduled horizon
    rels = []
    ou = make_model("ou")
    for model, target, res in (
        (ou, [1.0], quasipotential(ou, [1.0])),
        (lin_models[1], [1.0, 0.0], qp_pair[1]),
    ):
        T = res.horizons[-1]
        _, single = minimize_action(model, target, T, max(2, round(T * 50.0)))
        rels.append(abs(res.converged_value - single) / single)
    ok = all(r <= 0.01 for r in rels)
    verdict(11, ok,
            "continuation vs single-horizon relative gaps "
            + ", ".join(f"{r:.2e}" for r in rels) + " (<=1%)")
