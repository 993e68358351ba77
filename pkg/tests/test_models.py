import numpy as np
import pytest

from ldpkit import (
    InputError,
    check_hypothesis,
    h_inner,
    h_norm_sq,
    make_model,
    model_names,
)
from ldpkit.models import apply_diffusion, drift


def test_catalogue_names():
    assert model_names() == [
        "ou",
        "periodic1d",
        "linear2d-a1",
        "linear2d-a2",
        "hopf-radial",
        "burgers1d",
    ]


def test_unknown_name_and_params_rejected():
    with pytest.raises(InputError):
        make_model("nope")
    with pytest.raises(InputError):
        make_model("ou", {"b": 2.0})
    with pytest.raises(InputError):
        make_model("periodic1d", {"a": 1.0})  # takes no parameters
    with pytest.raises(InputError):
        make_model("ou", {"a": -1.0})


def test_parameter_overrides():
    fast = make_model("ou", {"a": 2.5})
    assert fast.relax_rate == 2.5
    assert drift(fast, np.array([1.0]), 0.0) == pytest.approx(-2.5)
    tilted = make_model("linear2d-a2", {"lambda": 0.5, "beta": 1.0})
    assert np.allclose(
        drift(tilted, np.array([1.0, 0.0]), 0.0), [-0.5, 1.0]
    )
    small = make_model("burgers1d", {"grid": 8, "K": 4})
    assert small.dim == 8
    assert small.modes == 4


def test_hypothesis_margins_all_models(all_models):
    for model in all_models:
        report = check_hypothesis(model)
        assert report.passed, f"{model.name}: {report.to_dict()}"
        assert report.pair_margin <= 1e-8
        assert report.lipschitz_margin <= 1e-8
        assert report.bound_margin <= 1e-8
        if model.zero_equilibrium:
            assert report.self_margin is not None
            assert report.self_margin <= 1e-8
        else:
            assert report.self_margin is None


def test_drift_broadcasts(all_models):
    rng = np.random.default_rng(0)
    for model in all_models:
        batch = np.stack([model.sample_state(rng) for _ in range(5)])
        out = drift(model, batch, 0.25)
        assert out.shape == (5, model.dim)
        single = drift(model, batch[2], 0.25)
        assert np.allclose(single, out[2])


def test_drift_shape_validation(ou):
    with pytest.raises(InputError):
        drift(ou, np.zeros(2), 0.0)


def test_trace_q(ou, burgers):
    assert ou.trace_q() == pytest.approx(1.0)
    ks = np.arange(1, 17)
    assert burgers.trace_q() == pytest.approx(np.sum(ks**-4.0))


def test_mode_matrices_h_orthonormal(all_models):
    for model in all_models:
        e = model.mode_matrix
        gram = model.mass * e.T @ e
        assert np.allclose(gram, np.eye(model.modes), atol=1e-12), model.name


def test_vnorm_dominates_hnorm(all_models):
    rng = np.random.default_rng(1)
    for model in all_models:
        for _ in range(20):
            u = model.sample_state(rng)
            assert (
                model.vnorm_sq(u)
                >= model.constants.c1 * h_norm_sq(model, u) - 1e-9
            ), model.name


def test_apply_diffusion_spans_modes(lin_a2, burgers):
    u = np.zeros(2)
    out = apply_diffusion(lin_a2, u, np.array([1.0, -2.0]))
    assert np.allclose(out, [1.0, -2.0])
    with pytest.raises(InputError):
        apply_diffusion(lin_a2, u, np.array([1.0]))
    # mode k enters scaled by weight k^-2
    coeffs = np.zeros(16)
    coeffs[2] = 1.0
    out = apply_diffusion(burgers, np.zeros(64), coeffs)
    expected = burgers.diffusion_factor(np.zeros(64)) * (
        burgers.mode_matrix[:, 2] / 9.0
    )
    assert np.allclose(out, expected)


def test_periodic_forcing_period_one(periodic):
    t = np.linspace(0.0, 1.0, 13)
    assert np.allclose(periodic.forcing(t), periodic.forcing(t + 1.0))
    assert not periodic.autonomous
    assert np.allclose(periodic.forcing(0.25), [0.3])


def test_autonomous_models_have_zero_forcing(all_models):
    for model in all_models:
        if model.autonomous:
            assert np.allclose(model.forcing(1.7), np.zeros(model.dim))


def test_hopf_diffusion_is_linear(hopf):
    r = np.array([1.3])
    assert hopf.diffusion_factor(r) == pytest.approx(1.3)
    assert np.allclose(hopf.grad_diffusion_factor(r), [1.0])
    assert not hopf.zero_equilibrium
    # drift vanishes at the attracting radius sqrt(3/2)
    assert drift(hopf, np.array([np.sqrt(1.5)]), 0.0) == pytest.approx(0.0)


def test_burgers_nonlinearity_is_energy_neutral(burgers):
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = burgers.sample_state(rng)
        f = burgers.nonlinear(u)
        assert abs(h_inner(burgers, f, u)) < 1e-12


def test_burgers_laplacian_matches_vnorm(burgers):
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = burgers.sample_state(rng)
        assert h_inner(burgers, burgers.linear(u), u) == pytest.approx(
            -burgers.vnorm_sq(u), rel=1e-12
        )


def test_burgers_diffusion_bounds(burgers):
    rng = np.random.default_rng(5)
    d0 = burgers.constants.d0
    for _ in range(20):
        u = burgers.sample_state(rng)
        b = burgers.diffusion_factor(u)
        assert 0.0 < b <= d0
        # analytic gradient vs finite differences
        g = burgers.grad_diffusion_factor(u)
        eps = 1e-7
        for j in (0, 17, 63):
            up = u.copy()
            up[j] += eps
            dn = u.copy()
            dn[j] -= eps
            fd = (burgers.diffusion_factor(up) - burgers.diffusion_factor(dn)) / (
                2 * eps
            )
            assert g[j] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_drift_jacobian_transpose(all_models):
    # <J y, z> = <y, J^T z> for random directions, FD on the left
    rng = np.random.default_rng(6)
    for model in all_models:
        u = model.sample_state(rng)
        y = rng.standard_normal(model.dim)
        z = rng.standard_normal(model.dim)
        eps = 1e-7
        jy = (drift(model, u + eps * y, 0.3) - drift(model, u - eps * y, 0.3)) / (
            2 * eps
        )
        lhs = float(np.dot(jy, z))
        rhs = float(np.dot(y, model.drift_jacT(u, 0.3, z)))
        assert lhs == pytest.approx(rhs, rel=1e-5, abs=1e-7), model.name


def test_check_hypothesis_is_deterministic(ou):
    a = check_hypothesis(ou, n_samples=50, seed=3)
    b = check_hypothesis(ou, n_samples=50, seed=3)
    assert a == b
