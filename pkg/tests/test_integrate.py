import numpy as np
import pytest

from ldpkit import (
    ConfigurationError,
    Control,
    DivergenceError,
    InputError,
    Path,
    TimeGrid,
    em_step_sde,
    from_dt,
    integrate_skeleton,
    load_path,
    sample_noise,
    save_path,
)


def test_path_validation_and_lookup():
    g = from_dt(0.0, 1.0, 0.25)
    states = np.arange(10.0).reshape(5, 2)
    p = Path(g, states)
    assert p.dim == 2
    assert np.allclose(p.at(0.5), [4.0, 5.0])
    with pytest.raises(InputError):
        p.at(0.3)
    with pytest.raises(InputError):
        Path(g, states[:4])


def test_path_restrict():
    g = from_dt(-1.0, 1.0, 0.1)
    p = Path(g, np.linspace(0.0, 1.0, 21)[:, None])
    sub = p.restrict(from_dt(0.0, 0.5, 0.1))
    assert sub.grid.steps == 5
    assert np.allclose(sub.states[:, 0], np.linspace(0.5, 0.75, 6))


def test_em_matches_hand_recursion(ou):
    dt = 0.01
    g = from_dt(0.0, 1.0, dt)
    noise = sample_noise(g, 1, seed=12)
    eps = 0.2
    path = em_step_sde(ou, np.array([1.5]), g, noise, eps)
    x = 1.5
    for i in range(g.steps):
        x = x * (1.0 - dt) + np.sqrt(eps) * noise.increments[i, 0]
        assert path.states[i + 1, 0] == pytest.approx(x, abs=1e-13)


def test_em_zero_noise_is_euler(ou):
    dt = 1e-3
    g = from_dt(0.0, 2.0, dt)
    noise = sample_noise(g, 1, seed=0)
    path = em_step_sde(ou, np.array([1.0]), g, noise, eps=0.0)
    assert path.states[-1, 0] == pytest.approx((1.0 - dt) ** g.steps)


def test_em_input_validation(ou, lin_a2):
    g = from_dt(0.0, 1.0, 0.1)
    noise = sample_noise(g, 1, seed=0)
    with pytest.raises(InputError):
        em_step_sde(ou, np.array([0.0]), g, noise, eps=-0.1)
    with pytest.raises(InputError):
        em_step_sde(lin_a2, np.zeros(2), g, noise, 0.1)  # needs 2 modes
    off_spacing = sample_noise(from_dt(0.0, 1.0, 0.05), 1, seed=0)
    with pytest.raises(InputError):
        em_step_sde(ou, np.array([0.0]), g, off_spacing, 0.1)


def test_em_uses_noise_by_absolute_step(ou):
    # integrating on a sub-window of a longer record or a fresh record
    # over the same window gives identical trajectories
    dt = 0.01
    long_noise = sample_noise(from_dt(-2.0, 1.0, dt), 1, seed=9)
    window = from_dt(-0.5, 0.5, dt)
    a = em_step_sde(ou, np.array([1.0]), window, long_noise, 0.3)
    b = em_step_sde(ou, np.array([1.0]), window, sample_noise(window, 1, seed=9), 0.3)
    assert np.array_equal(a.states, b.states)


def test_skeleton_second_order(ou):
    # Heun on dx = -x dt has local order 3, global order 2
    errs = []
    for dt in (0.02, 0.01, 0.005):
        g = from_dt(0.0, 1.0, dt)
        p = integrate_skeleton(ou, np.array([1.0]), g)
        errs.append(abs(p.states[-1, 0] - np.exp(-1.0)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_skeleton_with_control_tracks_target(ou):
    # v(t) = 2 e^t makes u(t) = e^t an exact controlled trajectory
    dt = 1e-3
    g = from_dt(0.0, 1.0, dt)
    v = 2.0 * np.exp(g.midpoints())[:, None]
    p = integrate_skeleton(ou, np.array([1.0]), g, control=v)
    assert np.max(np.abs(p.states[:, 0] - np.exp(g.times()))) < 5e-6


def test_skeleton_control_objects_and_zero_extension(ou):
    dt = 0.01
    g = from_dt(0.0, 2.0, dt)
    cg = from_dt(0.5, 1.0, dt)
    coeffs = np.ones((cg.steps, 1))
    ctrl = Control(cg, coeffs)
    p = integrate_skeleton(ou, np.array([0.0]), g, control=ctrl)
    # zero control before t = 0.5 keeps the trajectory at the rest state
    assert np.allclose(p.states[: g.index_of(0.5) + 1], 0.0)
    assert p.states[-1, 0] != 0.0
    # raw tables must match the grid exactly
    with pytest.raises(InputError):
        integrate_skeleton(ou, np.array([0.0]), g, control=np.ones((7, 1)))
    bad_spacing = Control(from_dt(0.0, 1.0, 0.02), np.ones((50, 1)))
    with pytest.raises(InputError):
        integrate_skeleton(ou, np.array([0.0]), g, control=bad_spacing)


def test_stability_ceiling_enforced(burgers):
    g = from_dt(0.0, 0.01, 1e-3)  # far above h^2/2
    with pytest.raises(ConfigurationError):
        integrate_skeleton(burgers, np.zeros(64), g)


def test_divergence_reported(burgers):
    g = TimeGrid(0.0, 0.01, 200)  # dt = 5e-5 < h^2/2
    huge = 1e7 * np.ones(64)
    noise = sample_noise(g, 16, seed=0)
    with pytest.raises(DivergenceError) as exc:
        em_step_sde(burgers, huge, g, noise, eps=0.0)
    assert exc.value.step is not None
    assert exc.value.time is not None


def test_save_load_roundtrip(tmp_path, lin_a2):
    g = from_dt(0.0, 0.5, 0.01)
    noise = sample_noise(g, 2, seed=4)
    p = em_step_sde(lin_a2, np.array([0.3, -0.2]), g, noise, 0.1)
    f = tmp_path / "path.csv"
    save_path(p, f)
    back = load_path(f)
    assert back.grid.steps == g.steps
    assert back.grid.t_start == pytest.approx(g.t_start)
    assert np.array_equal(back.states, p.states)


def test_load_rejects_non_uniform_times(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("time,x1\n0.0,1.0\n0.1,1.0\n0.3,1.0\n")
    with pytest.raises(InputError):
        load_path(f)
