import numpy as np
import pytest

from tamedspde.coefficients import CoefficientSpec, allen_cahn
from tamedspde.fem import dispersion_eigenvalue
from tamedspde.grid import Grid1D, GridFunction, l2_norm, sine_mode, zeros
from tamedspde.noise import NoiseIncrement, QWienerSpec, sample_increment
from tamedspde.schemes import (
    ChainState,
    InitialCondition,
    SchemeConfig,
    initial_state,
    lyapunov_V,
    simulate,
    step,
)

ZERO_DRIFT = CoefficientSpec(drift=(0.0,), diffusion=(0.0,), q=0, variant="drift_only")


def heat_config(n_cells=64, tau=0.05, horizon=1.0):
    return SchemeConfig(
        tau=tau,
        grid=Grid1D(n_cells),
        horizon=horizon,
        scheme="gtem",
        coefficients=ZERO_DRIFT,
        noise=QWienerSpec(3.0, 1e-30, n_cells - 1),
        seed=0,
    )


def zero_increment(grid, tau):
    return NoiseIncrement(
        grid=grid, tau=tau, coeffs=np.zeros(grid.n_interior),
        values=np.zeros(grid.n_interior), stream=("zero",),
    )


def test_config_validation():
    g = Grid1D(16)
    with pytest.raises(ValueError):
        SchemeConfig(tau=0.3, grid=g, horizon=1.0, scheme="gtem",
                     coefficients=ZERO_DRIFT, noise=QWienerSpec(3.0, 1.0, 15))
    with pytest.raises(ValueError):
        SchemeConfig(tau=0.0, grid=g, horizon=1.0, scheme="gtem",
                     coefficients=ZERO_DRIFT, noise=QWienerSpec(3.0, 1.0, 15))
    with pytest.raises(ValueError):
        SchemeConfig(tau=0.1, grid=g, horizon=1.0, scheme="gtem",
                     coefficients=ZERO_DRIFT, noise=QWienerSpec(3.0, 1.0, 31))
    cfg = SchemeConfig(tau=0.125, grid=g, horizon=2.0, scheme="drift_gtem",
                       coefficients=ZERO_DRIFT, noise=QWienerSpec(3.0, 1.0, 15))
    assert cfg.n_steps == 16


def test_heat_decay_matches_resolvent_powers():
    cfg = heat_config()
    x0 = sine_mode(cfg.grid, 1)
    traj = simulate(cfg, x0, path_id=0)
    lam = dispersion_eigenvalue(cfg.grid)
    expected = (1.0 + cfg.tau * lam) ** (-traj.steps) * l2_norm(x0)
    assert np.max(np.abs(np.sqrt(traj.observables["l2_sq"]) - expected)) <= 1e-8


def test_zero_is_fixed_point_on_zero_noise_path():
    cfg = SchemeConfig(tau=0.1, grid=Grid1D(32), horizon=1.0, scheme="gtem",
                       coefficients=allen_cahn(1.0), noise=QWienerSpec(3.0, 1.0, 31))
    state = initial_state(zeros(cfg.grid))
    inc = zero_increment(cfg.grid, cfg.tau)
    for _ in range(10):
        state = step(state, cfg, inc)
        assert np.all(state.state.values == 0.0)  # f(0) = 0, g dampened by zero noise


def test_simulate_deterministic():
    cfg = SchemeConfig(tau=0.05, grid=Grid1D(32), horizon=2.0, scheme="gtem",
                       coefficients=allen_cahn(1.0), noise=QWienerSpec(3.0, 1.0, 31),
                       seed=99)
    x0 = InitialCondition("sine", amplitude=2.0).build(cfg.grid)
    t1 = simulate(cfg, x0, path_id=4)
    t2 = simulate(cfg, x0, path_id=4)
    for name in t1.observables:
        assert np.array_equal(t1.observables[name], t2.observables[name])
    t3 = simulate(cfg, x0, path_id=5)
    assert not np.array_equal(t1.observables["l2_sq"], t3.observables["l2_sq"])


def test_step_depends_only_on_state_and_increment():
    cfg = SchemeConfig(tau=0.05, grid=Grid1D(32), horizon=1.0, scheme="gtem",
                       coefficients=allen_cahn(1.0), noise=QWienerSpec(3.0, 1.0, 31),
                       seed=7)
    x0 = InitialCondition("sine", amplitude=1.0).build(cfg.grid)
    state = initial_state(x0)
    for n in range(3):
        state = step(state, cfg, sample_increment(cfg.noise, cfg.tau, 7, 0, n, cfg.grid))
    # a freshly built state with the same values must step identically
    clone = ChainState(state.step_index, GridFunction(cfg.grid, state.state.values.copy()))
    inc = sample_increment(cfg.noise, cfg.tau, 7, 0, 3, cfg.grid)
    out_a = step(state, cfg, inc)
    out_b = step(clone, cfg, inc)
    assert np.array_equal(out_a.state.values, out_b.state.values)


def test_untamed_blows_up_tamed_does_not():
    grid = Grid1D(32)
    noise = QWienerSpec(3.0, 1.0, 31)
    x0 = InitialCondition("sine", amplitude=5.0).build(grid)
    blew_untamed = 0
    for pid in range(5):
        cfg_em = SchemeConfig(tau=0.5, grid=grid, horizon=50.0, scheme="untamed_em",
                              coefficients=allen_cahn(0.5), noise=noise, seed=3)
        cfg_tamed = SchemeConfig(tau=0.5, grid=grid, horizon=50.0, scheme="gtem",
                                 coefficients=allen_cahn(0.5), noise=noise, seed=3)
        t_em = simulate(cfg_em, x0, pid, record_stride=100)
        t_gt = simulate(cfg_tamed, x0, pid, record_stride=100)
        blew_untamed += t_em.blowup_step is not None
        assert t_gt.blowup_step is None
        assert np.all(np.isfinite(t_gt.observables["l2_sq"]))
    assert blew_untamed >= 3


def test_blowup_flag_is_sticky_and_state_frozen():
    grid = Grid1D(8)
    cfg = SchemeConfig(tau=0.5, grid=grid, horizon=5.0, scheme="untamed_em",
                       coefficients=allen_cahn(0.3), noise=QWienerSpec(3.0, 1e-30, 7))
    state = initial_state(InitialCondition("sine", amplitude=30.0).build(grid))
    inc = zero_increment(grid, cfg.tau)
    while not state.blown_up:
        state = step(state, cfg, inc)
        assert state.step_index <= 50
    frozen = state.state.values.copy()
    first_failure = state.blowup_step
    for _ in range(3):
        state = step(state, cfg, inc)
        assert state.blown_up and state.blowup_step == first_failure
        assert np.array_equal(state.state.values, frozen)
        assert np.all(np.isfinite(frozen))


def test_lyapunov_functional():
    g = Grid1D(256)
    assert lyapunov_V(zeros(g), 0.1) == 0.0
    u = sine_mode(g, 1)
    assert abs(lyapunov_V(u, 0.1) - (1.0 + 0.2 * np.pi**2)) <= 0.02
    rng = np.random.default_rng(8)
    v = GridFunction(g, rng.standard_normal(255))
    c = 3.7
    assert np.isclose(lyapunov_V(c * v, 0.1), c**2 * lyapunov_V(v, 0.1), rtol=1e-12)


def test_single_step_tau_continuity():
    # with the increment fixed, Z_1 -> Z_0 + g(Z_0) dW as tau -> 0, at rate tau
    grid = Grid1D(32)
    noise = QWienerSpec(3.0, 1.0, 31)
    x0 = InitialCondition("sine", amplitude=1.0).build(grid)
    inc_values = sample_increment(noise, 0.01, 5, 0, 0, grid).values
    from tamedspde.coefficients import eval_g

    limit = x0.values + eval_g(allen_cahn(1.0), x0.values) * inc_values
    errs = []
    for tau in (0.02, 0.01, 0.005, 0.0025):
        cfg = SchemeConfig(tau=tau, grid=grid, horizon=tau, scheme="drift_gtem",
                           coefficients=allen_cahn(1.0), noise=noise)
        inc = NoiseIncrement(grid=grid, tau=tau, coeffs=np.zeros(31),
                             values=inc_values, stream=("fixed",))
        out = step(initial_state(x0), cfg, inc)
        errs.append(np.linalg.norm(out.state.values - limit))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    for r in ratios:
        assert 1.6 <= r <= 2.4


def test_drift_gtem_equals_gtem_for_drift_only_constant_g():
    grid = Grid1D(32)
    spec = CoefficientSpec(drift=(0.0, 1.0, 0.0, -1.0), diffusion=(0.7,), q=2,
                           variant="drift_only")
    noise = QWienerSpec(3.0, 1.0, 31)
    x0 = InitialCondition("sine", amplitude=2.0).build(grid)
    a = simulate(SchemeConfig(tau=0.05, grid=grid, horizon=1.0, scheme="gtem",
                              coefficients=spec, noise=noise, seed=2), x0, 0)
    b = simulate(SchemeConfig(tau=0.05, grid=grid, horizon=1.0, scheme="drift_gtem",
                              coefficients=spec, noise=noise, seed=2), x0, 0)
    assert np.array_equal(a.final.state.values, b.final.state.values)
    for name in a.observables:
        assert np.array_equal(a.observables[name], b.observables[name])


def test_record_stride_and_initial_conditions():
    cfg = heat_config(n_cells=16, tau=0.1, horizon=2.0)
    x0 = InitialCondition("bump", amplitude=1.0, center=0.4, width=0.05).build(cfg.grid)
    traj = simulate(cfg, x0, 0, record_stride=7)
    assert traj.steps[0] == 0 and traj.steps[-1] == cfg.n_steps
    assert all(s % 7 == 0 for s in traj.steps[1:-1])
    const = InitialCondition("const", amplitude=2.5).build(cfg.grid)
    assert np.all(const.values == 2.5)
    with pytest.raises(ValueError):
        InitialCondition("wavelet").build(cfg.grid)
    with pytest.raises(ValueError):
        simulate(cfg, x0, 0, record_stride=0)
