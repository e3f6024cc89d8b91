import numpy as np
import pytest

from tamedspde.fem import (
    apply_resolvent_power,
    assemble,
    dispersion_eigenvalue,
    eigen_smallest,
    projection_load,
    solve_semi_implicit,
)
from tamedspde.grid import Grid1D, GridFunction, l2_norm, sine_mode, zeros


def test_assemble_single_interior_node():
    ops = assemble(Grid1D(2))
    assert np.allclose(ops.mass_dense(), [[1.0 / 3.0]])
    assert np.allclose(ops.stiff_dense(), [[4.0]])
    with pytest.raises(ValueError):
        Grid1D(1)


def test_assemble_structure():
    ops = assemble(Grid1D(16))
    M, K = ops.mass_dense(), ops.stiff_dense()
    assert np.array_equal(M, M.T)
    assert np.array_equal(K, K.T)
    # interior rows of K annihilate constants
    assert np.allclose(K.sum(axis=1)[1:-1], 0.0, atol=1e-14)
    h = 1.0 / 16.0
    assert np.allclose(np.diag(M), 4.0 * h / 6.0)
    assert np.allclose(np.diag(K), 2.0 / h)


def test_solve_semi_implicit_scalar_case():
    ops = assemble(Grid1D(2))
    z = solve_semi_implicit(ops, 0.1, np.array([1.0 / 3.0]))
    assert np.isclose(z[0], 5.0 / 11.0, rtol=1e-14)


def test_solve_tau_zero_identity():
    ops = assemble(Grid1D(32))
    rng = np.random.default_rng(0)
    u = rng.standard_normal(31)
    z = solve_semi_implicit(ops, 0.0, ops.mass_matvec(u))
    assert np.max(np.abs(z - u)) <= 1e-12


def test_solve_residual_and_contraction():
    rng = np.random.default_rng(1)
    for n, tau in [(16, 0.3), (64, 1.0), (256, 0.01)]:
        ops = assemble(Grid1D(n))
        load = rng.standard_normal(n - 1)
        z = solve_semi_implicit(ops, tau, load)
        A = ops.mass_dense() + tau * ops.stiff_dense()
        resid = np.linalg.norm(A @ z - load)
        assert resid <= 1e-12 * np.linalg.norm(load)
        # (M + tau K) z = M u  implies  ||z||_M <= ||u||_M
        u = GridFunction(ops.grid, rng.standard_normal(n - 1))
        z = solve_semi_implicit(ops, tau, ops.mass_matvec(u.values.copy()))
        assert l2_norm(GridFunction(ops.grid, z)) <= l2_norm(u) * (1.0 + 1e-13)


def test_banded_vs_dense_reference():
    rng = np.random.default_rng(2)
    for n_cells in (8, 64, 513):
        ops = assemble(Grid1D(n_cells))
        tau = float(rng.uniform(0.01, 1.0))
        load = rng.standard_normal(n_cells - 1)
        z = solve_semi_implicit(ops, tau, load)
        dense = np.linalg.solve(ops.mass_dense() + tau * ops.stiff_dense(), load)
        assert np.max(np.abs(z - dense)) <= 1e-12


def test_resolvent_power_zero_and_nonexpansive():
    g = Grid1D(64)
    ops = assemble(g)
    assert np.all(apply_resolvent_power(ops, 0.5, zeros(g), 10).values == 0.0)
    rng = np.random.default_rng(3)
    u = GridFunction(g, rng.standard_normal(63))
    out = apply_resolvent_power(ops, 0.5, u, 100)
    assert l2_norm(out) <= l2_norm(u) + 1e-10


def test_resolvent_power_sine_mode_decay():
    g = Grid1D(64)
    ops = assemble(g)
    u = sine_mode(g, 1)
    lam = eigen_smallest(ops)
    tau, k = 0.25, 12
    out = apply_resolvent_power(ops, tau, u, k)
    expected = (1.0 + tau * lam) ** (-k) * u.values
    assert np.max(np.abs(out.values - expected)) <= 1e-8


def test_projection_load_modes():
    g = Grid1D(32)
    ops = assemble(g)
    assert np.all(projection_load(ops, zeros(g)) == 0.0)
    # w already piecewise linear: nodal projection load is exactly M w
    rng = np.random.default_rng(4)
    w = GridFunction(g, rng.standard_normal(31))
    assert np.allclose(projection_load(ops, w), ops.mass_matvec(w.values.copy()))
    with pytest.raises(ValueError):
        projection_load(ops, w, mode="gauss")
    with pytest.raises(ValueError):
        projection_load(ops, w, mode="simpson")


def test_projection_gauss_vs_nodal_second_order():
    # quadrature and nodal loads differ by O(h^2) on smooth data
    f = lambda x: np.sin(np.pi * x)
    diffs = []
    for n in (16, 32, 64):
        ops = assemble(Grid1D(n))
        d = projection_load(ops, f, mode="gauss") - projection_load(ops, f, mode="nodal")
        diffs.append(np.max(np.abs(d)) / ops.grid.h)  # per-load-row scale ~ h
    ratios = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1)]
    for r in ratios:
        assert 3.3 <= r <= 4.7


def test_eigen_smallest_dispersion():
    g = Grid1D(4)
    lam = eigen_smallest(assemble(g))
    h = 0.25
    closed = 6.0 / h**2 * (1.0 - np.cos(np.pi * h)) / (2.0 + np.cos(np.pi * h))
    assert abs(lam - closed) <= 1e-10
    assert abs(closed - dispersion_eigenvalue(g)) == 0.0


def test_eigen_smallest_converges_to_pi_squared():
    prev_ratio = None
    for n in (8, 16, 32, 64):
        lam = eigen_smallest(assemble(Grid1D(n)))
        assert lam > 0
        ratio = (lam - np.pi**2) / (1.0 / n) ** 2
        assert 0.0 < ratio < 12.0  # (lam_h - pi^2)/h^2 stays bounded
        if prev_ratio is not None:
            assert abs(ratio - prev_ratio) < 2.0
        prev_ratio = ratio
