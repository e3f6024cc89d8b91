import pytest

from tamedspde.coefficients import CoefficientSpec, allen_cahn
from tamedspde.convergence import (
    fit_rate,
    fit_rate_xy,
    semigroup_error,
    semigroup_error_test,
    strong_error_ladder,
)
from tamedspde.grid import Grid1D
from tamedspde.noise import QWienerSpec
from tamedspde.schemes import InitialCondition, SchemeConfig

ZERO = CoefficientSpec(drift=(0.0,), diffusion=(0.0,), q=0, variant="drift_only")


def heat_reference(n_cells=32, tau=2.0**-12, horizon=1.0, seed=3):
    return SchemeConfig(tau=tau, grid=Grid1D(n_cells), horizon=horizon,
                        scheme="drift_gtem", coefficients=ZERO,
                        noise=QWienerSpec(3.0, 1e-30, n_cells - 1), seed=seed)


def additive_reference(tau=2.0**-10, n_cells=64, seed=41):
    return SchemeConfig(tau=tau, grid=Grid1D(n_cells), horizon=1.0,
                        scheme="drift_gtem", coefficients=allen_cahn(1.0),
                        noise=QWienerSpec(3.0, 1.0, n_cells - 1), seed=seed)


def test_fit_rate_exact_power_laws():
    taus = [2.0**-k for k in range(3, 9)]
    fit = fit_rate_xy(taus, [3.0 * t**0.5 for t in taus])
    assert abs(fit.slope - 0.5) <= 1e-10
    assert abs(fit.r_squared - 1.0) <= 1e-12
    flat = fit_rate_xy(taus, [0.7] * len(taus))
    assert abs(flat.slope) <= 1e-10


def test_fit_rate_asymptotic_dominance():
    taus = [2.0**-k for k in range(8, 14)]
    fit = fit_rate_xy(taus, [t + 5.0 * t**2 for t in taus])
    assert 1.0 < fit.slope < 1.05


def test_fit_rate_excludes_zero_rows():
    taus = [2.0**-k for k in range(3, 9)]
    ys = [t for t in taus]
    ys[2] = 0.0
    fit = fit_rate_xy(taus, ys)
    assert fit.n_excluded == 1 and fit.n_points == 5
    with pytest.raises(ValueError):
        fit_rate_xy(taus[:4], [1.0, 1.0, 0.0, 0.0])


def test_ladder_self_comparison_is_exact_zero():
    ref = heat_reference(tau=2.0**-8)
    table = strong_error_ladder(ref, InitialCondition("sine"), n_paths=1,
                                coarse_taus=[2.0**-8])
    assert table.rows[0].rms_sup_error == 0.0


def test_ladder_deterministic_heat_first_order():
    ref = heat_reference()
    table = strong_error_ladder(ref, InitialCondition("sine"), n_paths=1,
                                coarse_taus=[2.0**-k for k in range(4, 9)])
    errs = [r.rms_sup_error for r in table.rows]
    for a, b in zip(errs, errs[1:]):
        assert 1.7 <= a / b <= 2.3  # one halving of tau halves the error
    fit = fit_rate(table)
    assert 0.9 <= fit.slope <= 1.1


def test_ladder_is_bitwise_reproducible():
    ref = additive_reference()
    ladder = dict(coarse_taus=[2.0**-7, 2.0**-8])
    a = strong_error_ladder(ref, InitialCondition("sine", amplitude=2.0), 4, **ladder)
    b = strong_error_ladder(ref, InitialCondition("sine", amplitude=2.0), 4, **ladder)
    for ra, rb in zip(a.rows, b.rows):
        assert ra.rms_sup_error == rb.rms_sup_error  # bitwise, not approximate
        assert ra.std_error == rb.std_error


def test_ladder_validates_nesting():
    ref = additive_reference()
    with pytest.raises(ValueError):
        strong_error_ladder(ref, InitialCondition("sine"), 2,
                            coarse_taus=[3.0 * 2.0**-10])
    with pytest.raises(ValueError):
        strong_error_ladder(ref, InitialCondition("sine"), 2,
                            coarse_n_cells=[48])  # 64 % 48 != 0
    with pytest.raises(ValueError):
        strong_error_ladder(ref, InitialCondition("sine"), 2)
    with pytest.raises(ValueError):
        strong_error_ladder(ref, InitialCondition("sine"), 2,
                            coarse_taus=[2.0**-8], coarse_n_cells=[32])


def test_ladder_spatial_smoke():
    ref = additive_reference(tau=2.0**-8)
    table = strong_error_ladder(ref, InitialCondition("sine", amplitude=2.0),
                                n_paths=4, coarse_n_cells=[8, 16, 32])
    errs = [r.rms_sup_error for r in table.rows]
    assert errs[0] > errs[1] > errs[2] > 0
    assert table.axis == "h"
    assert {r.tau for r in table.rows} == {ref.tau}


def test_semigroup_error_zero_probe():
    assert semigroup_error(16, 0.25, amplitude=0.0) == 0.0
    with pytest.raises(ValueError):
        semigroup_error(16, 0.3, t=1.0)  # t not a multiple of tau


def test_semigroup_rates():
    cells = [8, 16, 32, 64, 128]
    _, fit_h = semigroup_error_test(cells, [1.0 / nc**2 for nc in cells], axis="h")
    assert abs(fit_h.slope - 2.0) <= 0.1
    taus = [2.0**-k for k in range(8, 13)]
    _, fit_t = semigroup_error_test([256] * 5, taus, axis="tau")
    assert abs(fit_t.slope - 1.0) <= 0.1
    with pytest.raises(ValueError):
        semigroup_error_test([8, 16], [0.1], axis="h")
    with pytest.raises(ValueError):
        semigroup_error_test([8], [0.1], axis="x")
