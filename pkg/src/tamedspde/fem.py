"""P1 finite-element operators on the unit interval.

Assembles the tridiagonal mass matrix M (rows h/6 * [1, 4, 1]) and stiffness
matrix K (rows 1/h * [-1, 2, -1]) for the interior nodes of a ``Grid1D``,
and provides the semi-implicit resolvent step: solving (M + tau*K) z = load
by banded Cholesky elimination.  The resolvent S = (M + tau*K)^{-1} M is
nonexpansive in the mass norm, which is what makes the schemes in
``tamedspde.schemes`` unconditionally stable in the linear part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpbtrs as _dpbtrs

from .grid import Grid1D, GridFunction


@dataclass(frozen=True, eq=False)
class FemOperators:
    """Tridiagonal P1 mass and stiffness matrices for a grid.

    ``mass_diag``/``mass_off`` and ``stiff_diag``/``stiff_off`` hold the main
    and first off-diagonal entries (both symmetric).  Factorizations of
    (M + tau*K) are cached per step size.
    """

    grid: Grid1D
    mass_diag: np.ndarray = field(repr=False)
    mass_off: np.ndarray = field(repr=False)
    stiff_diag: np.ndarray = field(repr=False)
    stiff_off: np.ndarray = field(repr=False)
    _factors: dict = field(default_factory=dict, repr=False, compare=False)

    def mass_matvec(self, v: np.ndarray) -> np.ndarray:
        return _tri_matvec(self.mass_diag, self.mass_off, v)

    def stiff_matvec(self, v: np.ndarray) -> np.ndarray:
        return _tri_matvec(self.stiff_diag, self.stiff_off, v)

    def mass_dense(self) -> np.ndarray:
        return _tri_dense(self.mass_diag, self.mass_off)

    def stiff_dense(self) -> np.ndarray:
        return _tri_dense(self.stiff_diag, self.stiff_off)

    def _cholesky(self, tau: float):
        """Banded Cholesky factor of (M + tau*K), cached per tau."""
        fac = self._factors.get(tau)
        if fac is None:
            n = self.grid.n_interior
            ab = np.zeros((2, n))
            ab[1] = self.mass_diag + tau * self.stiff_diag
            ab[0, 1:] = self.mass_off + tau * self.stiff_off
            fac = scipy.linalg.cholesky_banded(ab, check_finite=False)
            self._factors[tau] = fac
        return fac


def _tri_matvec(diag: np.ndarray, off: np.ndarray, v: np.ndarray) -> np.ndarray:
    y = diag * v
    y[:-1] += off * v[1:]
    y[1:] += off * v[:-1]
    return y


def _tri_dense(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def assemble(grid: Grid1D) -> FemOperators:
    """Assemble the exact P1 mass and stiffness matrices on a uniform grid."""
    n = grid.n_interior
    h = grid.h
    return FemOperators(
        grid=grid,
        mass_diag=np.full(n, 4.0 * h / 6.0),
        mass_off=np.full(n - 1, h / 6.0),
        stiff_diag=np.full(n, 2.0 / h),
        stiff_off=np.full(n - 1, -1.0 / h),
    )


def solve_semi_implicit(ops: FemOperators, tau: float, load: np.ndarray) -> np.ndarray:
    """Solve (M + tau*K) z = load by banded Cholesky elimination.

    ``load`` is the assembled right-hand side (already mass-weighted).
    tau = 0 is allowed and reduces to a mass solve.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    load = np.asarray(load, dtype=np.float64)
    if load.shape != (ops.grid.n_interior,):
        raise ValueError(
            f"load has shape {load.shape}, expected ({ops.grid.n_interior},)"
        )
    z, info = _dpbtrs(ops._cholesky(tau), load)
    if info != 0:  # pragma: no cover - cannot happen for a valid factor
        raise RuntimeError(f"banded triangular solve failed (info={info})")
    return z


def apply_resolvent(ops: FemOperators, tau: float, u: GridFunction) -> GridFunction:
    """One resolvent step S u = (M + tau*K)^{-1} M u."""
    z = solve_semi_implicit(ops, tau, ops.mass_matvec(u.values.copy()))
    return GridFunction(ops.grid, z)


def apply_resolvent_power(
    ops: FemOperators, tau: float, u: GridFunction, k: int
) -> GridFunction:
    """k repeated resolvent steps; nonexpansive in the mass norm."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    z = u.values.copy()
    fac = ops._cholesky(tau)
    for _ in range(k):
        z, _info = _dpbtrs(fac, ops.mass_matvec(z))
    return GridFunction(ops.grid, z)


def projection_load(ops: FemOperators, w, mode: str = "nodal") -> np.ndarray:
    """Right-hand-side load realizing the L2 projection of w onto the mesh.

    mode = "nodal": interpolate w at the nodes, then multiply by M
    (mass-consistent; preserves pointwise semantics of tamed coefficients).
    mode = "gauss": per-element 2-point Gauss quadrature of integral(w * phi_i);
    requires a callable w and differs from nodal by O(h^2) on smooth w.
    """
    grid = ops.grid
    if mode == "nodal":
        if isinstance(w, GridFunction):
            vals = w.values
        else:
            vals = np.asarray(w(grid.nodes), dtype=np.float64)
        return ops.mass_matvec(vals.copy())
    if mode == "gauss":
        if not callable(w):
            raise ValueError("gauss quadrature mode requires a callable w")
        h = grid.h
        # 2-point Gauss on each element, hat-function weights.
        xg = (np.array([-1.0, 1.0]) / np.sqrt(3.0) + 1.0) / 2.0  # in [0, 1]
        load = np.zeros(grid.n_interior)
        elem_left = np.arange(grid.n_cells) * h
        for g in xg:
            x = elem_left + g * h
            fx = np.asarray(w(x), dtype=np.float64) * (h / 2.0)
            # phi_i is ascending (slope g) on element i-1, descending on element i.
            load += fx[:-1] * g  # element i-1 contribution to node i
            load += fx[1:] * (1.0 - g)  # element i contribution to node i
        return load
    raise ValueError(f"unknown projection mode {mode!r}")


def eigen_smallest(ops: FemOperators, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Smallest generalized eigenvalue of K v = lambda M v, by inverse iteration.

    On the uniform grid this equals (6/h^2)(1 - cos(pi h))/(2 + cos(pi h)),
    the P1 dispersion approximation of pi^2.
    """
    n = ops.grid.n_interior
    # Start from the slowest sine mode to avoid an unlucky orthogonal start.
    v = np.sin(np.pi * ops.grid.nodes)
    v /= np.sqrt(v @ ops.mass_matvec(v.copy()))
    ab = np.zeros((2, n))
    ab[1] = ops.stiff_diag
    ab[0, 1:] = ops.stiff_off
    fac = scipy.linalg.cholesky_banded(ab, check_finite=False)
    lam_prev = np.inf
    for _ in range(max_iter):
        v = scipy.linalg.cho_solve_banded(
            (fac, False), ops.mass_matvec(v.copy()), check_finite=False
        )
        v /= np.sqrt(v @ ops.mass_matvec(v.copy()))
        lam = float(v @ ops.stiff_matvec(v.copy()))
        if abs(lam - lam_prev) <= tol * abs(lam):
            return lam
        lam_prev = lam
    return lam_prev


def dispersion_eigenvalue(grid: Grid1D, k: int = 1) -> float:
    """Closed-form generalized eigenvalue of mode k on the uniform grid."""
    h = grid.h
    c = np.cos(k * np.pi * h)
    return float(6.0 / h**2 * (1.0 - c) / (2.0 + c))
