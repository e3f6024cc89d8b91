"""Vectorized lockstep driver for ensembles of chains.

The Monte Carlo harnesses advance many independent paths of the same scheme
configuration; doing so row-by-row wastes most of the time in per-call
overhead.  ``BatchChains`` keeps the ensemble as a (paths, nodes) matrix and
advances every path in one set of array operations.  The step arithmetic is
shared with ``tamedspde.schemes.step`` through ``step_rows``, so the two
drivers implement the same scheme.

Blow-up handling matches the scalar driver: a row whose right-hand side or
solution trips the overflow guard is frozen at its last finite state, and
the failing step index is recorded.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg.lapack import dpbtrs as _dpbtrs

from . import fem
from .coefficients import eval_f, eval_f_tau, eval_g, eval_g_tau
from .noise import PathSampler, _synth_matrix
from .schemes import OVERFLOW_GUARD, Scheme, SchemeConfig, _operators


def drift_diffusion_rows(config: SchemeConfig, values: np.ndarray):
    """Scheme-dependent (f*, g*) evaluation; shape-agnostic (rows or a vector)."""
    spec, tau = config.coefficients, config.tau
    if config.scheme is Scheme.GTEM:
        return eval_f_tau(spec, tau, values), eval_g_tau(spec, tau, values)
    if config.scheme is Scheme.DRIFT_GTEM:
        return eval_f_tau(spec, tau, values), eval_g(spec, values)
    return eval_f(spec, values), eval_g(spec, values)


def mass_matvec_rows(ops: fem.FemOperators, v: np.ndarray) -> np.ndarray:
    y = ops.mass_diag * v
    y[..., :-1] += ops.mass_off * v[..., 1:]
    y[..., 1:] += ops.mass_off * v[..., :-1]
    return y


def step_rows(config: SchemeConfig, values: np.ndarray, noise_values: np.ndarray):
    """One scheme step for a (paths, nodes) matrix of states.

    Returns (new_values, blown): ``blown`` marks rows that tripped the
    overflow guard during this step; such a row's output is meaningless and
    the caller keeps the previous state instead.
    """
    tau = config.tau
    f_part, g_part = drift_diffusion_rows(config, values)
    rhs = values + tau * f_part + g_part * noise_values
    with np.errstate(invalid="ignore"):
        bad_rhs = ~(np.abs(rhs).max(axis=-1) < np.inf)
    if np.any(bad_rhs):
        rhs = np.where(bad_rhs[:, None], 0.0, rhs)  # keep LAPACK inputs finite
    ops = _operators(config.grid)
    fac = ops._cholesky(tau)
    load = mass_matvec_rows(ops, rhs)
    z, _info = _dpbtrs(fac, load.T)
    z = np.ascontiguousarray(z.T)
    blown = bad_rhs.copy()
    with np.errstate(invalid="ignore"):
        suspect = ~(np.abs(z).max(axis=-1) <= OVERFLOW_GUARD)
    # The sup norm bounds the L2 norm on (0, 1), so only suspect rows need
    # the mass-norm decision.
    for i in np.nonzero(suspect & ~blown)[0]:
        row = z[i]
        if not np.all(np.isfinite(row)) or rows_l2_sq(row[None, :], config.grid.h)[
            0
        ] > OVERFLOW_GUARD**2:
            blown[i] = True
    return z, blown


# --- vectorized norms over (paths, nodes) matrices -------------------------


def rows_l2_sq(v: np.ndarray, h: float) -> np.ndarray:
    cross = np.sum(v[..., :-1] * v[..., 1:], axis=-1)
    return h / 6.0 * (4.0 * np.sum(v * v, axis=-1) + 2.0 * cross)


def rows_h1_sq(v: np.ndarray, h: float) -> np.ndarray:
    cross = np.sum(v[..., :-1] * v[..., 1:], axis=-1)
    return (2.0 * np.sum(v * v, axis=-1) - 2.0 * cross) / h


def rows_lp(v: np.ndarray, h: float, p: float) -> np.ndarray:
    if np.isinf(p):
        return np.abs(v).max(axis=-1)
    return (h * np.sum(np.abs(v) ** p, axis=-1)) ** (1.0 / p)


def rows_lyapunov(v: np.ndarray, h: float, tau: float) -> np.ndarray:
    return rows_l2_sq(v, h) + 2.0 * tau * rows_h1_sq(v, h)


class EnsembleNoise:
    """Per-path counter-based streams, synthesized jointly per step."""

    def __init__(self, config: SchemeConfig, path_ids: Sequence[int]):
        self.samplers = [
            PathSampler(config.noise, config.seed, pid) for pid in path_ids
        ]
        self.grid = config.grid
        self.tau = config.tau
        self._synth_t = np.ascontiguousarray(
            _synth_matrix(config.grid.n_cells)[:, : config.noise.truncation].T
        )

    def coeff_rows(self, step_index: int) -> np.ndarray:
        return np.stack([s.coeffs(step_index, self.tau) for s in self.samplers])

    def value_rows(self, step_index: int) -> np.ndarray:
        return self.coeff_rows(step_index) @ self._synth_t


class BatchChains:
    """An ensemble of chains advanced in lockstep.

    ``states`` holds one row per path; rows freeze at their last finite
    state once the blow-up guard trips (``blowup_step[i]`` records when).
    """

    def __init__(self, config: SchemeConfig, x0_rows: np.ndarray):
        x0_rows = np.atleast_2d(np.asarray(x0_rows, dtype=np.float64))
        if x0_rows.shape[1] != config.grid.n_interior:
            raise ValueError(
                f"x0 rows have {x0_rows.shape[1]} columns, grid has "
                f"{config.grid.n_interior} interior nodes"
            )
        self.config = config
        self.states = x0_rows.copy()
        self.n_paths = x0_rows.shape[0]
        self.step_index = 0
        self.blowup_step = np.full(self.n_paths, -1, dtype=np.int64)

    @property
    def blown(self) -> np.ndarray:
        return self.blowup_step >= 0

    def advance(self, noise_values: np.ndarray) -> None:
        """One step for every live row, driven by the given nodal noise."""
        self.step_index += 1
        z, blown_now = step_rows(self.config, self.states, noise_values)
        newly = blown_now & ~self.blown
        self.blowup_step[newly] = self.step_index
        keep = self.blown | blown_now
        self.states = np.where(keep[:, None], self.states, z)

    def run(
        self,
        noise: EnsembleNoise,
        n_steps: int,
        record_stride: int = 1,
        record=None,
    ):
        """Advance ``n_steps`` steps, calling ``record(step, states)`` at strides."""
        if record is not None:
            record(0, self.states)
        for n in range(1, n_steps + 1):
            self.advance(noise.value_rows(n - 1))
            if record is not None and (n % record_stride == 0 or n == n_steps):
                record(n, self.states)

