"""Trace-class Q-Wiener increments in the sine eigenbasis.

The driving noise is W(t) = sum_k sqrt(lambda_k) q_k beta_k(t) with
q_k(x) = sqrt(2) sin(k pi x) and eigenvalues lambda_k = scale * k^(-s),
s > 1 (trace class), truncated at K modes.  The noise space is fixed to the
solution space with its Dirichlet sine basis (a diagonal covariance); more
general separable spaces are out of scope.  An increment over one step is

    dW(x_i) = sum_{k<=K} sqrt(lambda_k tau) zeta_k q_k(x_i),

with zeta_k independent standard normals drawn from a counter-based Philox
stream: the 128-bit key encodes (master seed, path id), the 256-bit counter
starts at step_index * 2^128, and zeta_k is the k-th normal drawn.  Every
zeta is therefore a pure function of (seed, path, step, mode): resampling is
bit-identical, paths can be generated concurrently, truncating to fewer
modes gives a prefix of the same draws, and summing increments over coarser
steps reproduces exactly the same Brownian path — the properties the
coupled convergence ladders rely on.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

from .grid import Grid1D, GridFunction

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class QWienerSpec:
    """Eigenvalue decay and truncation of the noise covariance.

    lambda_k = scale * k^(-decay_exponent); decay_exponent > 1 keeps the
    covariance trace class.  ``truncation`` must not exceed the number of
    interior nodes of the grid the increments are sampled on.
    """

    decay_exponent: float
    scale: float = 1.0
    truncation: int = 255

    def __post_init__(self):
        if self.decay_exponent <= 1.0:
            raise ValueError(
                f"decay_exponent must be > 1 (trace class), got {self.decay_exponent}"
            )
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.truncation < 1:
            raise ValueError(f"truncation must be >= 1, got {self.truncation}")

    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.truncation + 1, dtype=np.float64)
        return self.scale * k**-self.decay_exponent

    def trace(self) -> float:
        return float(np.sum(self.eigenvalues()))

    def for_grid(self, grid: Grid1D) -> "QWienerSpec":
        """Tie the truncation to the mesh resolution (K = n_cells - 1)."""
        return QWienerSpec(self.decay_exponent, self.scale, grid.n_interior)


def c_q_constant(spec: QWienerSpec) -> float:
    """sum_k lambda_k ||q_k||_inf^2 = 2 sum_k lambda_k (sup_x sqrt(2)|sin| = sqrt(2))."""
    return 2.0 * spec.trace()


@dataclass(frozen=True, eq=False)
class NoiseIncrement:
    """One Q-Wiener increment: nodal values plus the modal coefficients behind them."""

    grid: Grid1D
    tau: float
    coeffs: np.ndarray = field(repr=False)  # sqrt(lambda_k tau) zeta_k, k = 1..K
    values: np.ndarray = field(repr=False)  # nodal synthesis of coeffs
    stream: tuple = ()

    def __post_init__(self):
        for name in ("coeffs", "values"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values)


@functools.lru_cache(maxsize=32)
def _synth_matrix(n_cells: int) -> np.ndarray:
    i = np.arange(1, n_cells)[:, None]
    k = np.arange(1, n_cells)[None, :]
    return np.sqrt(2.0) * np.sin(i * k * np.pi / n_cells)


def synth_values(coeffs: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Nodal values of sum_k coeffs[k-1] sqrt(2) sin(k pi x) at the interior nodes."""
    if len(coeffs) > grid.n_interior:
        raise ValueError(
            f"{len(coeffs)} modes alias on a grid with {grid.n_interior} interior nodes"
        )
    if grid.n_interior <= 512:
        return _synth_matrix(grid.n_cells)[:, : len(coeffs)] @ coeffs
    c = np.zeros(grid.n_interior)
    c[: len(coeffs)] = coeffs
    return scipy.fft.dst(c, type=1) * (np.sqrt(2.0) / 2.0)


def _stream_key(seed: int, path_id: int) -> int:
    return (seed & _MASK64) | ((path_id & _MASK64) << 64)


class PathSampler:
    """Sampler for one path: one Philox generator, re-seated per step.

    Re-seating the counter at step_index * 2^128 (and clearing the output
    buffer) is bit-identical to constructing a fresh generator, but an order
    of magnitude cheaper in the stepping loop.
    """

    def __init__(self, spec: QWienerSpec, seed: int, path_id: int):
        self.spec = spec
        self.seed = seed
        self.path_id = path_id
        self._eigs = spec.eigenvalues()
        self._scale_cache: tuple = (None, None)  # (tau, sqrt(lambda_k tau))
        self._bitgen = np.random.Philox(key=_stream_key(seed, path_id))
        self._gen = np.random.Generator(self._bitgen)
        self._counter = np.zeros(4, dtype=np.uint64)

    def normals(self, step_index: int) -> np.ndarray:
        if not 0 <= step_index < 1 << 64:
            raise ValueError(f"step_index out of range: {step_index}")
        state = self._bitgen.state
        self._counter[2] = step_index  # counter = step_index << 128
        state["state"]["counter"] = self._counter
        state["buffer_pos"] = 4  # discard buffered words from the previous step
        state["has_uint32"] = 0
        state["uinteger"] = 0
        self._bitgen.state = state
        return self._gen.standard_normal(self.spec.truncation)

    def coeffs(self, step_index: int, tau: float) -> np.ndarray:
        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        if self._scale_cache[0] != tau:
            self._scale_cache = (tau, np.sqrt(self._eigs * tau))
        return self._scale_cache[1] * self.normals(step_index)

    def increment(self, step_index: int, tau: float, grid: Grid1D) -> NoiseIncrement:
        w = self.coeffs(step_index, tau)
        return NoiseIncrement(
            grid=grid,
            tau=tau,
            coeffs=w,
            values=synth_values(w, grid),
            stream=(self.seed, self.path_id, step_index),
        )


def sample_increment(
    spec: QWienerSpec,
    tau: float,
    seed: int,
    path_id: int,
    step_index: int,
    grid: Grid1D,
) -> NoiseIncrement:
    """One increment from the deterministic stream; see the module docstring."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    gen = np.random.Generator(
        np.random.Philox(key=_stream_key(seed, path_id), counter=step_index << 128)
    )
    w = np.sqrt(spec.eigenvalues() * tau) * gen.standard_normal(spec.truncation)
    return NoiseIncrement(
        grid=grid,
        tau=tau,
        coeffs=w,
        values=synth_values(w, grid),
        stream=(seed, path_id, step_index),
    )


def pairwise_tree_sum(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Sum with a fixed balanced pairwise tree (adjacent pairs, odd tail carried).

    For power-of-two counts, two-stage aggregation composes bit-identically
    with one-shot aggregation, which is what the nested step ladders need.
    """
    items = list(arrays)
    if not items:
        raise ValueError("nothing to sum")
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def pairwise_tree_sum_axis(a: np.ndarray, axis: int = 1) -> np.ndarray:
    """Vectorized pairwise tree over one axis; same tree as pairwise_tree_sum."""
    a = np.moveaxis(a, axis, 0)
    while a.shape[0] > 1:
        m = a.shape[0]
        even = a[0 : m - 1 : 2] + a[1:m:2]
        a = even if m % 2 == 0 else np.concatenate([even, a[-1:]], axis=0)
    return a[0]


def aggregate_increments(increments: Sequence[NoiseIncrement]) -> NoiseIncrement:
    """Sum fine increments over one coarse step of the same Brownian path."""
    incs = list(increments)
    if not incs:
        raise ValueError("no increments to aggregate")
    grid = incs[0].grid
    tau_fine = incs[0].tau
    for inc in incs[1:]:
        if inc.grid != grid:
            raise ValueError("all increments must live on the same grid")
        if inc.tau != tau_fine:
            raise ValueError("all increments must share the same fine step")
    return NoiseIncrement(
        grid=grid,
        tau=tau_fine * len(incs),
        coeffs=pairwise_tree_sum([i.coeffs for i in incs]),
        values=pairwise_tree_sum([i.values for i in incs]),
        stream=("agg", incs[0].stream, len(incs)),
    )


def restrict_modes(inc: NoiseIncrement, grid: Grid1D) -> NoiseIncrement:
    """The same increment truncated to a coarser grid's own mode count."""
    k = grid.n_interior
    if k > len(inc.coeffs):
        raise ValueError(
            f"target grid needs {k} modes but the increment carries {len(inc.coeffs)}"
        )
    w = inc.coeffs[:k]
    return NoiseIncrement(
        grid=grid,
        tau=inc.tau,
        coeffs=w,
        values=synth_values(w, grid),
        stream=("restrict", inc.stream, k),
    )
