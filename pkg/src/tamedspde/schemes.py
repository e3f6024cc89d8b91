"""Semi-implicit time steppers: tamed, drift-tamed, and the untamed baseline.

One step from Z_{n-1} to Z_n solves the linear system

    (M + tau K) Z_n = M [ Z_{n-1} + tau f*(Z_{n-1}) + g*(Z_{n-1}) . dW ]

where '.' is the pointwise nodal product with the noise increment and the
(f*, g*) pair depends on the scheme:

    GTEM:        f* = f_tau,  g* = g_tau (per the coefficient spec's variant)
    DRIFT_GTEM:  f* = f_tau,  g* = g     (for linear-growth or additive g)
    UNTAMED_EM:  f* = f,      g* = g     (baseline; blows up for cubic f)

The linear part is treated implicitly (nonexpansive resolvent), the
coefficients explicitly; taming keeps the explicit part stable uniformly in
the horizon.  Blow-up is detected, not raised: a sticky flag freezes the
chain at its last finite state, which is what the untamed baseline's
blow-up statistics measure.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fem
from .coefficients import CoefficientSpec
from .grid import (
    Grid1D,
    GridFunction,
    h1_seminorm,
    l2_norm,
    lp_norm,
    sine_transform,
)
from .noise import NoiseIncrement, PathSampler, QWienerSpec

OVERFLOW_GUARD = 1e12


class Scheme(str, enum.Enum):
    GTEM = "gtem"
    DRIFT_GTEM = "drift_gtem"
    UNTAMED_EM = "untamed_em"


@dataclass(frozen=True)
class InitialCondition:
    """Closed-form initial data interpolated to the nodes.

    kinds: "zero"; "sine" (amplitude * sin(mode pi x)); "const" (amplitude on
    the interior); "bump" (amplitude * exp(-((x - center)/width)^2 / 2)).
    """

    kind: str = "zero"
    amplitude: float = 1.0
    mode: int = 1
    center: float = 0.5
    width: float = 0.1

    def build(self, grid: Grid1D) -> GridFunction:
        x = grid.nodes
        if self.kind == "zero":
            v = np.zeros_like(x)
        elif self.kind == "sine":
            v = self.amplitude * np.sin(self.mode * np.pi * x)
        elif self.kind == "const":
            v = np.full_like(x, self.amplitude)
        elif self.kind == "bump":
            v = self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2) / 2.0)
        else:
            raise ValueError(f"unknown initial-condition kind {self.kind!r}")
        return GridFunction(grid, v)


@dataclass(frozen=True)
class SchemeConfig:
    """Everything one chain needs: step size, mesh, horizon, scheme, data, seed."""

    tau: float
    grid: Grid1D
    horizon: float
    scheme: Scheme
    coefficients: CoefficientSpec
    noise: QWienerSpec
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        n = round(self.horizon / self.tau)
        if n < 1 or abs(n * self.tau - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(
                f"horizon {self.horizon} is not an integer multiple of tau {self.tau}"
            )
        if self.noise.truncation > self.grid.n_interior:
            raise ValueError(
                f"noise truncation {self.noise.truncation} exceeds the "
                f"{self.grid.n_interior} interior nodes; use QWienerSpec.for_grid"
            )

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.tau)


@dataclass(frozen=True, eq=False)
class ChainState:
    """Chain position after ``step_index`` steps; frozen once the guard trips."""

    step_index: int
    state: GridFunction
    blown_up: bool = False
    blowup_step: Optional[int] = None


def initial_state(x0: GridFunction) -> ChainState:
    return ChainState(0, x0)


@functools.lru_cache(maxsize=32)
def _operators(grid: Grid1D) -> fem.FemOperators:
    return fem.assemble(grid)


def step(state: ChainState, config: SchemeConfig, increment: NoiseIncrement) -> ChainState:
    """Advance one step; a tripped blow-up guard freezes the state instead of raising."""
    if state.blown_up:
        return ChainState(state.step_index + 1, state.state, True, state.blowup_step)
    if increment.grid != config.grid:
        raise ValueError("noise increment grid does not match the scheme grid")
    from .engine import step_rows  # deferred: engine imports this module

    z, blown = step_rows(config, state.state.values[None, :], increment.values[None, :])
    n = state.step_index + 1
    if blown[0]:
        return ChainState(n, state.state, True, n)
    return ChainState(n, GridFunction(config.grid, z[0]))


def lyapunov_V(state, tau: float) -> float:
    """V(Z) = ||Z||^2 + 2 tau ||grad Z||^2, the functional the tamed schemes contract."""
    u = state.state if isinstance(state, ChainState) else state
    return l2_norm(u) ** 2 + 2.0 * tau * h1_seminorm(u) ** 2


# Observables recordable along a trajectory, keyed by name.
OBSERVABLES = {
    "l2_sq": lambda u, cfg: l2_norm(u) ** 2,
    "h1_sq": lambda u, cfg: h1_seminorm(u) ** 2,
    "lq2": lambda u, cfg: lp_norm(u, cfg.coefficients.q + 2),
    "lyapunov": lambda u, cfg: lyapunov_V(u, cfg.tau),
    "mode1": lambda u, cfg: float(sine_transform(u).coeffs[0]),
    "one": lambda u, cfg: 1.0,
    "exp_neg_l2sq": lambda u, cfg: math.exp(-l2_norm(u) ** 2),
}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded observables of one path, plus its final state."""

    config: SchemeConfig
    path_id: int
    steps: np.ndarray = field(repr=False)
    observables: dict = field(repr=False)
    final: ChainState = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.config.tau

    @property
    def blowup_step(self) -> Optional[int]:
        return self.final.blowup_step


def simulate(
    config: SchemeConfig,
    x0: GridFunction,
    path_id: int,
    record_stride: int = 1,
    observables: tuple = ("l2_sq", "h1_sq", "lq2", "lyapunov"),
) -> Trajectory:
    """Run one path for the full horizon, recording observables every stride.

    Deterministic in (config, path_id); after a blow-up the frozen (last
    finite) state keeps being recorded and the failure step is reported.
    """
    if x0.grid != config.grid:
        raise ValueError("initial state grid does not match the scheme grid")
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    fns = {name: OBSERVABLES[name] for name in observables}
    sampler = PathSampler(config.noise, config.seed, path_id)
    state = initial_state(x0)
    recorded_steps = [0]
    series = {name: [fn(x0, config)] for name, fn in fns.items()}
    n_steps = config.n_steps
    for n in range(1, n_steps + 1):
        inc = sampler.increment(n - 1, config.tau, config.grid)
        state = step(state, config, inc)
        if n % record_stride == 0 or n == n_steps:
            recorded_steps.append(n)
            for name, fn in fns.items():
                series[name].append(fn(state.state, config))
    return Trajectory(
        config=config,
        path_id=path_id,
        steps=np.asarray(recorded_steps),
        observables={k: np.asarray(v) for k, v in series.items()},
        final=state,
    )
