"""Core value types: uniform time grids, sampled paths, seed addressing.

Every simulation in the package lives on a uniform grid starting at t=0.
A :class:`Path` is the universal currency; a :class:`DecomposedPath`
additionally carries an explicit martingale / finite-variation split
``x = m + v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TimeGrid", "SeedSpec", "Path", "DecomposedPath"]

# Seed-stream domains.  Using distinct spawn-key prefixes guarantees that
# e.g. excursion-sign draws never consume numbers from the path stream.
DOMAIN_PATH = 0
DOMAIN_SIGNS = 1
DOMAIN_INNER = 2


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*dt, k = 0..n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be a positive finite number, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    def times(self) -> np.ndarray:
        # k*dt elementwise; never a running sum, so there is no drift
        # in the grid itself.
        return np.arange(self.n_points) * self.dt

    def index_at(self, t: float) -> int:
        """Grid index of time ``t`` (must sit on the grid up to roundoff)."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the grid (dt={self.dt}, n={self.n_steps})")
        return k


@dataclass(frozen=True)
class SeedSpec:
    """Exact stream addressing: (master_seed, stream_index) -> generator.

    Built on numpy's splittable SeedSequence, so distinct stream indices
    yield statistically independent generators and the mapping is
    reproducible bit-for-bit across runs and worker layouts.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")

    def generator(self, domain: int = DOMAIN_PATH) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(domain, self.stream_index))
        return np.random.Generator(np.random.PCG64(seq))


def _as_values(values, n_points: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != n_points:
        raise ValueError(f"values must be 1-d of length {n_points}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("path values must be finite (no NaN/Inf)")
    return arr


@dataclass
class Path:
    """A real-valued process sampled on a uniform grid (n_steps+1 values)."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.values = _as_values(self.values, self.grid.n_points)

    def __len__(self) -> int:
        return self.grid.n_points

    def times(self) -> np.ndarray:
        return self.grid.times()

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.index_at(t)])


@dataclass
class DecomposedPath:
    """Path with explicit split x = m + v.

    ``m`` is the (candidate) martingale part, ``v`` the continuous
    finite-variation part with v_0 = 0.  The split is checked pointwise
    at construction.
    """

    x: Path
    m: Path
    v: Path

    def __post_init__(self) -> None:
        g = self.x.grid
        if self.m.grid != g or self.v.grid != g:
            raise ValueError("x, m, v must share one grid")
        if abs(self.v.values[0]) > 1e-12:
            raise ValueError(f"v must start at 0, got {self.v.values[0]}")
        scale = 1.0 + np.max(np.abs(self.x.values))
        gap = np.max(np.abs(self.x.values - self.m.values - self.v.values))
        if gap > 1e-9 * scale:
            raise ValueError(f"x != m + v (max gap {gap:.3e})")

    @property
    def grid(self) -> TimeGrid:
        return self.x.grid
