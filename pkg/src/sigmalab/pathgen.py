"""Deterministic generation of Brownian and derived example paths.

All generators are pure functions of (grid, seed): the same inputs give
bit-identical output, and ensemble members are addressed by stream index
so that results do not depend on execution order or worker count.
"""

from __future__ import annotations

from typing import Callable, Union

import numpy as np

from .grids import DOMAIN_PATH, DecomposedPath, Path, SeedSpec, TimeGrid

__all__ = [
    "brownian_path",
    "reflected_decomposition",
    "drawdown_decomposition",
    "generate_ensemble",
    "FAMILIES",
]


def brownian_path(grid: TimeGrid, seed: SeedSpec) -> Path:
    """Standard Brownian path: B_0 = 0, increments iid N(0, dt).

    Parameters
    ----------
    grid : TimeGrid
        Uniform sampling grid.
    seed : SeedSpec
        Stream address; identical (grid, seed) gives bit-identical output.
    """
    rng = seed.generator(DOMAIN_PATH)
    increments = rng.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    values = np.empty(grid.n_points)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return Path(grid, values)


def sign_zero(values: np.ndarray) -> np.ndarray:
    """Sign with the convention sign(0) = 0 (np.sign already does this)."""
    return np.sign(values)


def reflected_decomposition(b: Path) -> DecomposedPath:
    """Reflect a Brownian path: x = |b|, m = left-point sum of sign(b) db.

    The finite-variation part v = x - m is the discrete Tanaka residual;
    it is nondecreasing and grows only where b crosses or touches zero,
    which makes v a pathwise local-time estimate.
    """
    x = np.abs(b.values)
    db = np.diff(b.values)
    m = np.empty_like(b.values)
    m[0] = 0.0
    np.cumsum(sign_zero(b.values[:-1]) * db, out=m[1:])
    v = x - m
    v[0] = 0.0
    return DecomposedPath(Path(b.grid, x), Path(b.grid, m), Path(b.grid, v))


def drawdown_decomposition(b: Path) -> DecomposedPath:
    """Drawdown of a path: x = running_max(b) - b, m = -b, v = running_max(b).

    v is nondecreasing exactly and increases only when a new maximum is
    set, i.e. where x returns to zero.
    """
    v = np.maximum.accumulate(b.values)
    m = -b.values
    x = v + m
    return DecomposedPath(Path(b.grid, x), Path(b.grid, m), Path(b.grid, v))


# Registered path families, by name, for ensemble/CLI use.
FAMILIES: dict[str, Callable] = {
    "brownian": lambda grid, seed: brownian_path(grid, seed),
    "reflected": lambda grid, seed: reflected_decomposition(brownian_path(grid, seed)),
    "drawdown": lambda grid, seed: drawdown_decomposition(brownian_path(grid, seed)),
}


def generate_ensemble(
    family: Union[str, Callable[[TimeGrid, SeedSpec], object]],
    grid: TimeGrid,
    master_seed: int,
    n_paths: int,
) -> list:
    """Generate paths i = 0..n_paths-1, path i from SeedSpec(master_seed, i).

    The result is a pure function of (family, grid, master_seed, n_paths);
    members can equally be produced one at a time via their SeedSpec.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    gen = FAMILIES[family] if isinstance(family, str) else family
    return [gen(grid, SeedSpec(master_seed, i)) for i in range(n_paths)]
