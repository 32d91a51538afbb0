"""Zero-set analysis of discretized paths.

A discretized Brownian path almost never hits zero exactly, so the
operative zero set is: exact zeros (within an optional band) plus
sign-change crossings, each crossing attributed to the endpoint with
the smaller magnitude (ties to the earlier index).  Excursions are the
maximal runs between zero-set indices; the module also builds the two
sign processes used throughout: the right-limit sign of the path
itself, and independently flipped per-excursion signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import DOMAIN_SIGNS, Path, SeedSpec, TimeGrid

__all__ = [
    "zero_set",
    "zero_mask",
    "ExcursionSet",
    "decompose_excursions",
    "last_zero_indices",
    "last_zero_times",
    "SignProcess",
    "right_sign_process",
    "flip_signs",
    "apply_signs",
    "left_fill_signs",
]


def zero_mask(x: Path | np.ndarray, band: float = 0.0) -> np.ndarray:
    """Boolean mask of the detected zero set.

    An index is in the zero set when |x_k| <= band, or when a strict
    sign change x_k * x_{k+1} < 0 occurs, attributed to the endpoint
    with smaller |x| (tie -> earlier index).
    """
    if band < 0:
        raise ValueError(f"band must be >= 0, got {band}")
    v = x.values if isinstance(x, Path) else np.asarray(x, dtype=float)
    mask = np.abs(v) <= band
    crossing = (v[:-1] * v[1:] < 0) & ~mask[:-1] & ~mask[1:]
    idx = np.nonzero(crossing)[0]
    take_right = np.abs(v[idx + 1]) < np.abs(v[idx])
    mask[np.where(take_right, idx + 1, idx)] = True
    return mask


def zero_set(x: Path, band: float = 0.0) -> np.ndarray:
    """Sorted indices of the detected zero set (see ``zero_mask``)."""
    return np.nonzero(zero_mask(x, band))[0]


@dataclass
class ExcursionSet:
    """Ordered excursion intervals ]g_n, d_n[ with per-excursion signs.

    ``g`` and ``d`` index the bracketing zero-set points.  ``first_inside``
    / ``last_inside`` give the run of indices strictly outside the zero
    set (the excursion interior, inclusive).  An excursion cut off by the
    end of the grid (or starting before it) keeps its interval but is
    flagged unfinished.
    """

    grid: TimeGrid
    band: float
    g: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)
    unfinished: np.ndarray = field(repr=False)
    first_inside: np.ndarray = field(repr=False)
    last_inside: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.g)

    def durations(self) -> np.ndarray:
        return (self.d - self.g) * self.grid.dt

    def to_rows(self) -> list[tuple[int, int, int, bool]]:
        return [
            (int(g), int(d), int(s), bool(u))
            for g, d, s, u in zip(self.g, self.d, self.signs, self.unfinished)
        ]


def decompose_excursions(x: Path, band: float = 0.0) -> ExcursionSet:
    """Split a path into excursions away from its detected zero set.

    Each maximal run of non-zero-set indices becomes one interval; the
    interval sign is the path's sign at the run's maximum-|x| point.
    """
    mask = zero_mask(x, band)
    v = x.values
    nz = ~mask
    n_last = len(v) - 1
    edge = np.diff(nz.astype(np.int8))
    starts = np.nonzero(edge == 1)[0] + 1
    stops = np.nonzero(edge == -1)[0]
    if nz[0]:
        starts = np.concatenate(([0], starts))
    if nz[-1]:
        stops = np.concatenate((stops, [n_last]))

    g = np.maximum(starts - 1, 0)
    d = np.minimum(stops + 1, n_last)
    unfinished = stops == n_last
    signs = np.empty(len(starts), dtype=np.int64)
    for i, (a, b) in enumerate(zip(starts, stops)):
        seg = v[a : b + 1]
        signs[i] = int(np.sign(seg[np.argmax(np.abs(seg))]))
    return ExcursionSet(
        grid=x.grid,
        band=band,
        g=g,
        d=d,
        signs=signs,
        unfinished=unfinished,
        first_inside=starts,
        last_inside=stops,
    )


def last_zero_indices(mask: np.ndarray) -> np.ndarray:
    """g(k) = index of the latest zero-set point <= k; requires mask[0]."""
    if not mask[0]:
        raise ValueError("path must start on the zero set (x_0 in the band)")
    marked = np.where(mask, np.arange(len(mask)), -1)
    return np.maximum.accumulate(marked)


def last_zero_times(x: Path, band: float = 0.0) -> Path:
    """The process t_k -> time of the latest zero of x at or before t_k."""
    g = last_zero_indices(zero_mask(x, band))
    return Path(x.grid, g * x.grid.dt)


@dataclass
class SignProcess:
    """A {-1, 0, +1}-valued path, zero exactly on the detected zero set."""

    path: Path

    def __post_init__(self) -> None:
        v = self.path.values
        if not np.all(np.isin(v, (-1.0, 0.0, 1.0))):
            raise ValueError("sign process values must be in {-1, 0, +1}")

    @property
    def values(self) -> np.ndarray:
        return self.path.values


def _scatter_runs(exc: ExcursionSet, per_run: np.ndarray) -> np.ndarray:
    """Paint per_run[n] onto run n's indices, 0 elsewhere."""
    n_points = exc.grid.n_points
    delta = np.zeros(n_points + 1)
    np.add.at(delta, exc.first_inside, per_run.astype(float))
    np.add.at(delta, exc.last_inside + 1, -per_run.astype(float))
    return np.cumsum(delta)[:n_points]


def right_sign_process(x: Path, exc: ExcursionSet) -> SignProcess:
    """Right-limit sign process: the excursion's sign on its interior,
    the NEXT excursion's sign on zero-set indices, 0 after the last one.
    """
    vals = _scatter_runs(exc, exc.signs)
    zeros = np.nonzero(vals == 0)[0]
    if len(exc) > 0 and len(zeros) > 0:
        nxt = np.searchsorted(exc.first_inside, zeros, side="left")
        has_next = nxt < len(exc)
        vals[zeros[has_next]] = exc.signs[nxt[has_next]]
    return SignProcess(Path(exc.grid, vals))


def flip_signs(exc: ExcursionSet, p_plus: float, seed: SeedSpec) -> SignProcess:
    """Assign each excursion an independent sign: +1 w.p. p_plus, else -1.

    Draws come from the seed's sign-stream domain, so they never collide
    with the stream that generated the underlying path.  The process is
    0 on the zero set and constant on each excursion.
    """
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError(f"p_plus must be in [0, 1], got {p_plus}")
    rng = seed.generator(DOMAIN_SIGNS)
    zeta = np.where(rng.random(len(exc)) < p_plus, 1.0, -1.0)
    return SignProcess(Path(exc.grid, _scatter_runs(exc, zeta)))


def apply_signs(sp: SignProcess, x: Path) -> Path:
    """Pointwise product sign * path; vanishes exactly on the zero set."""
    if sp.path.grid != x.grid:
        raise ValueError("sign process and path must share a grid")
    return Path(x.grid, sp.values * x.values)


def left_fill_signs(values: np.ndarray) -> np.ndarray:
    """Replace zeros by the last preceding nonzero sign.

    Integrands built from excursion signs must not look ahead; on the
    zero set (where crossings are attributed using the next sample) the
    previous excursion's sign is the predictable stand-in.
    """
    idx = np.where(values != 0, np.arange(len(values)), -1)
    pos = np.maximum.accumulate(idx)
    out = np.zeros_like(values, dtype=float)
    valid = pos >= 0
    out[valid] = values[pos[valid]]
    return out
