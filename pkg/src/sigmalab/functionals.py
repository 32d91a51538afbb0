"""Predictable path functionals with declared bounds.

A functional evaluates to one value per grid index; the causality
contract is that the value at index k uses only samples with index <= k.
The built-in factories (constants, tapered amplitudes, functions of the
running local time) satisfy it by construction; bespoke evaluators are
trusted to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .grids import Path

__all__ = ["PredictableFunctional", "FunctionSpec", "constant", "tapered_amplitude", "of_local_time"]


@dataclass(frozen=True)
class PredictableFunctional:
    """Vectorized per-index evaluator with a declared sup-norm bound.

    ``evaluate(b, aux)`` returns one value per grid point of ``b``;
    ``aux`` carries named companion arrays (e.g. ``local_time``).
    ``min_value`` is a declared lower bound, used to guard divisions.
    """

    name: str
    bound: float
    evaluate: Callable[[Path, Mapping[str, np.ndarray]], np.ndarray]
    min_value: float = 0.0

    def __call__(self, b: Path, aux: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
        vals = np.asarray(self.evaluate(b, aux or {}), dtype=float)
        if vals.shape != b.values.shape:
            raise ValueError(f"functional {self.name!r} returned shape {vals.shape}")
        if np.max(np.abs(vals)) > self.bound * (1 + 1e-12):
            raise ValueError(f"functional {self.name!r} exceeds its declared bound {self.bound}")
        return vals


def constant(c: float, name: str | None = None) -> PredictableFunctional:
    return PredictableFunctional(
        name=name or f"const[{c}]",
        bound=abs(c),
        evaluate=lambda b, aux: np.full(b.grid.n_points, float(c)),
        min_value=min(c, 0.0) if c < 0 else c,
    )


def tapered_amplitude(c: float, delta: float) -> PredictableFunctional:
    """|u_k| = c * min(1, |B_k|/delta): keeps u/B bounded by c/delta.

    The taper makes the singular drift correction ds/B integrable on
    every discretized excursion.
    """
    if delta <= 0:
        raise ValueError("taper delta must be > 0")

    def _eval(b: Path, aux: Mapping[str, np.ndarray]) -> np.ndarray:
        return c * np.minimum(1.0, np.abs(b.values) / delta)

    return PredictableFunctional(name=f"tapered[{c},{delta:.3g}]", bound=abs(c), evaluate=_eval)


def of_local_time(fn: Callable[[np.ndarray], np.ndarray], bound: float,
                  name: str = "f(L)", min_value: float = 0.0) -> PredictableFunctional:
    """z_k = fn(running local time at k); requires aux['local_time']."""

    def _eval(b: Path, aux: Mapping[str, np.ndarray]) -> np.ndarray:
        lt = aux.get("local_time")
        if lt is None:
            raise ValueError(f"functional {name!r} needs aux['local_time']")
        return np.asarray(fn(np.asarray(lt)), dtype=float)

    return PredictableFunctional(name=name, bound=bound, evaluate=_eval, min_value=min_value)


@dataclass(frozen=True)
class FunctionSpec:
    """A bounded Borel function of the local time, with optional compact support."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    bound: float
    support: float | None = None  # fn vanishes beyond this point if set

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
        if np.max(np.abs(out)) > self.bound * (1 + 1e-12):
            raise ValueError(f"function {self.name!r} exceeds declared bound {self.bound}")
        return out

    @staticmethod
    def one() -> "FunctionSpec":
        return FunctionSpec("one", lambda x: np.ones_like(x), bound=1.0)

    @staticmethod
    def indicator(cutoff: float) -> "FunctionSpec":
        return FunctionSpec(
            f"indicator[<={cutoff}]", lambda x: (x <= cutoff).astype(float),
            bound=1.0, support=cutoff,
        )
