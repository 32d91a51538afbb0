"""Monte Carlo reproduction of closed-form laws tied to the zero set.

Exceedance probabilities indexed by inverse local time, the boundary
identity at the product stopping time, the conditional-law
submartingale of the last zero, nested-Monte-Carlo verification of the
last-passage representation, and the arcsine law.

Exceedance runs stream each path in blocks with early stopping (first
exceedance or local-time budget), so deep-tail paths never materialize
full trajectories; everything remains a pure function of
(master_seed, stream_index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats
from scipy.special import ndtr

from .calculus import cross_variation, default_eps, occupation_local_time
from .excursions import decompose_excursions, flip_signs, zero_mask
from .grids import DOMAIN_INNER, DOMAIN_PATH, Path, SeedSpec, TimeGrid
from .pathgen import brownian_path
from .sigma import MartingaleTestResult, martingale_score

__all__ = [
    "PhiSpec",
    "EstimateReport",
    "StreamConfig",
    "inverse_local_time",
    "exceedance_probability",
    "threshold_stopping_law",
    "t_phi_stopping",
    "azema_submartingale",
    "representation_check",
    "RepresentationReport",
    "product_martingale_check",
    "ProductMartingaleReport",
    "honest_time_law",
    "LawReport",
    "arcsine_cdf",
]


@dataclass(frozen=True)
class PhiSpec:
    """A positive Borel function of local time with its reciprocal integral.

    ``integral_fn(u)`` returns the exact value of int_0^u dx/phi(x) when
    known; otherwise adaptive quadrature is used.  ``diverges`` declares
    whether the reciprocal integral to infinity is infinite (so the
    associated stopping time is finite a.s.).
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    integral_fn: Callable[[float], float] | None = None
    diverges: bool | None = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def integral_to(self, u: float) -> float:
        if u < 0:
            raise ValueError("integral endpoint must be >= 0")
        if self.integral_fn is not None:
            return float(self.integral_fn(u))
        val, _ = integrate.quad(lambda x: 1.0 / float(self.fn(np.asarray([x]))[0]), 0.0, u, limit=200)
        return float(val)

    def exceedance_closed_form(self, u: float) -> float:
        """1 - exp(-int_0^u dx/phi(x))."""
        return 1.0 - math.exp(-self.integral_to(u))

    @staticmethod
    def constant(c: float) -> "PhiSpec":
        if c <= 0:
            raise ValueError("phi must be positive")
        return PhiSpec(
            name=f"const[{c}]",
            fn=lambda x: np.full_like(np.asarray(x, dtype=float), c),
            integral_fn=lambda u: u / c,
            diverges=True,
        )

    @staticmethod
    def exponential() -> "PhiSpec":
        return PhiSpec(
            name="exp",
            fn=np.exp,
            integral_fn=lambda u: 1.0 - math.exp(-u),
            diverges=False,
        )


@dataclass
class EstimateReport:
    """Empirical vs closed-form probability with binomial error bars."""

    theorem: str
    phi_name: str
    u: float
    n_paths: int
    dt: float
    empirical: float
    closed_form: float
    stderr: float
    allowance: float
    unresolved_fraction: float = 0.0
    flagged: bool = False

    @property
    def passed(self) -> bool:
        return abs(self.empirical - self.closed_form) <= 3.0 * self.stderr + self.allowance

    def to_payload(self) -> dict:
        return {
            "theorem": self.theorem,
            "phi_spec": self.phi_name,
            "u": self.u,
            "n_paths": self.n_paths,
            "dt": self.dt,
            "empirical": self.empirical,
            "closed_form": self.closed_form,
            "stderr": self.stderr,
            "allowance": self.allowance,
            "pass": self.passed,
            "unresolved_fraction": self.unresolved_fraction,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class StreamConfig:
    """Budget for streamed ensembles with horizon auto-extension."""

    dt: float
    n_paths: int
    master_seed: int
    eps: float | None = None
    block_steps: int = 1 << 15
    t_cap: float = 256.0

    @property
    def eps_value(self) -> float:
        return default_eps(self.dt) if self.eps is None else self.eps


def inverse_local_time(l: Path, u: float) -> float | None:
    """First grid time with local time > u, or None if never exceeded."""
    if u < 0:
        raise ValueError("u must be >= 0")
    hits = np.nonzero(l.values > u)[0]
    if len(hits) == 0:
        return None
    return float(hits[0] * l.grid.dt)


@dataclass
class _PathOutcome:
    ell_before: float  # local time just before the first exceedance (inf if none)
    resolved: bool
    t_exceed: float = math.nan
    abs_b: float = math.nan
    local_time: float = math.nan


def _stream_one(
    path_index: int,
    master_seed: int,
    dt: float,
    eps: float,
    threshold: Callable[[np.ndarray], np.ndarray],
    u_run: float,
    block_steps: int,
    t_cap: float,
) -> _PathOutcome:
    """Follow one path until |B| exceeds threshold(L_hat) or L_hat > u_run."""
    rng = SeedSpec(master_seed, path_index).generator(DOMAIN_PATH)
    sq = math.sqrt(dt)
    b_prev = 0.0
    l_prev = 0.0
    base = 0
    max_steps = int(t_cap / dt)
    while base < max_steps:
        nb = min(block_steps, max_steps - base)
        v = b_prev + np.cumsum(rng.standard_normal(nb) * sq)
        lefts = np.empty(nb)
        lefts[0] = b_prev
        lefts[1:] = v[:-1]
        linc = (dt / (2.0 * eps)) * (np.abs(lefts) <= eps)
        lv = l_prev + np.cumsum(linc)
        exceed = np.abs(v) > threshold(lv)
        kex = int(np.argmax(exceed)) if exceed.any() else -1
        if kex >= 0:
            ell_before = lv[kex] - linc[kex]
            if ell_before <= u_run:
                return _PathOutcome(
                    ell_before=float(ell_before),
                    resolved=True,
                    t_exceed=(base + kex + 1) * dt,
                    abs_b=float(abs(v[kex])),
                    local_time=float(lv[kex]),
                )
            return _PathOutcome(ell_before=math.inf, resolved=True)
        if lv[-1] > u_run:
            return _PathOutcome(ell_before=math.inf, resolved=True)
        b_prev = float(v[-1])
        l_prev = float(lv[-1])
        base += nb
    return _PathOutcome(ell_before=math.inf, resolved=False)


def stream_exceedance_outcomes(
    phi: PhiSpec,
    config: StreamConfig,
    u_run: float,
    scale: float = 1.0,
) -> list[_PathOutcome]:
    """Per-path streamed outcomes for the event |B_t| > scale * phi(L_t)."""
    eps = config.eps_value

    def threshold(lv: np.ndarray) -> np.ndarray:
        return scale * phi(lv)

    return [
        _stream_one(i, config.master_seed, config.dt, eps, threshold, u_run,
                    config.block_steps, config.t_cap)
        for i in range(config.n_paths)
    ]


def exceedance_probability(
    phi: PhiSpec,
    us: Sequence[float],
    config: StreamConfig,
    allowance: float = 0.02,
    u_run_cap: float | None = None,
    outcomes: list[_PathOutcome] | None = None,
) -> list[EstimateReport]:
    """Empirical P(exists t <= tau_u with |B_t| > phi(L_t)) vs its closed form.

    All requested levels u are evaluated on the same streamed ensemble,
    so the empirical probabilities are monotone in u by construction.
    Paths are stopped at the first exceedance or once the local time
    passes max(us) (or the explicit u_run_cap, for phi whose reciprocal
    integral converges); unresolved paths beyond the time budget are
    counted as non-events and flagged when they exceed 1%.
    """
    us = sorted(float(u) for u in us)
    if not us or us[0] <= 0:
        raise ValueError("levels u must be positive")
    u_run = max(us) if u_run_cap is None else min(u_run_cap, max(us))
    if outcomes is None:
        outcomes = stream_exceedance_outcomes(phi, config, u_run)
    ell = np.array([o.ell_before for o in outcomes])
    unresolved = float(np.mean([not o.resolved for o in outcomes]))
    reports = []
    for u in us:
        emp = float(np.mean(ell <= min(u, u_run)))
        stderr = math.sqrt(max(emp * (1 - emp), 1e-12) / config.n_paths)
        reports.append(
            EstimateReport(
                theorem="exceedance-law",
                phi_name=phi.name,
                u=u,
                n_paths=config.n_paths,
                dt=config.dt,
                empirical=emp,
                closed_form=phi.exceedance_closed_form(u),
                stderr=stderr,
                allowance=allowance,
                unresolved_fraction=unresolved,
                flagged=unresolved > 0.01,
            )
        )
    return reports


@dataclass
class StoppingLawReport:
    """Boundary identity at the first time phi(L)|B| exceeds 1."""

    n_paths: int
    n_reached: int
    boundary_ok_fraction: float
    boundary_tolerance: float
    max_overshoot: float
    dt: float
    flagged: bool

    @property
    def passed(self) -> bool:
        return self.n_reached > 0 and self.boundary_ok_fraction >= 0.99


def threshold_stopping_law(
    phi: PhiSpec,
    config: StreamConfig,
    outcomes: list[_PathOutcome] | None = None,
) -> StoppingLawReport:
    """Check |B| * phi(L_hat) lands in [1, 1 + 3 sqrt(dt)] at the stopping time.

    The stopping time is streamed with horizon auto-extension; when the
    reciprocal integral of phi diverges it is a.s. finite and should be
    reached on every path within the budget.
    """
    if outcomes is None:
        u_run = math.inf if phi.diverges else 50.0
        outcomes = stream_exceedance_outcomes(PhiSpec(
            name=f"level[1/{phi.name}]",
            fn=lambda x: 1.0 / phi(x),
            diverges=phi.diverges,
        ), config, u_run)
    tol = 3.0 * math.sqrt(config.dt)
    vals = []
    for o in outcomes:
        if o.resolved and math.isfinite(o.ell_before) and not math.isnan(o.abs_b):
            vals.append(o.abs_b * float(phi(np.asarray([o.local_time]))[0]))
    vals_arr = np.array(vals)
    ok = float(np.mean((vals_arr >= 1.0) & (vals_arr <= 1.0 + tol))) if len(vals_arr) else 0.0
    return StoppingLawReport(
        n_paths=len(outcomes),
        n_reached=len(vals_arr),
        boundary_ok_fraction=ok,
        boundary_tolerance=tol,
        max_overshoot=float(np.max(vals_arr) - 1.0) if len(vals_arr) else math.nan,
        dt=config.dt,
        flagged=len(vals_arr) < len(outcomes),
    )


def t_phi_stopping(phi: PhiSpec, b: Path, eps: float | None = None) -> tuple[float | None, float | None]:
    """First grid time with phi(L_hat) * |B| > 1 on a fixed path.

    Returns (time, boundary residual |B|*phi(L_hat) - 1) or (None, None)
    when the product never exceeds 1 on the path's horizon.
    """
    eps = default_eps(b.grid.dt) if eps is None else eps
    lhat = occupation_local_time(b, eps)
    product = phi(lhat.values) * np.abs(b.values)
    hits = np.nonzero(product > 1.0)[0]
    if len(hits) == 0:
        return None, None
    k = int(hits[0])
    return k * b.grid.dt, float(product[k] - 1.0)


def azema_submartingale(b: Path, horizon: float | None = None) -> Path:
    """Conditional probability that the last zero before the horizon has passed.

    Closed form by reflection: 2*Phi(|B_t| / sqrt(T - t)) - 1 for t < T,
    extended by its limit at t = T (1 off zero, 0 on it).  Exactly 0
    wherever B is exactly 0.
    """
    T = b.grid.horizon if horizon is None else horizon
    t = b.times()
    if T > b.grid.horizon + 1e-12:
        raise ValueError("horizon beyond the path's grid")
    vals = np.empty_like(b.values)
    before = t < T - 1e-15
    with np.errstate(divide="ignore"):
        ratio = np.abs(b.values[before]) / np.sqrt(T - t[before])
    vals[before] = 2.0 * ndtr(ratio) - 1.0
    vals[~before] = np.where(np.abs(b.values[~before]) > 0.0, 1.0, 0.0)
    return Path(b.grid, vals)


@dataclass
class RepresentationReport:
    """Nested-MC check of recovering the process from its terminal value."""

    median_deviation: float
    deviations: np.ndarray = field(repr=False)
    starved_fraction: float = 0.0
    n_outer: int = 0
    n_inner: int = 0
    t_star: float = 0.0

    @property
    def passed(self) -> bool:
        return self.median_deviation < 1.5 and self.starved_fraction == 0.0


def representation_check(
    x_spec: str,
    grid: TimeGrid,
    master_seed: int,
    n_outer: int,
    n_inner: int = 1000,
    t_star: float = 0.5,
) -> RepresentationReport:
    """Compare X_(t*) against the nested estimate of E[X_inf 1(gamma < t*) | F_(t*)].

    Inner paths continue the driving Brownian path from (t*, B_(t*)) to
    the horizon with a stream derived from (master_seed, outer index);
    the indicator is 'no zero of B in ]t*, T]' and X_inf is re-evaluated
    on each continuation.  Deviations are reported in units of the inner
    standard error.
    """
    if x_spec not in ("abs_brownian", "azema"):
        raise ValueError(f"unknown x-spec {x_spec!r}")
    k_star = grid.index_at(t_star)
    n_rest = grid.n_steps - k_star
    sq = math.sqrt(grid.dt)
    deviations = np.empty(n_outer)
    starved = 0
    for i in range(n_outer):
        b = brownian_path(grid, SeedSpec(master_seed, i))
        b_star = b.values[k_star]
        if x_spec == "abs_brownian":
            x_at = abs(b_star)
        else:
            x_at = float(azema_submartingale(b).values[k_star])
        inner_rng = SeedSpec(master_seed, i).generator(DOMAIN_INNER)
        inc = inner_rng.standard_normal((n_inner, n_rest)) * sq
        cont = b_star + np.cumsum(inc, axis=1)
        full = np.concatenate((np.full((n_inner, 1), b_star), cont), axis=1)
        crossed = np.any((full[:, :-1] * full[:, 1:] < 0) | (full[:, 1:] == 0.0), axis=1)
        indicator = ~crossed
        x_inf = np.abs(cont[:, -1]) if x_spec == "abs_brownian" else np.ones(n_inner)
        sample = x_inf * indicator
        est = float(np.mean(sample))
        se = float(np.std(sample, ddof=1)) / math.sqrt(n_inner)
        if se == 0.0:
            starved += 1
            deviations[i] = 0.0 if x_at == est else math.inf
        else:
            deviations[i] = abs(x_at - est) / se
    return RepresentationReport(
        median_deviation=float(np.median(deviations)),
        deviations=deviations,
        starved_fraction=starved / n_outer,
        n_outer=n_outer,
        n_inner=n_inner,
        t_star=t_star,
    )


@dataclass
class ProductMartingaleReport:
    """Score of R * |X| with the orthogonality precondition checked first."""

    cross_variation_ratio: float
    cv_tol: float
    precondition_ok: bool
    martingale: MartingaleTestResult
    verdict: bool | None  # None when the precondition failed (score still reported)


def product_martingale_check(
    grid: TimeGrid,
    master_seed: int,
    n_paths: int,
    x_mode: str = "flipped",
    s: float = 0.5,
    t: float = 0.9,
    cv_tol: float = 0.05,
) -> ProductMartingaleReport:
    """Martingale test of the product of the last-zero submartingale with |X|.

    The hypothesis requires vanishing cross-variation between |X| and R;
    it is measured (normalized pathwise) and when it fails the verdict
    is withheld while the score is still reported.
    """
    if x_mode not in ("abs_brownian", "flipped", "zero"):
        raise ValueError(f"unknown x_mode {x_mode!r}")
    ks, kt = grid.index_at(s), grid.index_at(t)
    incr = np.empty(n_paths)
    probe_r = np.empty(n_paths)
    probe_b = np.empty(n_paths)
    cv_ratios = np.empty(n_paths)
    for i in range(n_paths):
        b = brownian_path(grid, SeedSpec(master_seed, i))
        r = azema_submartingale(b)
        if x_mode == "zero":
            abs_x = Path(grid, np.zeros(grid.n_points))
        else:
            abs_x = Path(grid, np.abs(b.values))
            if x_mode == "flipped":
                # flips leave |X| = |B|; they only matter for the signed path
                pass
        cv = cross_variation(abs_x, r)
        qx = float(np.sum(np.diff(abs_x.values[: kt + 1]) ** 2))
        qr = float(np.sum(np.diff(r.values[: kt + 1]) ** 2))
        denom = math.sqrt(qx * qr)
        cv_ratios[i] = abs(cv.values[kt]) / denom if denom > 0 else 0.0
        product = r.values * abs_x.values
        incr[i] = product[kt] - product[ks]
        probe_r[i] = r.values[ks]
        probe_b[i] = abs(b.values[ks])
    ratio = float(np.mean(cv_ratios))
    ok = ratio <= cv_tol
    probes = {"const": np.ones(n_paths), "r_level": probe_r, "abs_b": probe_b}
    mart = martingale_score(incr, probes, s, t)
    return ProductMartingaleReport(
        cross_variation_ratio=ratio,
        cv_tol=cv_tol,
        precondition_ok=ok,
        martingale=mart,
        verdict=mart.passed if ok else None,
    )


def arcsine_cdf(t: np.ndarray | float) -> np.ndarray | float:
    """P(last zero before 1 <= t) = (2/pi) arcsin(sqrt(t))."""
    return (2.0 / math.pi) * np.arcsin(np.sqrt(np.clip(t, 0.0, 1.0)))


@dataclass
class LawReport:
    """Distributional comparison via the Kolmogorov-Smirnov distance."""

    mode: str
    ks_distance: float
    n_paths: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ks_distance < self.threshold


def _last_zero_value(b: Path) -> float:
    mask = zero_mask(b, 0.0)
    return float(np.nonzero(mask)[0].max() * b.grid.dt)


def honest_time_law(
    grid: TimeGrid,
    master_seed: int,
    n_paths: int,
    mode: str = "arcsine",
    threshold: float = 0.02,
) -> LawReport:
    """Law of the last zero before the horizon.

    mode 'identity' compares the last zero against itself (distance 0),
    'flipped' against the last zero of the fair-flipped path (pathwise
    equal zero sets, distance 0), 'arcsine' against the closed-form CDF.
    """
    if mode not in ("identity", "flipped", "arcsine"):
        raise ValueError(f"unknown mode {mode!r}")
    gammas = np.empty(n_paths)
    others = np.empty(n_paths)
    for i in range(n_paths):
        b = brownian_path(grid, SeedSpec(master_seed, i))
        gammas[i] = _last_zero_value(b)
        if mode == "identity":
            others[i] = gammas[i]
        elif mode == "flipped":
            exc = decompose_excursions(b, 0.0)
            z = flip_signs(exc, 0.5, SeedSpec(master_seed, i))
            others[i] = _last_zero_value(Path(grid, z.values * b.values))
    if mode == "arcsine":
        ks = float(stats.ks_1samp(gammas, arcsine_cdf).statistic)
    else:
        ks = float(stats.ks_2samp(gammas, others).statistic)
    return LawReport(mode=mode, ks_distance=ks, n_paths=n_paths, threshold=threshold)
