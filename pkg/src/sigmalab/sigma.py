"""Verifiers for zero-set-carried semimartingale structure.

The statistical backbone is an orthogonality test on ensemble
increments: a (local) martingale's increments over [s, t] cannot be
predicted by anything known at s, so for each probe functional we form
the cross moment of increments with the probe value at s and score it
with a t-statistic.  Pathwise identities (sign flips, compensators,
multiplicative reconstructions) are checked exactly or by residual
norms under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .calculus import (
    default_band,
    default_eps,
    ito_integral,
    occupation_local_time,
)
from .excursions import (
    ExcursionSet,
    SignProcess,
    decompose_excursions,
    flip_signs,
    last_zero_indices,
    left_fill_signs,
    right_sign_process,
    zero_mask,
)
from .functionals import FunctionSpec, PredictableFunctional
from .grids import DecomposedPath, Path, SeedSpec, TimeGrid
from .reporting import IdentityReport, residual_norms

__all__ = [
    "MartingaleTestResult",
    "martingale_score",
    "martingale_test",
    "SigmaVerdict",
    "check_sigma",
    "ZTransformResult",
    "z_transform",
    "AbsoluteMatchReport",
    "check_absolute_martingale",
    "MultiplicativeProcess",
    "multiplicative_representation",
    "CompensatorReport",
    "check_compensator",
    "FTransformReport",
    "f_transform",
    "CoincidenceVerdict",
    "check_zero_set_coincidence",
]

MARTINGALE_SCORE_THRESHOLD = 4.0
MIN_ENSEMBLE = 1000


@dataclass
class MartingaleTestResult:
    """Max |t-statistic| of increment-vs-probe cross moments."""

    score: float
    per_probe: dict[str, float]
    n_paths: int
    s: float
    t: float
    threshold: float = MARTINGALE_SCORE_THRESHOLD
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        return self.score < self.threshold


def martingale_score(
    increments: np.ndarray,
    probes: Mapping[str, np.ndarray],
    s: float,
    t: float,
    threshold: float = MARTINGALE_SCORE_THRESHOLD,
) -> MartingaleTestResult:
    """Score E[(N_t - N_s) * probe_s] = 0 for each probe via a t-statistic.

    A degenerate probe product (zero variance) scores 0 when its mean is
    exactly 0 (the identically-zero process passes trivially) and inf
    otherwise; either way the result is flagged.
    """
    n = len(increments)
    if n < 8:
        raise ValueError(f"need at least 8 paths for a t-statistic, got {n}")
    per: dict[str, float] = {}
    degenerate = False
    for name, pvals in probes.items():
        g = increments * np.asarray(pvals, dtype=float)
        mean = float(np.mean(g))
        std = float(np.std(g, ddof=1))
        if std == 0.0:
            degenerate = True
            per[name] = 0.0 if mean == 0.0 else math.inf
        else:
            per[name] = mean / (std / math.sqrt(n))
    score = max(abs(v) for v in per.values())
    return MartingaleTestResult(
        score=score, per_probe=per, n_paths=n, s=s, t=t,
        threshold=threshold, degenerate=degenerate,
    )


def martingale_test(
    ensemble: Sequence[Path],
    s: float,
    t: float,
    probes: Mapping[str, Callable[[Path], float]] | None = None,
    threshold: float = MARTINGALE_SCORE_THRESHOLD,
    min_paths: int = MIN_ENSEMBLE,
) -> MartingaleTestResult:
    """Statistical martingale certification of an ensemble of paths.

    Probes are past-measurable functionals evaluated at s; defaults are
    the constant 1 and the path level N_s.
    """
    if len(ensemble) < min_paths:
        raise ValueError(f"martingale test needs >= {min_paths} paths, got {len(ensemble)}")
    grid = ensemble[0].grid
    ks, kt = grid.index_at(s), grid.index_at(t)
    if not ks < kt:
        raise ValueError(f"need s < t on the grid, got {s} >= {t}")
    if probes is None:
        probes = {"const": lambda p: 1.0, "level": lambda p: float(p.values[grid.index_at(s)])}
    incr = np.array([p.values[kt] - p.values[ks] for p in ensemble])
    pvals = {name: np.array([fn(p) for p in ensemble]) for name, fn in probes.items()}
    return martingale_score(incr, pvals, s, t, threshold)


@dataclass
class SigmaVerdict:
    """Does dV charge only the zero band, and is the m-part a martingale?"""

    carried_ratio: float
    martingale_score: float
    passed: bool
    band: float
    tol: float
    n_paths: int
    martingale: MartingaleTestResult | None = None
    martingale_skipped: bool = False


def check_sigma(
    paths: DecomposedPath | Sequence[DecomposedPath],
    band: float | None = None,
    tol: float = 0.05,
    s: float | None = None,
    t: float | None = None,
    min_paths: int = MIN_ENSEMBLE,
) -> SigmaVerdict:
    """Verdict on the zero-set-carried property of declared decompositions.

    carried_ratio is the fraction of |dV| mass falling outside the zero
    band (0/0 counts as 0), aggregated over the ensemble.  With enough
    paths the m-parts are also run through the martingale test; with a
    single path that half is skipped and the verdict rests on the ratio.
    """
    xs = [paths] if isinstance(paths, DecomposedPath) else list(paths)
    grid = xs[0].grid
    band = default_band(grid.dt) if band is None else band
    off_mass = 0.0
    total_mass = 0.0
    for dec in xs:
        dv = np.abs(np.diff(dec.v.values))
        off = np.abs(dec.x.values[:-1]) > band
        off_mass += float(np.sum(dv[off]))
        total_mass += float(np.sum(dv))
    carried_ratio = 0.0 if total_mass == 0.0 else off_mass / total_mass

    mart: MartingaleTestResult | None = None
    skipped = True
    if len(xs) >= min_paths:
        s = grid.horizon / 2 if s is None else s
        t = grid.horizon if t is None else t
        mart = martingale_test([dec.m for dec in xs], s, t, min_paths=min_paths)
        skipped = False
    passed = carried_ratio <= tol and (skipped or mart.passed)
    return SigmaVerdict(
        carried_ratio=carried_ratio,
        martingale_score=mart.score if mart else math.nan,
        passed=passed,
        band=band,
        tol=tol,
        n_paths=len(xs),
        martingale=mart,
        martingale_skipped=skipped,
    )


def _auto_band(values: np.ndarray, dt: float) -> float:
    # signed paths advertise zeros through crossings, and constructed
    # processes carry exact zeros; only one-signed sampled paths
    # (|B|-like, at most the initial exact zero) need a proximity band
    both_signs = (values.min() < 0.0) and (values.max() > 0.0)
    if both_signs or np.count_nonzero(values == 0.0) > 1:
        return 0.0
    return default_band(dt)


@dataclass
class ZTransformResult:
    """Excursion-flipped process with its declared (approximate) split."""

    path: Path
    m_part: Path
    v_part: Path
    signs: SignProcess
    report: IdentityReport


def z_transform(
    x: DecomposedPath,
    p_plus: float,
    seed: SeedSpec,
    exc: ExcursionSet | None = None,
    eps: float | None = None,
    band: float | None = None,
    local_time: Path | None = None,
) -> ZTransformResult:
    """Flip each excursion of x by an independent sign (+1 w.p. p_plus).

    Returns the flipped path with the declared split: stochastic part
    int Z dM (left-point, with the predictable left-fill of Z) plus
    compensator (2*p_plus - 1) * L_hat of the flipped path.  The report
    carries the residual of that identity; it vanishes at t=0 exactly
    and its ensemble median shrinks under grid refinement.

    ``exc`` overrides the excursion structure (e.g. when x = |b| and the
    signed source b gives sharper zero detection); ``local_time``
    overrides the occupation estimate of the flipped path's local time.
    """
    grid = x.grid
    if exc is None:
        band = _auto_band(x.x.values, grid.dt) if band is None else band
        exc = decompose_excursions(x.x, band)
    signs = flip_signs(exc, p_plus, seed)
    y = signs.values * x.x.values
    m_part = ito_integral(left_fill_signs(signs.values), x.m)
    if local_time is None:
        eps = default_eps(grid.dt) if eps is None else eps
        local_time = occupation_local_time(Path(grid, y), eps).path
    v_part = Path(grid, (2.0 * p_plus - 1.0) * local_time.values)
    residual = y - m_part.values - v_part.values
    sup, l2 = residual_norms(residual, grid.dt)
    report = IdentityReport(
        identity_name="excursion-flip-decomposition",
        grid=grid,
        sup_residual=sup,
        l2_residual=l2,
        components={"flipped": Path(grid, y), "stochastic_part": m_part, "compensator": v_part},
        extra={"p_plus": p_plus, "residual_at_0": float(abs(residual[0]))},
    )
    return ZTransformResult(Path(grid, y), m_part, v_part, signs, report)


@dataclass
class AbsoluteMatchReport:
    """|X| = |M| for the fair-flipped M, plus its martingale score."""

    max_abs_gap_off_band: float
    max_on_band_level: float
    max_reconstruction_gap: float
    martingale: MartingaleTestResult | None
    band: float
    n_paths: int

    @property
    def exact(self) -> bool:
        return self.max_abs_gap_off_band == 0.0

    @property
    def passed(self) -> bool:
        ok_mart = self.martingale is None or self.martingale.passed
        return self.exact and self.max_reconstruction_gap == 0.0 and ok_mart


def check_absolute_martingale(
    paths: Sequence[DecomposedPath],
    master_seed: int,
    s: float | None = None,
    t: float | None = None,
    band: float | None = None,
    min_paths: int = MIN_ENSEMBLE,
) -> AbsoluteMatchReport:
    """Build M = fair excursion flip of X and verify |X| = |M| plus
    the sign reconstruction X = K_g |M| (right-limit sign at last zero).

    Both identities are exact off the detected zero band; on it the
    flipped path vanishes by construction, so the band levels of |X| are
    reported instead.  The flipped ensemble is run through the
    martingale test when large enough.
    """
    grid = paths[0].grid
    gap = 0.0
    on_band = 0.0
    recon = 0.0
    flipped: list[Path] = []
    for i, dec in enumerate(paths):
        band_i = _auto_band(dec.x.values, grid.dt) if band is None else band
        exc = decompose_excursions(dec.x, band_i)
        z = flip_signs(exc, 0.5, SeedSpec(master_seed, i))
        mvals = z.values * dec.x.values
        mask = z.values == 0.0
        gap = max(gap, float(np.max(np.abs(np.abs(dec.x.values) - np.abs(mvals))[~mask], initial=0.0)))
        on_band = max(on_band, float(np.max(np.abs(dec.x.values)[mask], initial=0.0)))
        # X = K_{g} |M|: right-limit sign of X at the last zero
        k = right_sign_process(dec.x, exc)
        g_idx = last_zero_indices(zero_mask(dec.x, band_i))
        k_at_g = k.values[g_idx]
        recon = max(recon, float(np.max(np.abs(k_at_g * np.abs(mvals) - dec.x.values)[~mask], initial=0.0)))
        flipped.append(Path(grid, mvals))
    mart = None
    if len(flipped) >= min_paths:
        s = grid.horizon / 2 if s is None else s
        t = grid.horizon if t is None else t
        mart = martingale_test(flipped, s, t, min_paths=min_paths)
    return AbsoluteMatchReport(
        max_abs_gap_off_band=gap,
        max_on_band_level=on_band,
        max_reconstruction_gap=recon,
        martingale=mart,
        band=band if band is not None else math.nan,
        n_paths=len(paths),
    )


@dataclass
class MultiplicativeProcess:
    """A process vanishing on the zero set of its driving path.

    Built per excursion as sign * z_(last zero) * |b| * exp(W) with W the
    tapered exponential correction restarted at each excursion start.
    ``v_declared`` is the compensator int z dL_hat(b).
    """

    path: Path
    b: Path
    v_declared: Path
    local_time: Path
    z_at_gamma: np.ndarray = field(repr=False)
    exc: ExcursionSet = field(repr=False)
    taper_delta: float = 0.0

    @property
    def grid(self) -> TimeGrid:
        return self.path.grid

    def abs_path(self) -> Path:
        return Path(self.grid, np.abs(self.path.values))


def multiplicative_representation(
    z: PredictableFunctional,
    u: PredictableFunctional,
    b: Path,
    signs: SignProcess | None = None,
    taper_delta: float | None = None,
    eps: float | None = None,
    band: float = 0.0,
) -> MultiplicativeProcess:
    """Construct X = sign * z_(gamma) * |B| * exp(W) on each excursion of b.

    W accumulates u dB - u ds/B - u^2 ds / 2 from the excursion start,
    skipping the first grid step, and the taper |u| <= bound*min(1,|B|/delta)
    keeps the singular drift term bounded; evaluations violating it are
    rejected.  The output vanishes exactly on the detected zero set of b,
    and carries the declared compensator int z dL_hat(b).
    """
    grid = b.grid
    dt = grid.dt
    delta = 10.0 * math.sqrt(dt) if taper_delta is None else taper_delta
    eps = default_eps(dt) if eps is None else eps

    mask = zero_mask(b, band)
    exc = decompose_excursions(b, band)
    lhat = occupation_local_time(b, eps)
    aux = {"local_time": lhat.values}
    zvals = z(b, aux)
    if np.min(zvals) < -1e-12:
        raise ValueError("z must be a non-negative functional")
    uvals = u(b, aux)

    # taper check on integrand indices (strictly inside excursions)
    interior = ~mask
    interior[exc.first_inside] = False  # first step of each excursion is skipped
    bad = interior & (np.abs(uvals) * delta > u.bound * np.abs(b.values) * (1 + 1e-9))
    if np.any(bad):
        k = int(np.nonzero(bad)[0][0])
        raise ValueError(
            f"u/B unbounded beyond the taper threshold at index {k}: "
            f"|u|={abs(uvals[k]):.3g}, |B|={abs(b.values[k]):.3g}, delta={delta:.3g}"
        )

    db = np.diff(b.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        drift = np.where(b.values[:-1] != 0.0, dt / b.values[:-1], 0.0)
    w_inc = uvals[:-1] * (db - drift) - 0.5 * uvals[:-1] ** 2 * dt
    w_inc[mask[:-1]] = 0.0
    w_inc[exc.first_inside[exc.first_inside < grid.n_steps]] = 0.0
    prefix = np.concatenate(([0.0], np.cumsum(w_inc)))
    # restart the accumulated exponent at each excursion start
    reset_marks = np.full(grid.n_points, -1)
    reset_marks[exc.first_inside] = exc.first_inside
    reset_at = np.maximum.accumulate(reset_marks)
    inside = reset_at >= 0
    w = np.zeros(grid.n_points)
    w[inside] = prefix[inside] - prefix[reset_at[inside]]

    g_idx = last_zero_indices(mask) if mask[0] else None
    if g_idx is None:
        raise ValueError("driving path must start on its zero set")
    z_at_gamma = zvals[g_idx]
    sign_vals = signs.values if signs is not None else 1.0
    xvals = sign_vals * z_at_gamma * np.abs(b.values) * np.exp(w)
    xvals[mask] = 0.0

    v = ito_integral(zvals, lhat.path)
    return MultiplicativeProcess(
        path=Path(grid, xvals),
        b=b,
        v_declared=v,
        local_time=lhat.path,
        z_at_gamma=z_at_gamma,
        exc=exc,
        taper_delta=delta,
    )


@dataclass
class CompensatorReport:
    """Martingale scores for both compensator forms of a vanishing process."""

    integral_form: MartingaleTestResult
    frozen_form: MartingaleTestResult
    eps: float

    @property
    def passed(self) -> bool:
        return self.integral_form.passed and self.frozen_form.passed


def check_compensator(
    abs_paths: Sequence[Path],
    bs: Sequence[Path],
    z: PredictableFunctional,
    s: float | None = None,
    t: float | None = None,
    eps: float | None = None,
    min_paths: int = MIN_ENSEMBLE,
) -> CompensatorReport:
    """Test that |X| - int z dL_hat(B) and |X| - z_(gamma)|B| are martingales.

    X must vanish on the zero band of its driving path; both candidate
    compensations are formed pathwise and the resulting ensembles run
    through the increment-orthogonality test with probes 1, |B_s|, L_s.
    """
    if len(abs_paths) != len(bs):
        raise ValueError("need one driving path per process path")
    grid = abs_paths[0].grid
    eps = default_eps(grid.dt) if eps is None else eps
    s = grid.horizon / 2 if s is None else s
    t = grid.horizon if t is None else t
    ks, kt = grid.index_at(s), grid.index_at(t)

    incr_int = np.empty(len(abs_paths))
    incr_frz = np.empty(len(abs_paths))
    probe_b = np.empty(len(abs_paths))
    probe_l = np.empty(len(abs_paths))
    for i, (xp, b) in enumerate(zip(abs_paths, bs)):
        lhat = occupation_local_time(b, eps)
        aux = {"local_time": lhat.values}
        zvals = z(b, aux)
        comp = ito_integral(zvals, lhat.path)
        n_int = np.abs(xp.values) - comp.values
        g_idx = last_zero_indices(zero_mask(b, 0.0))
        n_frz = np.abs(xp.values) - zvals[g_idx] * np.abs(b.values)
        incr_int[i] = n_int[kt] - n_int[ks]
        incr_frz[i] = n_frz[kt] - n_frz[ks]
        probe_b[i] = abs(b.values[ks])
        probe_l[i] = lhat.values[ks]
    probes = {"const": np.ones(len(abs_paths)), "abs_b": probe_b, "local_time": probe_l}
    if len(abs_paths) < min_paths:
        raise ValueError(f"compensator check needs >= {min_paths} paths")
    return CompensatorReport(
        integral_form=martingale_score(incr_int, probes, s, t),
        frozen_form=martingale_score(incr_frz, probes, s, t),
        eps=eps,
    )


@dataclass
class FTransformReport:
    """f(L)-weighted transform with its martingale score and class-(D) bound."""

    martingale: MartingaleTestResult
    bound_holds: bool
    worst_margin: float
    bound_constant: float
    eps: float
    transformed_last: Path | None = None
    compensator_last: Path | None = None

    @property
    def passed(self) -> bool:
        return self.martingale.passed and self.bound_holds


def f_transform(
    abs_paths: Sequence[Path],
    bs: Sequence[Path],
    z: PredictableFunctional,
    f: FunctionSpec,
    s: float | None = None,
    t: float | None = None,
    eps: float | None = None,
    min_paths: int = MIN_ENSEMBLE,
) -> FTransformReport:
    """Weight |X| by f(running local time) and compensate with
    int z f(L_hat) dL_hat; scores the residual ensemble as a martingale.

    When f has compact support the pathwise dominated bound
    |N_t| <= lambda*K*C + C*|X_t| is asserted as well (lambda the z
    bound, C the f bound, K the support endpoint), up to the left-point
    overshoot of one local-time increment.
    """
    if len(abs_paths) != len(bs):
        raise ValueError("need one driving path per process path")
    grid = abs_paths[0].grid
    eps = default_eps(grid.dt) if eps is None else eps
    s = grid.horizon / 2 if s is None else s
    t = grid.horizon if t is None else t
    ks, kt = grid.index_at(s), grid.index_at(t)

    incr = np.empty(len(abs_paths))
    probe_b = np.empty(len(abs_paths))
    probe_l = np.empty(len(abs_paths))
    bound_holds = True
    worst = -math.inf
    bound_const = math.nan
    last_transformed = last_comp = None
    for i, (xp, b) in enumerate(zip(abs_paths, bs)):
        lhat = occupation_local_time(b, eps)
        aux = {"local_time": lhat.values}
        zvals = z(b, aux)
        fl = f(lhat.values)
        transformed = fl * np.abs(xp.values)
        fhat = ito_integral(zvals * fl, lhat.path)
        n = transformed - fhat.values
        incr[i] = n[kt] - n[ks]
        probe_b[i] = abs(b.values[ks])
        probe_l[i] = lhat.values[ks]
        if f.support is not None:
            lam, c, k_sup = z.bound, f.bound, f.support
            bound_const = lam * k_sup * c
            slack = lam * c * float(np.max(np.diff(lhat.values), initial=0.0))
            margin = bound_const + c * np.abs(xp.values) + slack - np.abs(n)
            worst = max(worst, -float(np.min(margin)))
            if np.min(margin) < 0:
                bound_holds = False
        if i == len(abs_paths) - 1:
            last_transformed = Path(grid, transformed)
            last_comp = fhat
    if len(abs_paths) < min_paths:
        raise ValueError(f"f-transform check needs >= {min_paths} paths")
    probes = {"const": np.ones(len(abs_paths)), "abs_b": probe_b, "local_time": probe_l}
    return FTransformReport(
        martingale=martingale_score(incr, probes, s, t),
        bound_holds=bound_holds,
        worst_margin=worst if worst != -math.inf else 0.0,
        bound_constant=bound_const,
        eps=eps,
        transformed_last=last_transformed,
        compensator_last=last_comp,
    )


@dataclass
class CoincidenceVerdict:
    """Do the zero sets of X and its driving path coincide?"""

    ratio: float
    tol: float
    n_points: int

    @property
    def passed(self) -> bool:
        return self.ratio < self.tol


def check_zero_set_coincidence(
    x: Path,
    b: Path,
    band: float | None = None,
    tol: float = 0.01,
) -> CoincidenceVerdict:
    """Fraction of grid indices where exactly one of x, b is at zero.

    Both paths are banded identically (default: the grid-scale band),
    so the statistic measures genuine zero-set disagreement rather than
    detection-convention differences.
    """
    if x.grid != b.grid:
        raise ValueError("paths must share a grid")
    band = default_band(x.grid.dt) if band is None else band
    mx = zero_mask(x, band)
    mb = zero_mask(b, band)
    ratio = float(np.mean(mx ^ mb))
    return CoincidenceVerdict(ratio=ratio, tol=tol, n_points=x.grid.n_points)
