"""Region and threshold computations over (hardware-noise, channel) grids.

The channel parameter ("chi") is the BSC crossover probability or the AWGN
noise variance; both degrade the channel as they increase.  A grid point is
classified *useful* when density evolution converges to a limit below the
input error probability; non-convergent points (periodic or maxed-out traces)
have no limit.  Threshold searches scan an ascending grid and refine the
bracket by bisection.

Grid points are embarrassingly parallel; :func:`region_scan` optionally uses a
process pool and always returns results in grid order.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import Bsc, BiAwgn, input_error_prob, prior_pmf
from .density_evolution import DEConfig, DETrace, de_lower_bound, de_run
from .noisy_arith import NoiseParams

__all__ = [
    "RegionPoint",
    "ThresholdResult",
    "LipschitzEstimate",
    "classify_point",
    "region_scan",
    "eta_threshold",
    "classical_threshold",
    "lipschitz_estimate",
    "functional_threshold",
]


@dataclass(frozen=True)
class RegionPoint:
    """Classification of one (hardware-noise, channel-parameter) grid point."""

    noise: NoiseParams
    chi: float
    classification: str  # useful | not-useful | non-convergent
    pe_limit: float | None
    pe_input: float
    lower_bound: float
    trace_kind: str
    period: int | None = None


@dataclass
class LipschitzEstimate:
    """Local slope estimate with a divergence flag (see lipschitz_estimate)."""

    value: float
    infinite: bool
    scale_profile: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class ThresholdResult:
    """Outcome of a threshold search.

    `value` is the largest channel parameter accepted; `bracket` is the final
    (pass, fail) interval, empty when nothing passed.  For functional
    thresholds `admissible` records whether the transition is a genuine
    discontinuity (flagged-infinite local Lipschitz estimate).
    """

    kind: str
    value: float
    bracket: tuple[float, float] | tuple[()]
    samples: list[tuple[float, float | None, str]] = field(default_factory=list)
    lipschitz_profile: list[tuple[float, float]] = field(default_factory=list)
    admissible: bool | None = None


def _at_chi(base: DEConfig, chi: float) -> DEConfig:
    if isinstance(base.channel, Bsc):
        return dataclasses.replace(base, channel=Bsc(chi))
    if isinstance(base.channel, BiAwgn):
        return dataclasses.replace(base, channel=BiAwgn(chi))
    raise TypeError(f"unsupported channel {base.channel!r}")


def _run_at(base: DEConfig, noise: NoiseParams, chi: float) -> DETrace:
    cfg = dataclasses.replace(_at_chi(base, chi), noise=noise)
    return de_run(cfg)


def classify_point(noise: NoiseParams, chi: float, base: DEConfig) -> RegionPoint:
    """Run density evolution at one grid point and classify it."""
    cfg = dataclasses.replace(_at_chi(base, chi), noise=noise)
    trace = de_run(cfg)
    pe0 = input_error_prob(prior_pmf(cfg.channel, cfg.quant))
    if trace.kind == "converged":
        cls = "useful" if trace.pe_limit < pe0 else "not-useful"
    else:
        cls = "non-convergent"
    return RegionPoint(
        noise=noise,
        chi=chi,
        classification=cls,
        pe_limit=trace.pe_limit,
        pe_input=pe0,
        lower_bound=de_lower_bound(noise, cfg.app_max),
        trace_kind=trace.kind,
        period=trace.period,
    )


def _classify_star(args) -> RegionPoint:
    noise, chi, base = args
    return classify_point(noise, chi, base)


def region_scan(
    noise_grid,
    chi_grid,
    base: DEConfig,
    jobs: int = 1,
) -> list[RegionPoint]:
    """Classify the full product grid, in (noise, chi) order."""
    tasks = [(noise, float(chi), base) for noise in noise_grid for chi in chi_grid]
    if jobs <= 1:
        return [_classify_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_classify_star, tasks, chunksize=4))


def _bisect(passes, lo: float, hi: float, resolution: float) -> tuple[float, float]:
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def eta_threshold(
    eta: float,
    noise: NoiseParams,
    base: DEConfig,
    grid,
    resolution: float = 1e-4,
) -> ThresholdResult:
    """Largest channel parameter whose whole prefix stays below target `eta`.

    Scans the ascending grid, requiring a convergent limit below `eta` at
    every point (the scan stops at the first failure, which enforces the
    for-all-smaller-parameters clause on the grid), then refines the
    bracketing cell by bisection.  Returns value 0 with an empty bracket when
    even the first grid point fails.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must be in (0, 1)")
    return _predicate_threshold(
        "eta",
        lambda tr: tr.kind == "converged" and tr.pe_limit < eta,
        noise,
        base,
        grid,
        resolution,
    )


def classical_threshold(
    noise: NoiseParams,
    base: DEConfig,
    grid,
    resolution: float = 1e-4,
) -> ThresholdResult:
    """Largest channel parameter below which the error probability reaches zero."""
    return _predicate_threshold(
        "classical",
        lambda tr: tr.kind == "converged" and tr.pe_limit == 0.0,
        noise,
        base,
        grid,
        resolution,
    )


def _predicate_threshold(kind, ok, noise, base, grid, resolution) -> ThresholdResult:
    samples: list[tuple[float, float | None, str]] = []
    last_pass = None
    first_fail = None
    for chi in grid:
        chi = float(chi)
        tr = _run_at(base, noise, chi)
        samples.append((chi, tr.pe_limit, tr.kind))
        if ok(tr):
            last_pass = chi
        else:
            first_fail = chi
            break
    if last_pass is None:
        return ThresholdResult(kind, 0.0, (), samples)
    if first_fail is None:
        return ThresholdResult(kind, last_pass, (last_pass, last_pass), samples)

    def passes(chi: float) -> bool:
        tr = _run_at(base, noise, chi)
        samples.append((chi, tr.pe_limit, tr.kind))
        return ok(tr)

    lo, hi = _bisect(passes, last_pass, first_fail, resolution)
    return ThresholdResult(kind, lo, (lo, hi), samples)


def lipschitz_estimate(
    chis,
    pes,
    at: float,
    cap: float = 1e6,
    divergence_exponent: float = -0.5,
) -> LipschitzEstimate:
    """Local Lipschitz estimate of a sampled curve at `at`.

    Divided differences of sample pairs straddling or adjacent to `at` are
    bucketed by pair-separation octave; the finest-scale maximum slope is the
    estimate.  Across a jump the slope scales like 1/separation, so the
    estimate is flagged infinite when the fitted scaling exponent of slope vs
    separation is at most `divergence_exponent` (or when the value exceeds
    `cap`).  A Lipschitz-continuous curve has exponent near 0.
    """
    x = np.asarray(chis, dtype=float)
    y = np.asarray(pes, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("chis and pes must be equal-length 1-d sequences")
    if len(x) < 3:
        raise ValueError("need at least 3 samples around the evaluation point")
    order = np.argsort(x)
    x, y = x[order], y[order]

    seps, slopes = [], []
    n = len(x)
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = x[j] - x[i]
            if dx <= 0.0:
                continue
            # only pairs whose interval is local to the evaluation point
            if x[i] - dx > at or x[j] + dx < at:
                continue
            seps.append(dx)
            slopes.append(abs(y[j] - y[i]) / dx)
    if not seps:
        raise ValueError("no usable sample pairs around the evaluation point")
    seps = np.asarray(seps)
    slopes = np.asarray(slopes)

    h_min = float(seps.min())
    n_scales = max(1, int(math.floor(math.log2(float(seps.max()) / h_min))) + 1)
    profile: list[tuple[float, float]] = []
    for k in range(n_scales - 1, -1, -1):  # coarse to fine
        lo = h_min * 2**k
        sel = (seps >= lo / math.sqrt(2.0)) & (seps < lo * math.sqrt(2.0))
        if np.any(sel):
            profile.append((lo, float(slopes[sel].max())))
    value = profile[-1][1]
    infinite = value > cap
    pos = [(h, s) for h, s in profile if s > 0.0]
    if len(pos) >= 3:
        lh = np.log([h for h, _ in pos])
        ls = np.log([s for _, s in pos])
        exponent = float(np.polyfit(lh, ls, 1)[0])
        if exponent <= divergence_exponent:
            infinite = True
    return LipschitzEstimate(value, infinite, profile)


def functional_threshold(
    noise: NoiseParams,
    base: DEConfig,
    grid,
    resolution: float = 1e-4,
    jump_ratio: float = 10.0,
    slope_floor: float = 1e-6,
) -> ThresholdResult:
    """Channel parameter of the sharp low-to-high error transition.

    Scans the ascending grid while the limit exists (traces converge); locates
    the first jump where the limit grows by `jump_ratio` between neighboring
    grid points (a loss of convergence also ends the scan) and refines it by
    bisection on closeness-in-log to the two branch levels.  The local
    Lipschitz estimate at the threshold decides admissibility: a
    flagged-infinite estimate means a genuine discontinuity.  If the local
    slope profile starts decreasing (beyond 1% relative, above `slope_floor`)
    before any jump, the transition is smooth and that point is returned with
    admissible=False.
    """
    samples: list[tuple[float, float | None, str]] = []
    curve: list[tuple[float, float]] = []
    jump = None  # (lo_chi, lo_pe, hi_chi, hi_pe)
    end_kind = None
    for chi in grid:
        chi = float(chi)
        tr = _run_at(base, noise, chi)
        samples.append((chi, tr.pe_limit, tr.kind))
        if tr.kind != "converged":
            end_kind = tr.kind
            break
        if curve:
            prev_chi, prev_pe = curve[-1]
            if tr.pe_limit > jump_ratio * max(prev_pe, 1e-30) and tr.pe_limit - prev_pe > 1e-9:
                jump = (prev_chi, prev_pe, chi, tr.pe_limit)
                curve.append((chi, tr.pe_limit))
                break
        curve.append((chi, tr.pe_limit))

    if not curve:
        return ThresholdResult("functional", 0.0, (), samples)

    # condition (c): the local slope along the prefix must not decrease
    slopes = []
    for (x0, y0), (x1, y1) in zip(curve, curve[1:]):
        slopes.append((x1, abs(y1 - y0) / (x1 - x0)))
    for (c0, l0), (c1, l1) in zip(slopes, slopes[1:]):
        if c1 >= (jump[0] if jump else math.inf):
            break
        if l0 > slope_floor and l1 < l0 * 0.99 and l1 < l0 - slope_floor:
            return ThresholdResult(
                "functional", c0, (c0, c1), samples, slopes, admissible=False
            )

    if jump is None:
        # scan ended by non-convergence (or grid exhaustion): condition (a) boundary
        last_chi = curve[-1][0]
        if end_kind is None:
            return ThresholdResult("functional", last_chi, (last_chi, last_chi), samples, slopes)
        lo, lo_pe = curve[-1]
        hi = samples[-1][0]

        def converges(chi: float) -> bool:
            tr = _run_at(base, noise, chi)
            samples.append((chi, tr.pe_limit, tr.kind))
            if tr.kind == "converged":
                curve.append((chi, tr.pe_limit))
                return True
            return False

        lo, hi = _bisect(converges, lo, hi, resolution)
        return ThresholdResult("functional", lo, (lo, hi), samples, slopes, admissible=None)

    lo, lo_pe, hi, hi_pe = jump
    split = math.sqrt(max(lo_pe, 1e-300) * hi_pe)

    def low_side(chi: float) -> bool:
        tr = _run_at(base, noise, chi)
        samples.append((chi, tr.pe_limit, tr.kind))
        if tr.kind != "converged":
            return False
        curve.append((chi, tr.pe_limit))
        return tr.pe_limit < split

    lo, hi = _bisect(low_side, lo, hi, resolution)

    curve_sorted = sorted(curve)
    near = [(c, p) for c, p in curve_sorted if abs(c - lo) <= 64 * resolution]
    est = None
    if len(near) >= 3:
        est = lipschitz_estimate([c for c, _ in near], [p for _, p in near], at=lo)
    admissible = bool(est.infinite) if est is not None else None
    profile = slopes + ([(lo, est.value)] if est is not None else [])
    return ThresholdResult("functional", lo, (lo, hi), samples, profile, admissible)
