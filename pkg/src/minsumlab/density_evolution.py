"""Exact density evolution for the noisy finite-precision Min-Sum decoder.

Tracks the probability mass functions of the exchanged messages of a regular
(dv, dc) ensemble through the decoding iterations, under the cycle-free and
all-(+1)-codeword assumptions.  Message PMFs live on the message alphabet
{-Q..+Q}; the a-posteriori PMF lives on the wider alphabet {-Qt..+Qt} of the
accumulator.  Arrays of length 2*bound+1 index value z at position z+bound.

The check-node update folds the comparator (min) and XOR noise into a pairwise
recursion on cumulative sums; the variable-node update alternates exact integer
convolution, tail saturation and adder error injection.  For the two bitwise
XOR adder models the injection step has closed forms which are exactly the
per-value transition probabilities of the bitwise model in any signed
representation; a generic transition-matrix path is provided as well and the
two must agree to machine precision.

Everything here is deterministic; independent configurations can run
concurrently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import QuantConfig, input_error_prob, prior_pmf
from .noisy_arith import Alphabet, ErrorInjector, InjectorModel, NoiseParams, SignedRepr

__all__ = [
    "DEConfig",
    "DETrace",
    "cn_update",
    "vn_update",
    "error_probability",
    "de_run",
    "de_lower_bound",
]


def _normalize(pmf: np.ndarray) -> np.ndarray:
    """Rescale away floating-point mass drift (the exact maps preserve mass).

    Without this, a one-ulp deficit is amplified multiplicatively by the
    polynomial updates and eventually collapses the state.
    """
    s = pmf.sum()
    if not 1.0 - 1e-6 < s < 1.0 + 1e-6:
        raise RuntimeError(f"PMF mass drifted to {s}; update is broken")
    return pmf / s


def _half_sums(x: np.ndarray, Q: int):
    """Cumulative sums with the half-mass-at-zero convention.

    Returns (pos_ge, neg_le, zero_pos, zero_neg) where, for magnitude k,
      pos_ge[k]  = sum of x over {+k..+Q}          (k = 1..Q, sentinel at Q+1)
      neg_le[k]  = sum of x over {-Q..-k}
      zero_pos[y] = x(0)/2 + sum over {+1..+y}     (y = 0..Q)
      zero_neg[y] = x(0)/2 + sum over {-y..-1}
    """
    pos = x[Q + 1 :]
    neg = x[:Q][::-1]
    pos_ge = np.zeros(Q + 2)
    neg_le = np.zeros(Q + 2)
    pos_ge[1 : Q + 1] = np.cumsum(pos[::-1])[::-1]
    neg_le[1 : Q + 1] = np.cumsum(neg[::-1])[::-1]
    zero_pos = np.zeros(Q + 1)
    zero_neg = np.zeros(Q + 1)
    zero_pos[0] = zero_neg[0] = 0.5 * x[Q]
    zero_pos[1:] = zero_pos[0] + np.cumsum(pos)
    zero_neg[1:] = zero_neg[0] + np.cumsum(neg)
    return pos_ge, neg_le, zero_pos, zero_neg


def _cn_pair(b: np.ndarray, a: np.ndarray, Q: int, p_comp: float, p_xor: float) -> np.ndarray:
    """PMF of one noisy sign-times-min step combining PMFs `b` and `a`."""
    b_ge, b_le, b_zp, b_zn = _half_sums(b, Q)
    a_ge, a_le, a_zp, a_zn = _half_sums(a, Q)

    m = slice(1, Q + 1)  # magnitudes 1..Q
    mm = slice(0, Q)  # magnitudes-1, for the half-mass prefixes

    # Pr(out >= +k) and Pr(out <= -k) with a noiseless sign chain: the
    # comparator flip selects the max instead of the min, which brings in the
    # mixed small/large cross terms.
    f_noflip = b_ge[m] * a_ge[m] + b_le[m] * a_le[m]
    f_cross = b_zp[mm] * a_ge[m] + a_zp[mm] * b_ge[m] + b_zn[mm] * a_le[m] + a_zn[mm] * b_le[m]
    f_prime = p_comp * f_cross + f_noflip

    g_noflip = b_ge[m] * a_le[m] + a_ge[m] * b_le[m]
    g_cross = b_zp[mm] * a_le[m] + a_zp[mm] * b_le[m] + b_ge[m] * a_zn[mm] + a_ge[m] * b_zn[mm]
    g_prime = p_comp * g_cross + g_noflip

    # XOR noise flips the output sign, exchanging the two tails.
    f_tail = (1.0 - p_xor) * f_prime + p_xor * g_prime
    g_tail = (1.0 - p_xor) * g_prime + p_xor * f_prime

    out = np.zeros(2 * Q + 1)
    out[Q + 1 :] = f_tail - np.append(f_tail[1:], 0.0)
    out[:Q] = (g_tail - np.append(g_tail[1:], 0.0))[::-1]
    b0, a0 = b[Q], a[Q]
    out[Q] = a0 * b0 + (b0 * (1.0 - a0) + a0 * (1.0 - b0)) * (1.0 - p_comp)
    np.maximum(out, 0.0, out=out)
    return out


def cn_update(msg_pmf: np.ndarray, dc: int, p_comp: float = 0.0, p_xor: float = 0.0) -> np.ndarray:
    """Check-node update: PMF of the outgoing message given the incoming PMF.

    Combines dc-1 i.i.d. incoming messages pairwise through the noisy min and
    noisy XOR operators, with the fair-sign convention for zero messages.
    """
    a = np.asarray(msg_pmf, dtype=float)
    Q = (len(a) - 1) // 2
    if dc < 2:
        raise ValueError("check degree must be at least 2")
    b = a.copy()
    for _ in range(dc - 2):
        b = _normalize(_cn_pair(b, a, Q, p_comp, p_xor))
    return b


def _saturate_pmf(pmf: np.ndarray, new_max: int) -> np.ndarray:
    """Fold tail mass beyond +-new_max onto the boundary values."""
    old = (len(pmf) - 1) // 2
    if new_max >= old:
        out = np.zeros(2 * new_max + 1)
        out[new_max - old : new_max + old + 1] = pmf
        return out
    k = old - new_max
    out = pmf[k : len(pmf) - k].copy()
    out[0] = pmf[: k + 1].sum()
    out[-1] = pmf[len(pmf) - k - 1 :].sum()
    return out


def _inject_full_depth(ct: np.ndarray, p: float, max_mag: int) -> np.ndarray:
    # an erroneous output is uniform over the 2*max_mag values other than v
    return (1.0 - p) * ct + (p / (2.0 * max_mag)) * (1.0 - ct)


def _inject_sign_preserving(ct: np.ndarray, p: float, max_mag: int) -> np.ndarray:
    # an erroneous output keeps (or zeroes) the sign: uniform over the
    # max_mag same-sign targets other than v, with zero splitting both ways
    zi = max_mag
    half0 = 0.5 * ct[zi]
    neg = ct[:zi].sum() + half0
    pos = ct[zi + 1 :].sum() + half0
    out = np.empty_like(ct)
    r = p / max_mag
    out[:zi] = (1.0 - p) * ct[:zi] + r * (neg - ct[:zi])
    out[zi] = (1.0 - p) * ct[zi] + r * (1.0 - ct[zi])
    out[zi + 1 :] = (1.0 - p) * ct[zi + 1 :] + r * (pos - ct[zi + 1 :])
    return out


def _injection_step(adder: ErrorInjector | None, max_mag: int, injection: str):
    """Return a function applying the adder error injection to an app PMF."""
    if adder is None or adder.p0 == 0.0:
        return lambda ct: ct
    if injection == "matrix" or adder.model is InjectorModel.XOR_DEPTH:
        T = adder.transition_matrix()
        return lambda ct: ct @ T
    if adder.model is InjectorModel.FULL_DEPTH:
        return lambda ct: _inject_full_depth(ct, adder.p0, max_mag)
    if adder.model is InjectorModel.SIGN_PRESERVING:
        return lambda ct: _inject_sign_preserving(ct, adder.p0, max_mag)
    raise ValueError(f"unsupported adder model {adder.model}")


def vn_update(
    chk_pmf: np.ndarray,
    prior: np.ndarray,
    dv: int,
    adder: ErrorInjector | None = None,
    app_max_mag: int | None = None,
    injection: str = "closed-form",
) -> tuple[np.ndarray, np.ndarray]:
    """Variable-node update: (message PMF, a-posteriori PMF).

    Starting from the prior, repeatedly convolves in one incoming check
    message, folds the tails onto the accumulator bounds and applies the
    noisy-adder injection.  The outgoing message is the saturation of the
    accumulator after dv-1 additions; the a-posteriori PMF uses all dv.
    """
    b = np.asarray(chk_pmf, dtype=float)
    c = np.asarray(prior, dtype=float)
    Q = (len(b) - 1) // 2
    if dv < 2:
        raise ValueError("variable degree must be at least 2")
    if adder is not None:
        qt = adder.alphabet.max_mag
        if app_max_mag is not None and app_max_mag != qt:
            raise ValueError("app_max_mag disagrees with the adder alphabet")
    elif app_max_mag is not None:
        qt = app_max_mag
    else:
        raise ValueError("need an adder or an explicit accumulator bound")
    inject = _injection_step(adder, qt, injection)

    ct = _saturate_pmf(c, qt)
    msg_raw = None
    for i in range(1, dv + 1):
        ct = _saturate_pmf(np.convolve(ct, b), qt)
        ct = _normalize(inject(ct))
        if i == dv - 1:
            msg_raw = ct
    return _saturate_pmf(msg_raw, Q), ct


def error_probability(app_pmf: np.ndarray) -> float:
    """Mass of negative a-posteriori values, half-counting zero."""
    mid = (len(app_pmf) - 1) // 2
    return float(app_pmf[:mid].sum() + 0.5 * app_pmf[mid])


def de_lower_bound(noise: NoiseParams, app_max_mag: int) -> float:
    """Floor on the error probability implied by the final adder injection."""
    p = noise.p_add
    if p == 0.0:
        return 0.0
    if noise.adder_model is InjectorModel.SIGN_PRESERVING:
        return p / (2.0 * app_max_mag)
    return p / 2.0 + p / (4.0 * app_max_mag)


@dataclass(frozen=True)
class DEConfig:
    """One density-evolution run: ensemble, alphabets, channel and noise."""

    dv: int
    dc: int
    channel: object
    quant: QuantConfig
    noise: NoiseParams = field(default_factory=NoiseParams)
    app_bits: int = 5
    repr: SignedRepr = SignedRepr.TWOS_COMPLEMENT
    injection: str = "closed-form"
    max_iters: int = 50_000
    conv_window: int = 100
    conv_tol: float = 1e-10
    conv_rel: float = 1e-3
    pmf_tol: float = 1e-12
    zero_floor: float = 1e-300
    period_max: int = 1000
    period_rel_tol: float = 0.05
    period_check_every: int = 2500

    def __post_init__(self) -> None:
        if self.dv < 2 or self.dc < 2:
            raise ValueError("node degrees must be at least 2")
        if self.app_bits <= self.quant.bits:
            raise ValueError("accumulator bit-width must exceed the message bit-width")
        if self.injection not in ("closed-form", "matrix"):
            raise ValueError("injection must be 'closed-form' or 'matrix'")

    @property
    def msg_max(self) -> int:
        return self.quant.max_msg

    @property
    def app_max(self) -> int:
        return (1 << (self.app_bits - 1)) - 1


@dataclass
class DETrace:
    """Error-probability sequence and its asymptotic classification.

    kind is 'converged' (pe_limit set), 'periodic' (period and band set) or
    'maxed-out'.  `plateau` marks converged traces that sat on an early level
    at least 10x above the final limit for 100+ iterations before dropping.
    """

    pe: np.ndarray
    kind: str
    pe_limit: float | None = None
    period: int | None = None
    band: tuple[float, float] | None = None
    plateau: bool = False
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.pe) - 1


def _find_period(pes: np.ndarray, tol: float, period_max: int, window: int, rel_tol: float = 0.05):
    """Smallest lag at which the tail of the sequence recurs, if any.

    The observed non-convergent orbits are quasi-periodic: the recurrence
    error at the best lag plateaus at a small fraction of the oscillation
    amplitude instead of reaching machine precision, so the match tolerance
    is relative to the amplitude.  A near-constant tail (amplitude within
    10x the convergence tolerance) is a convergence candidate, not a cycle.
    """
    n = len(pes)
    for T in range(1, period_max + 1):
        w = max(2 * T, window)
        if n < w + T:
            return None
        seg = pes[n - w :]
        lag = pes[n - w - T : n - T]
        amp = float(np.max(seg) - np.min(seg))
        if amp <= 10.0 * tol:
            return None
        if np.max(np.abs(seg - lag)) < rel_tol * amp:
            cycle = pes[n - T - 1 :]
            return T, (float(np.min(cycle)), float(np.max(cycle)))
    return None


def _detect_plateau(pes: np.ndarray, final: float, min_len: int = 100, rel_tol: float = 1e-3) -> bool:
    floor = max(final, 1e-300)
    level = None
    run = 0
    for v in pes[1:]:
        if v < 10.0 * floor:
            continue
        if level is not None and abs(v - level) <= rel_tol * level:
            run += 1
            if run >= min_len:
                return True
        else:
            level = v
            run = 0
    return False


def de_run(cfg: DEConfig, capture=()) -> DETrace:
    """Iterate density evolution and classify the error-probability sequence.

    Classification rules: the sequence has converged when the trailing-window
    variation of the error probability is below `conv_tol` and the app PMF
    moved by less than `pmf_tol` in sup norm (values at or below `zero_floor`
    count as an exact zero limit); it is periodic when the tail recurs at some
    lag up to `period_max` with genuine oscillation; otherwise the run is
    maxed-out.  `capture` lists iteration numbers whose a-posteriori PMF is
    kept in the trace.
    """
    prior = prior_pmf(cfg.channel, cfg.quant)
    noise = cfg.noise
    adder = None
    if noise.p_add > 0.0:
        adder = noise.adder_injector(Alphabet(cfg.app_bits), cfg.repr)
    bound = de_lower_bound(noise, cfg.app_max)

    capture = set(capture)
    snapshots: dict[int, np.ndarray] = {}
    if 0 in capture:
        snapshots[0] = _saturate_pmf(prior, cfg.app_max)

    a = prior.copy()
    pes = [input_error_prob(prior)]
    prev_ct = None
    kind = "maxed-out"
    pe_limit = None
    period = None
    band = None

    for it in range(1, cfg.max_iters + 1):
        b = cn_update(a, cfg.dc, noise.p_comp, noise.p_xor)
        a, ct = vn_update(b, prior, cfg.dv, adder, cfg.app_max, cfg.injection)
        pe = error_probability(ct)
        pes.append(pe)
        if it in capture:
            snapshots[it] = ct.copy()

        if noise.p_add > 0.0 and pe < bound * (1.0 - 1e-9):
            raise RuntimeError(
                f"error probability {pe} fell below the injection floor {bound}"
            )
        if pe <= cfg.zero_floor:
            kind, pe_limit = "converged", 0.0
            break
        if prev_ct is not None and it >= cfg.conv_window:
            tail = pes[-cfg.conv_window :]
            spread = max(tail) - min(tail)
            # the relative condition keeps a geometric decay toward zero
            # iterating instead of freezing it at an arbitrary tiny value
            if (
                spread < cfg.conv_tol
                and spread <= cfg.conv_rel * abs(pe)
                and np.max(np.abs(ct - prev_ct)) < cfg.pmf_tol
            ):
                kind, pe_limit = "converged", pe
                break
        prev_ct = ct

        if it % cfg.period_check_every == 0 and it >= 2 * cfg.conv_window:
            hit = _find_period(np.asarray(pes), cfg.conv_tol, cfg.period_max, cfg.conv_window, cfg.period_rel_tol)
            if hit is not None:
                kind = "periodic"
                period, band = hit
                break

    if kind == "maxed-out":
        hit = _find_period(np.asarray(pes), cfg.conv_tol, cfg.period_max, cfg.conv_window, cfg.period_rel_tol)
        if hit is not None:
            kind = "periodic"
            period, band = hit

    pes_arr = np.asarray(pes)
    plateau = False
    if kind == "converged":
        plateau = _detect_plateau(pes_arr, pe_limit)
    return DETrace(pes_arr, kind, pe_limit, period, band, plateau, snapshots)


def de_config_with(cfg: DEConfig, **kwargs) -> DEConfig:
    """Convenience: dataclasses.replace that reads naturally at call sites."""
    return dataclasses.replace(cfg, **kwargs)
