"""Brute-force enumeration oracles for the density-evolution updates.

These deliberately avoid the cumulative-sum / convolution algebra of the
production code: the check-node oracle enumerates every tuple of incoming
messages (with zeros split into fair-coin signs) and every comparator-flip
pattern; the variable-node oracle enumerates the prior, every tuple of check
messages and every per-addition error outcome, propagating a small
value-probability dictionary.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from minsumlab.noisy_arith import ErrorInjector, InjectorModel


def cn_oracle(msg_pmf: np.ndarray, dc: int, p_comp: float, p_xor: float) -> np.ndarray:
    Q = (len(msg_pmf) - 1) // 2
    syms = []
    for z in range(-Q, Q + 1):
        p = float(msg_pmf[z + Q])
        if p == 0.0:
            continue
        if z > 0:
            syms.append((1, z, p))
        elif z < 0:
            syms.append((-1, -z, p))
        else:
            syms.append((1, 0, 0.5 * p))
            syms.append((-1, 0, 0.5 * p))
    n = dc - 1
    # parity of independent output flips across the dc-2 XOR gates
    p_odd = 0.5 * (1.0 - (1.0 - 2.0 * p_xor) ** (dc - 2))
    out = np.zeros(2 * Q + 1)
    for tup in itertools.product(syms, repeat=n):
        w = math.prod(t[2] for t in tup)
        sprod = math.prod(t[0] for t in tup)
        mag_dist = {tup[0][1]: 1.0}
        for k in range(1, n):
            m = tup[k][1]
            new: dict[int, float] = {}
            for acc, q in mag_dist.items():
                lo, hi = (acc, m) if acc <= m else (m, acc)
                new[lo] = new.get(lo, 0.0) + q * (1.0 - p_comp)
                new[hi] = new.get(hi, 0.0) + q * p_comp
            mag_dist = new
        for mag, q in mag_dist.items():
            if mag == 0:
                out[Q] += w * q
            else:
                out[Q + sprod * mag] += w * q * (1.0 - p_odd)
                out[Q - sprod * mag] += w * q * p_odd
    return out


def vn_oracle(
    chk_pmf: np.ndarray,
    prior: np.ndarray,
    dv: int,
    injector: ErrorInjector | None,
    app_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    Q = (len(chk_pmf) - 1) // 2
    out_msg = np.zeros(2 * Q + 1)
    out_app = np.zeros(2 * app_max + 1)

    if injector is not None and injector.p0 > 0.0:
        pairs = [
            (int(e), float(p))
            for e, p in zip(injector.error_values(), injector.error_pmf())
            if p > 0.0
        ]
        outcome: dict[tuple[int, int], list[tuple[int, float]]] = {}
        for v in range(-app_max, app_max + 1):
            for e, _ in pairs:
                if v == 0 and e != 0 and injector.model is not InjectorModel.FULL_DEPTH:
                    outcome[(v, e)] = [(e, 0.5), (-e, 0.5)]
                else:
                    outcome[(v, e)] = [(injector.inject(v, e, 0), 1.0)]
    else:
        pairs = None

    msgs = range(-Q, Q + 1)
    for g in msgs:
        pg = float(prior[g + Q])
        if pg == 0.0:
            continue
        for betas in itertools.product(msgs, repeat=dv):
            w = pg * math.prod(float(chk_pmf[b + Q]) for b in betas)
            if w == 0.0:
                continue
            dist = {g: 1.0}
            for i, b in enumerate(betas, start=1):
                new: dict[int, float] = {}
                for acc, q in dist.items():
                    s = max(-app_max, min(app_max, acc + b))
                    if pairs is None:
                        new[s] = new.get(s, 0.0) + q
                    else:
                        for e, pe in pairs:
                            for val, frac in outcome[(s, e)]:
                                new[val] = new.get(val, 0.0) + q * pe * frac
                dist = new
                if i == dv - 1:
                    for acc, q in dist.items():
                        out_msg[max(-Q, min(Q, acc)) + Q] += w * q
            for acc, q in dist.items():
                out_app[acc + app_max] += w * q
    return out_msg, out_app
