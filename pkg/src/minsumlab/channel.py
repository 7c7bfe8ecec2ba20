"""Binary-input channels, channel quantization and exact a-priori PMFs.

Two memoryless channels are modeled: the binary symmetric channel (BSC) and
the binary-input AWGN channel.  Channel outputs are mapped to the decoder's
message alphabet by scaling with a channel scale factor and rounding to the
nearest integer (ties away from zero, which keeps the map sign-symmetric),
then saturating.  :func:`prior_pmf` gives the exact distribution of the
quantized channel output under the all-(+1) codeword assumption, which seeds
density evolution; :func:`sample` drives Monte-Carlo simulation.

Transmitted bits use the +1/-1 convention (+1 for the zero bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Bsc",
    "BiAwgn",
    "QuantConfig",
    "gaussian_tail",
    "quantize",
    "prior_pmf",
    "input_error_prob",
    "awgn_input_error_prob",
    "sample",
]

_SQRT2 = math.sqrt(2.0)


def gaussian_tail(x: float) -> float:
    """Upper tail probability of the standard normal, accurate to ~1e-16."""
    return 0.5 * math.erfc(x / _SQRT2)


@dataclass(frozen=True)
class Bsc:
    """Binary symmetric channel; each bit is flipped with prob `crossover`."""

    crossover: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.crossover <= 0.5:
            raise ValueError(f"crossover must be in [0, 0.5], got {self.crossover}")

    @property
    def param(self) -> float:
        return self.crossover


@dataclass(frozen=True)
class BiAwgn:
    """Binary-input AWGN channel with noise variance `sigma2`."""

    sigma2: float

    def __post_init__(self) -> None:
        if self.sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def param(self) -> float:
        return self.sigma2

    @property
    def snr_db(self) -> float:
        return -10.0 * math.log10(self.sigma2)

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "BiAwgn":
        return cls(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class QuantConfig:
    """Channel scale factor and message bit-width.

    The message alphabet is {-max_msg..+max_msg} with
    ``max_msg = 2**(bits-1) - 1``; the scale factor must not exceed it.
    """

    scale: float
    bits: int = 4

    def __post_init__(self) -> None:
        if self.bits < 2:
            raise ValueError("need at least 2 message bits")
        if not 0.0 < self.scale <= self.max_msg:
            raise ValueError(f"scale must be in (0, {self.max_msg}], got {self.scale}")

    @property
    def max_msg(self) -> int:
        return (1 << (self.bits - 1)) - 1

    @property
    def size(self) -> int:
        return 2 * self.max_msg + 1


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(y, cfg: QuantConfig):
    """Scale, round to the nearest integer (ties away from zero), saturate."""
    q = np.clip(_round_half_away(cfg.scale * np.asarray(y, dtype=float)), -cfg.max_msg, cfg.max_msg)
    if np.ndim(y) == 0:
        return int(q)
    return q.astype(np.int64)


def _integer_scale(cfg: QuantConfig) -> int:
    mu = round(cfg.scale)
    if abs(cfg.scale - mu) > 1e-9 or mu < 1:
        raise ValueError(f"BSC requires a positive integer scale factor, got {cfg.scale}")
    return int(mu)


def prior_pmf(channel, cfg: QuantConfig) -> np.ndarray:
    """Exact PMF of the quantized channel output when +1 is transmitted.

    Indexing convention: entry ``i`` is the mass of value ``i - max_msg``.
    """
    Q = cfg.max_msg
    pmf = np.zeros(cfg.size)
    if isinstance(channel, Bsc):
        mu = _integer_scale(cfg)
        pmf[Q + mu] = 1.0 - channel.crossover
        pmf[Q - mu] = channel.crossover
        return pmf
    if isinstance(channel, BiAwgn):
        mu = cfg.scale
        s = mu * math.sqrt(channel.sigma2)
        for z in range(-Q, Q + 1):
            if z == -Q:
                pmf[0] = 1.0 - gaussian_tail((-Q + 0.5 - mu) / s)
            elif z == Q:
                pmf[2 * Q] = gaussian_tail((Q - 0.5 - mu) / s)
            else:
                pmf[Q + z] = gaussian_tail((z - 0.5 - mu) / s) - gaussian_tail((z + 0.5 - mu) / s)
        return pmf
    raise TypeError(f"unsupported channel {channel!r}")


def input_error_prob(pmf: np.ndarray) -> float:
    """Probability that a value drawn from `pmf` is negative, half-counting zero."""
    mid = (len(pmf) - 1) // 2
    return float(pmf[:mid].sum() + 0.5 * pmf[mid])


def awgn_input_error_prob(cfg: QuantConfig, sigma2: float) -> float:
    """Closed form for input_error_prob(prior_pmf(BiAwgn(sigma2), cfg))."""
    s = cfg.scale * math.sqrt(sigma2)
    return 1.0 - 0.5 * (
        gaussian_tail((-0.5 - cfg.scale) / s) + gaussian_tail((0.5 - cfg.scale) / s)
    )


def sample(channel, x, rng: np.random.Generator):
    """Pass transmitted symbols `x` (entries +-1) through the channel."""
    x = np.asarray(x)
    if isinstance(channel, Bsc):
        flips = rng.random(x.shape) < channel.crossover
        return np.where(flips, -x, x)
    if isinstance(channel, BiAwgn):
        return x + math.sqrt(channel.sigma2) * rng.standard_normal(x.shape)
    raise TypeError(f"unsupported channel {channel!r}")
