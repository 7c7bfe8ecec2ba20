"""Bit-exact saturating fixed-point arithmetic with probabilistic fault injection.

This module models the arithmetic and logic units of a finite-precision
message-passing decoder running on unreliable hardware: a saturating adder,
a two-input comparator (used to build a minimum operator) and an XOR gate.
Each unit comes in a noiseless flavor and a noisy flavor obtained by
injecting a random error into the noiseless output.

Values live in a symmetric alphabet ``{-B, ..., +B}`` with ``B = 2**(bits-1) - 1``
(one bit pattern of the word is unused, see :func:`invalid_pattern`).  Errors
are injected by XOR-ing the binary representation of the noiseless output with
the representation of a random error pattern; the error set controls whether
the sign bit of the output can be corrupted.

All operators are pure functions of their inputs and the supplied random
draws, so they are safe to use concurrently as long as each worker owns an
independent random generator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SignedRepr",
    "Alphabet",
    "InjectorModel",
    "ErrorInjector",
    "NoiseParams",
    "encode",
    "decode",
    "invalid_pattern",
    "saturate",
    "noisy_add",
    "noisy_min",
    "noisy_xor",
    "fold_ordered",
    "fold_nested",
]


class SignedRepr(enum.Enum):
    """Signed binary representation used when XOR-ing errors into values."""

    SIGN_MAGNITUDE = "sign-magnitude"
    ONES_COMPLEMENT = "ones-complement"
    TWOS_COMPLEMENT = "twos-complement"


@dataclass(frozen=True)
class Alphabet:
    """Symmetric integer alphabet of a `bits`-wide signed word.

    The alphabet is ``{-max_mag, ..., -1, 0, +1, ..., +max_mag}`` with
    ``max_mag = 2**(bits-1) - 1``; it has ``2**bits - 1`` elements, so exactly
    one bit pattern does not represent an alphabet value.
    """

    bits: int

    def __post_init__(self) -> None:
        if self.bits < 2:
            raise ValueError(f"alphabet needs at least 2 bits, got {self.bits}")

    @property
    def max_mag(self) -> int:
        return (1 << (self.bits - 1)) - 1

    @property
    def size(self) -> int:
        return 2 * self.max_mag + 1

    def values(self) -> np.ndarray:
        return np.arange(-self.max_mag, self.max_mag + 1)

    def contains(self, v) -> bool:
        return bool(np.all(np.abs(v) <= self.max_mag))


def encode(values, repr_: SignedRepr, bits: int):
    """Binary pattern(s) of alphabet value(s) in the given representation."""
    v = np.asarray(values)
    half = 1 << (bits - 1)
    if repr_ is SignedRepr.TWOS_COMPLEMENT:
        pat = v & ((1 << bits) - 1)
    elif repr_ is SignedRepr.SIGN_MAGNITUDE:
        pat = np.where(v >= 0, v, half | (-v))
    else:
        pat = np.where(v >= 0, v, ((1 << bits) - 1) ^ (-v))
    return int(pat) if np.ndim(values) == 0 else pat


def decode(patterns, repr_: SignedRepr, bits: int):
    """Inverse of :func:`encode`.

    The pattern returned by :func:`invalid_pattern` decodes to ``-(B+1)``
    under two's complement and to 0 (a negative zero) otherwise; callers that
    care must test for it explicitly before decoding.
    """
    p = np.asarray(patterns)
    half = 1 << (bits - 1)
    if repr_ is SignedRepr.TWOS_COMPLEMENT:
        val = np.where(p < half, p, p - (1 << bits))
    elif repr_ is SignedRepr.SIGN_MAGNITUDE:
        val = np.where(p < half, p, -(p - half))
    else:
        val = np.where(p < half, p, -(((1 << bits) - 1) ^ p))
    return int(val) if np.ndim(patterns) == 0 else val


def invalid_pattern(repr_: SignedRepr, bits: int) -> int:
    """The unique `bits`-wide pattern that is not an alphabet value."""
    if repr_ is SignedRepr.ONES_COMPLEMENT:
        return (1 << bits) - 1
    return 1 << (bits - 1)


def saturate(v, alphabet: Alphabet):
    """Clamp value(s) to the alphabet range."""
    b = alphabet.max_mag
    if np.ndim(v) == 0:
        return -b if v < -b else (b if v > b else int(v))
    return np.clip(v, -b, b)


class InjectorModel(enum.Enum):
    """Families of error-injection models.

    FULL_DEPTH      XOR with an error drawn from the whole alphabet; any bit,
                    including the sign bit, can be corrupted.
    SIGN_PRESERVING XOR with a nonnegative error; the sign bit is never
                    corrupted (XOR depth = bits - 1).
    XOR_DEPTH       generalization: errors touch only the `depth` least
                    significant bits (depth in 1..bits-1).
    OUTPUT_SWITCHING binary output flipped with probability p0 (used for the
                    comparator and the XOR gate).
    """

    FULL_DEPTH = "full-depth"
    SIGN_PRESERVING = "sign-preserving"
    XOR_DEPTH = "xor-depth"
    OUTPUT_SWITCHING = "output-switching"


@dataclass(frozen=True)
class ErrorInjector:
    """An error set, an error distribution and an injection map over an alphabet.

    ``p0`` is the probability that the injected error is nonzero; nonzero
    errors are uniform over the rest of the error set.  The injection map is
    deterministic given the error, except for XOR-depth models applied to a
    zero value, where the result is ``+e`` or ``-e`` according to a fair coin
    supplied by the caller (so runs are reproducible from a seed).
    """

    model: InjectorModel
    p0: float
    alphabet: Alphabet | None = None
    repr: SignedRepr = SignedRepr.TWOS_COMPLEMENT
    depth: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError(f"p0 must be in [0, 1], got {self.p0}")
        if self.model is InjectorModel.OUTPUT_SWITCHING:
            return
        if self.alphabet is None:
            raise ValueError("XOR-style injectors need an alphabet")
        bits = self.alphabet.bits
        depth = self.depth
        if self.model is InjectorModel.FULL_DEPTH:
            if depth is None:
                depth = bits
            if depth != bits:
                raise ValueError("full-depth injection uses depth == bits")
        elif self.model is InjectorModel.SIGN_PRESERVING:
            if depth is None:
                depth = bits - 1
            if depth != bits - 1:
                raise ValueError("sign-preserving injection uses depth == bits - 1")
        else:
            if depth is None or not 1 <= depth <= bits - 1:
                raise ValueError("xor-depth injection needs depth in 1..bits-1")
        object.__setattr__(self, "depth", depth)

    # -- error set -----------------------------------------------------

    def error_values(self) -> np.ndarray:
        if self.model is InjectorModel.OUTPUT_SWITCHING:
            return np.array([0, 1])
        if self.model is InjectorModel.FULL_DEPTH:
            return self.alphabet.values()
        return np.arange(0, 1 << self.depth)

    def error_pmf(self) -> np.ndarray:
        vals = self.error_values()
        pmf = np.full(len(vals), self.p0 / (len(vals) - 1))
        pmf[vals == 0] = 1.0 - self.p0
        return pmf

    def is_sign_preserving(self) -> bool:
        return self.model in (InjectorModel.SIGN_PRESERVING, InjectorModel.XOR_DEPTH)

    def is_highly_symmetric(self) -> bool:
        """Whether the injection map commutes with negation pointwise."""
        if self.model is InjectorModel.OUTPUT_SWITCHING:
            return True
        return self.repr is not SignedRepr.TWOS_COMPLEMENT

    def is_symmetric(self) -> bool:
        """Whether injected outputs of v and -v are mirror-distributed.

        Under two's complement the XOR models are symmetric in distribution
        down to depth bits-1; shallower depths break the symmetry.
        """
        if self.is_highly_symmetric():
            return True
        return self.depth >= self.alphabet.bits - 1

    # -- sampling ------------------------------------------------------

    def sample_error(self, rng: np.random.Generator):
        """Draw one error from the error distribution."""
        return int(self.sample_errors(rng, 1)[0])

    def sample_errors(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=np.int64)
        hit = rng.random(size) < self.p0
        n = int(hit.sum())
        if n:
            out[hit] = self.sample_nonzero_errors(rng, n)
        return out

    def sample_nonzero_errors(self, rng: np.random.Generator, size: int) -> np.ndarray:
        vals = self.error_values()
        nz = vals[vals != 0]
        return nz[rng.integers(0, len(nz), size)]

    # -- injection map -------------------------------------------------

    def inject(self, v: int, e: int, coin: int | None = None) -> int:
        """Apply the injection map to a single value.

        `coin` (0 or 1) resolves the sign of the output when a nonzero error
        is injected into a zero value under a sign-preserving/XOR-depth model;
        it is ignored otherwise.
        """
        if self.model is InjectorModel.OUTPUT_SWITCHING:
            if v not in (0, 1) or e not in (0, 1):
                raise ValueError("output-switching acts on {0, 1}")
            return v ^ e
        vals = self.error_values()
        if e < vals[0] or e > vals[-1] or (self.model is not InjectorModel.FULL_DEPTH and e < 0):
            raise ValueError(f"error {e} outside the error set")
        if not self.alphabet.contains(v):
            raise ValueError(f"value {v} outside the alphabet")
        if self.model is not InjectorModel.FULL_DEPTH and v == 0 and e != 0:
            if coin is None:
                raise ValueError("a fair coin is required to inject into zero")
            return e if coin else -e
        bits = self.alphabet.bits
        pat = encode(v, self.repr, bits) ^ encode(e, self.repr, bits)
        if pat == invalid_pattern(self.repr, bits):
            return e if self.model is InjectorModel.FULL_DEPTH else 0
        return decode(pat, self.repr, bits)

    def inject_array(self, v: np.ndarray, e: np.ndarray, coins: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`inject`; inputs must already be validated."""
        bits = self.alphabet.bits
        pats = encode(v, self.repr, bits) ^ encode(e, self.repr, bits)
        out = decode(pats, self.repr, bits)
        zeta = invalid_pattern(self.repr, bits)
        if self.model is InjectorModel.FULL_DEPTH:
            out = np.where(pats == zeta, e, out)
        else:
            out = np.where(pats == zeta, 0, out)
            zero_in = (v == 0) & (e != 0)
            out = np.where(zero_in, np.where(coins.astype(bool), e, -e), out)
        return out

    def inject_sampled(self, v, rng: np.random.Generator):
        """Draw an error (and coin, if needed) and inject it into `v`."""
        if np.ndim(v) == 0:
            e = self.sample_error(rng)
            coin = int(rng.integers(0, 2))
            return self.inject(int(v), e, coin)
        e = self.sample_errors(rng, v.size).reshape(np.shape(v))
        coins = rng.integers(0, 2, np.shape(v))
        return self.inject_array(v, e, coins)

    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic matrix T[v, w] = Pr(inject(v, E) = w), by enumeration."""
        if self.model is InjectorModel.OUTPUT_SWITCHING:
            return np.array([[1.0 - self.p0, self.p0], [self.p0, 1.0 - self.p0]])
        vals = self.alphabet.values()
        n = self.alphabet.size
        zero_row = self.alphabet.max_mag
        T = np.zeros((n, n))
        for e, pe in zip(self.error_values(), self.error_pmf()):
            if pe == 0.0:
                continue
            if self.model is not InjectorModel.FULL_DEPTH and e != 0:
                # zero input splits evenly between +e and -e
                T[zero_row, zero_row + e] += 0.5 * pe
                T[zero_row, zero_row - e] += 0.5 * pe
                nz = vals[vals != 0]
                outs = self.inject_array(nz, np.full(nz.shape, e), np.zeros(nz.shape, dtype=int))
                np.add.at(T, (nz + self.alphabet.max_mag, outs + self.alphabet.max_mag), pe)
            else:
                outs = self.inject_array(vals, np.full(n, e), np.zeros(n, dtype=int))
                np.add.at(T, (np.arange(n), outs + self.alphabet.max_mag), pe)
        return T


# -- noisy operators ----------------------------------------------------


def noisy_add(x: int, y: int, injector: ErrorInjector, rng: np.random.Generator) -> int:
    """Saturating add followed by error injection."""
    return injector.inject_sampled(saturate(x + y, injector.alphabet), rng)


def noisy_min(x: int, y: int, p_comp: float, rng: np.random.Generator) -> int:
    """Minimum of two magnitudes through a comparator flipped with prob p_comp."""
    lt = x < y
    if p_comp > 0.0 and rng.random() < p_comp:
        lt = not lt
    return x if lt else y


def noisy_xor(a: int, b: int, p_xor: float, rng: np.random.Generator) -> int:
    """XOR of two binary inputs, output flipped with probability p_xor.

    Both the {0, 1} and the {-1, +1} encodings are accepted; inputs that are
    both nonzero are treated as signs (so (1, 1) means (+1, +1)).
    """
    if a in (-1, 1) and b in (-1, 1):
        out = a * b
        if p_xor > 0.0 and rng.random() < p_xor:
            out = -out
        return out
    if a in (0, 1) and b in (0, 1):
        out = a ^ b
        if p_xor > 0.0 and rng.random() < p_xor:
            out = 1 - out
        return out
    raise ValueError(f"inputs must share the {{0,1}} or {{-1,+1}} encoding: {a}, {b}")


def fold_ordered(op, sequence):
    """Left fold of a binary operator over `sequence` in the given order."""
    it = iter(sequence)
    try:
        acc = next(it)
    except StopIteration:
        raise ValueError("cannot fold an empty input set") from None
    for x in it:
        acc = op(acc, x)
    return acc


def fold_nested(op, inputs, rng: np.random.Generator):
    """Fold a two-input operator over `inputs` in uniformly random order.

    Finite-precision (and noisy) operators are not associative, so the fold
    order matters; a fresh random permutation is drawn per call.  A single
    input is returned unchanged.
    """
    seq = list(inputs)
    if not seq:
        raise ValueError("cannot fold an empty input set")
    order = rng.permutation(len(seq))
    return fold_ordered(op, (seq[i] for i in order))


@dataclass(frozen=True)
class NoiseParams:
    """Error probabilities of the decoder's hardware units.

    All probabilities zero reproduces the noiseless decoder exactly.
    `adder_model` selects the injection family of the adders; `p_scu` is the
    flip probability of the self-correction unit (used by the SCMS decoder
    only).
    """

    p_add: float = 0.0
    p_comp: float = 0.0
    p_xor: float = 0.0
    p_scu: float = 0.0
    adder_model: InjectorModel = InjectorModel.SIGN_PRESERVING

    def __post_init__(self) -> None:
        for name in ("p_add", "p_comp", "p_xor", "p_scu"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.adder_model not in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
            raise ValueError("adder_model must be full-depth or sign-preserving")

    @property
    def is_noiseless(self) -> bool:
        return self.p_add == self.p_comp == self.p_xor == self.p_scu == 0.0

    def adder_injector(self, alphabet: Alphabet, repr_: SignedRepr = SignedRepr.TWOS_COMPLEMENT) -> ErrorInjector:
        return ErrorInjector(self.adder_model, self.p_add, alphabet, repr_)
