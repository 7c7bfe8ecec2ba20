"""Finite-length noisy Min-Sum decoders and the Monte-Carlo harness.

Three decoder variants share one message-passing engine:

* ``ms``            the analysis-friendly form: variable-to-check messages are
                    rebuilt from the prior and the other incoming check
                    messages (a fresh noisy-adder fold per outgoing edge);
* ``ms-practical``  the hardware form: the a-posteriori value is computed
                    first and each outgoing message is one noisy subtraction
                    of the incoming check message from it;
* ``scms``          ms-practical plus self-correction: a message whose sign
                    flipped since the previous iteration is erased (set to 0)
                    unless it was already erased then; the erase decision unit
                    itself can be noisy.

Check-node processing folds noisy XOR over the signs and noisy min over the
magnitudes of the other incoming messages, in a fresh random order per node,
outgoing edge and iteration.  Hard decisions and the optional syndrome check
are noiseless; a passing syndrome stops decoding before any further noisy
operation.

The per-edge state is held in flat integer arrays and all per-iteration work
is vectorized over edges grouped by node degree.  Frames are independent work
items: the Monte-Carlo driver derives one RNG stream per frame from
(seed, frame_index), so campaign statistics do not depend on scheduling or
worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import QuantConfig, quantize, sample
from .codes import TannerGraph, syndrome_ok
from .noisy_arith import Alphabet, ErrorInjector, NoiseParams, SignedRepr

__all__ = [
    "DecoderConfig",
    "MCStats",
    "hard_decision",
    "decode",
    "run_monte_carlo",
]

_VARIANTS = ("ms", "ms-practical", "scms")


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder variant, alphabets, hardware noise and stopping policy."""

    quant: QuantConfig
    noise: NoiseParams = field(default_factory=NoiseParams)
    variant: str = "ms"
    app_bits: int = 5
    repr: SignedRepr = SignedRepr.TWOS_COMPLEMENT
    max_iters: int = 100
    early_stopping: bool = True
    tie_break: str = "random"  # "plus" is a deterministic regression mode

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}")
        if self.app_bits <= self.quant.bits:
            raise ValueError("accumulator bit-width must exceed the message bit-width")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tie_break not in ("random", "plus"):
            raise ValueError("tie_break must be 'random' or 'plus'")

    @property
    def msg_max(self) -> int:
        return self.quant.max_msg

    @property
    def app_max(self) -> int:
        return (1 << (self.app_bits - 1)) - 1


@dataclass
class MCStats:
    """Aggregated Monte-Carlo results for one channel point."""

    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    avg_iters: float
    seed: int
    n_vars: int
    iter_error_sums: np.ndarray | None = None


def hard_decision(app_value: int, rng: np.random.Generator, mode: str = "random") -> int:
    """Sign of an a-posteriori value; zero resolved by a fair coin."""
    if app_value > 0:
        return 1
    if app_value < 0:
        return -1
    if mode == "plus":
        return 1
    return 1 if rng.integers(0, 2) else -1


def _signs(values: np.ndarray, rng: np.random.Generator, mode: str = "random") -> np.ndarray:
    out = np.sign(values)
    zeros = out == 0
    if np.any(zeros):
        if mode == "plus":
            out[zeros] = 1
        else:
            out[zeros] = rng.integers(0, 2, int(zeros.sum())) * 2 - 1
    return out


def _noisy_add_vec(
    a: np.ndarray,
    b: np.ndarray,
    bound: int,
    injector: ErrorInjector | None,
    rng: np.random.Generator,
) -> np.ndarray:
    s = np.clip(a + b, -bound, bound)
    if injector is not None and injector.p0 > 0.0:
        hit = rng.random(s.shape) < injector.p0
        k = int(hit.sum())
        if k:
            errs = injector.sample_nonzero_errors(rng, k)
            coins = rng.integers(0, 2, k)
            s[hit] = injector.inject_array(s[hit], errs, coins)
    return s


_PERM_TABLES: dict[int, np.ndarray] = {}
_LOO_TABLES: dict[int, np.ndarray] = {}


def _perm_table(width: int) -> np.ndarray:
    """All permutations of range(width); a random row is a random fold order."""
    table = _PERM_TABLES.get(width)
    if table is None:
        from itertools import permutations

        table = np.array(list(permutations(range(width))), dtype=np.int64)
        _PERM_TABLES[width] = table
    return table


def _loo_table(degree: int) -> np.ndarray:
    """Row j lists the other degree-1 positions (leave-one-out gather)."""
    table = _LOO_TABLES.get(degree)
    if table is None:
        table = np.array(
            [[k for k in range(degree) if k != j] for j in range(degree)], dtype=np.int64
        )
        _LOO_TABLES[degree] = table
    return table


def _shuffle_rows(operands: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independently permute each row of `operands` (fresh uniform orders)."""
    rows, width = operands.shape
    if width <= 6:
        table = _perm_table(width)
        picks = table[rng.integers(0, len(table), rows)]
    else:
        picks = np.argsort(rng.random((rows, width)), axis=1)
    return operands[np.arange(rows)[:, None], picks]


def _fold_adds(
    operands: np.ndarray,
    bound: int,
    injector: ErrorInjector | None,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy-adder fold of each row of `operands`, in random per-row order."""
    ordered = _shuffle_rows(operands, rng)
    acc = ordered[:, 0].copy()
    for k in range(1, operands.shape[1]):
        acc = _noisy_add_vec(acc, ordered[:, k], bound, injector, rng)
    return acc


def _loo_min(mags: np.ndarray) -> np.ndarray:
    """Leave-one-out exact minimum per row via the two smallest values."""
    order = np.argsort(mags, axis=1)
    rows = np.arange(len(mags))
    min1_pos = order[:, 0]
    min1 = mags[rows, min1_pos]
    min2 = mags[rows, order[:, 1]]
    out = np.repeat(min1[:, None], mags.shape[1], axis=1)
    out[rows, min1_pos] = min2
    return out


def _cn_step(
    graph: TannerGraph,
    alpha: np.ndarray,
    beta: np.ndarray,
    noise: NoiseParams,
    rng: np.random.Generator,
) -> None:
    """Noisy check-node processing, writing the new check messages into beta."""
    for _, edge_mat in graph.chk_groups:
        rows, d = edge_mat.shape
        if d == 1:
            beta[edge_mat[:, 0]] = 0  # degree-1 check has no extrinsic input
            continue
        vals = alpha[edge_mat]
        mags = np.abs(vals)
        sgns = _signs(vals, rng)

        # sign fold: XOR is order-free, so divide the total +-1 product out
        sign = sgns.prod(axis=1)[:, None] * sgns
        if noise.p_xor > 0.0 and d > 2:
            flips = (rng.random((rows, d, d - 2)) < noise.p_xor).sum(axis=2)
            sign = sign * (1 - 2 * (flips & 1))

        if noise.p_comp == 0.0:
            acc = _loo_min(mags).reshape(rows * d)
        else:
            # sequential noisy min over the other inputs, fresh random order
            loo = mags[:, _loo_table(d)].reshape(rows * d, d - 1)
            om = _shuffle_rows(loo, rng)
            acc = om[:, 0].copy()
            for k in range(1, d - 1):
                nxt = om[:, k]
                lt = acc < nxt
                lt ^= rng.random(len(acc)) < noise.p_comp
                acc = np.where(lt, acc, nxt)

        beta[edge_mat.reshape(rows * d)] = sign.reshape(rows * d) * acc


def _ap_update(
    graph: TannerGraph,
    gamma: np.ndarray,
    beta: np.ndarray,
    adder: ErrorInjector | None,
    app_max: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """A-posteriori values: noisy-adder fold of the prior and all check messages."""
    app = np.empty(graph.n_vars, dtype=np.int64)
    for var_ids, edge_mat in graph.var_groups:
        ops = np.concatenate([gamma[var_ids, None], beta[edge_mat]], axis=1)
        app[var_ids] = _fold_adds(ops, app_max, adder, rng)
    return app


def _vn_step_ms(graph, gamma, beta, adder, cfg, rng) -> np.ndarray:
    """Analysis-style variable messages: per-edge fold of prior + other checks."""
    alpha = np.empty(graph.n_edges, dtype=np.int64)
    for var_ids, edge_mat in graph.var_groups:
        rows, d = edge_mat.shape
        if d == 1:
            alpha[edge_mat[:, 0]] = gamma[var_ids]
            continue
        loo = beta[edge_mat][:, _loo_table(d)]  # (rows, d, d-1)
        ops = np.concatenate(
            [np.broadcast_to(gamma[var_ids][:, None, None], (rows, d, 1)), loo], axis=2
        ).reshape(rows * d, d)
        folded = _fold_adds(ops, cfg.app_max, adder, rng)
        alpha[edge_mat.reshape(rows * d)] = np.clip(folded, -cfg.msg_max, cfg.msg_max)
    return alpha


def decode(
    graph: TannerGraph,
    y,
    cfg: DecoderConfig,
    rng: np.random.Generator,
    iter_error_counts: list | None = None,
    capture: dict | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Decode one received word; returns (hard decisions, iterations, converged).

    Decoding failure is a normal outcome (converged=False after max_iters).
    `iter_error_counts`, when given, collects the number of hard decisions
    differing from +1 at each iteration (the all-(+1) reference).  `capture`
    collects per-iteration message arrays for white-box tests.
    """
    noise = cfg.noise
    adder = None
    if noise.p_add > 0.0:
        adder = noise.adder_injector(Alphabet(cfg.app_bits), cfg.repr)

    gamma = quantize(np.asarray(y, dtype=float), cfg.quant)
    alpha = gamma[graph.edge_var].copy()
    beta = np.zeros(graph.n_edges, dtype=np.int64)
    if cfg.variant == "scms":
        s_bits = (_signs(alpha, rng, cfg.tie_break) < 0).astype(np.int64)
        erased = np.zeros(graph.n_edges, dtype=np.int64)

    hard = np.ones(graph.n_vars, dtype=np.int64)
    for it in range(1, cfg.max_iters + 1):
        _cn_step(graph, alpha, beta, noise, rng)

        if cfg.variant == "ms":
            alpha = _vn_step_ms(graph, gamma, beta, adder, cfg, rng)
            app = _ap_update(graph, gamma, beta, adder, cfg.app_max, rng)
        else:
            app = _ap_update(graph, gamma, beta, adder, cfg.app_max, rng)
            alpha = _noisy_add_vec(app[graph.edge_var], -beta, cfg.app_max, adder, rng)
            alpha = np.clip(alpha, -cfg.msg_max, cfg.msg_max)
            if cfg.variant == "scms":
                new_bits = (_signs(alpha, rng, cfg.tie_break) < 0).astype(np.int64)
                erase = (new_bits ^ s_bits) & (1 - erased)
                if noise.p_scu > 0.0:
                    erase ^= rng.random(graph.n_edges) < noise.p_scu
                erased = erase
                s_bits = new_bits  # latched before the erasure zeroes messages
                alpha[erased == 1] = 0

        hard = _signs(app, rng, cfg.tie_break)
        if iter_error_counts is not None:
            iter_error_counts.append(int(np.sum(hard != 1)))
        if capture is not None:
            capture.setdefault("alpha", []).append(alpha.copy())
            capture.setdefault("beta", []).append(beta.copy())
            capture.setdefault("app", []).append(app.copy())
        if cfg.early_stopping and syndrome_ok(graph, hard):
            return hard, it, True
    return hard, cfg.max_iters, False


def _run_frames(
    graph: TannerGraph,
    cfg: DecoderConfig,
    channel,
    seed: int,
    frames: range,
    collect_iter_errors: bool,
):
    """Per-frame loop; one RNG stream per frame keyed by (seed, frame index)."""
    ones = np.ones(graph.n_vars)
    bit_errors = 0
    frame_errors = 0
    iters_total = 0
    iter_sums = np.zeros(cfg.max_iters, dtype=np.int64) if collect_iter_errors else None
    for idx in frames:
        rng = np.random.default_rng([seed, idx])
        y = sample(channel, ones, rng)
        counts = [] if collect_iter_errors else None
        x_hat, iters, _ = decode(graph, y, cfg, rng, iter_error_counts=counts)
        errs = int(np.sum(x_hat != 1))
        bit_errors += errs
        frame_errors += errs > 0
        iters_total += iters
        if collect_iter_errors:
            iter_sums[: len(counts)] += counts
    return bit_errors, frame_errors, iters_total, iter_sums


def run_monte_carlo(
    graph: TannerGraph,
    cfg: DecoderConfig,
    channel,
    seed: int,
    max_frames: int,
    target_frame_errors: int | None = 100,
    jobs: int = 1,
    collect_iter_errors: bool = False,
    batch: int = 256,
) -> MCStats:
    """Transmit the all-(+1) codeword, decode, and accumulate BER/FER.

    Stops when `target_frame_errors` decoding failures have been seen (in
    whole batches, so results are identical for any `jobs`) or at the frame
    budget.  Identical seeds give bit-identical statistics.
    """
    if max_frames < 1:
        raise ValueError("max_frames must be positive")
    pool = None
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        pool = ProcessPoolExecutor(max_workers=jobs)
    bit_errors = frame_errors = iters_total = 0
    iter_sums = np.zeros(cfg.max_iters, dtype=np.int64) if collect_iter_errors else None
    done = 0
    try:
        while done < max_frames:
            # fixed round size so the early-stop boundary (and therefore the
            # statistics) is identical for any worker count
            n = min(batch, max_frames - done)
            ranges = [range(done + i, done + n, max(jobs, 1)) for i in range(max(jobs, 1))]
            if pool is None:
                parts = [_run_frames(graph, cfg, channel, seed, ranges[0], collect_iter_errors)]
            else:
                parts = list(
                    pool.map(
                        _run_frames_star,
                        [(graph, cfg, channel, seed, r, collect_iter_errors) for r in ranges],
                    )
                )
            for be, fe, it, isums in parts:
                bit_errors += be
                frame_errors += fe
                iters_total += it
                if collect_iter_errors and isums is not None:
                    iter_sums += isums
            done += n
            if target_frame_errors is not None and frame_errors >= target_frame_errors:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return MCStats(
        frames=done,
        bit_errors=bit_errors,
        frame_errors=frame_errors,
        ber=bit_errors / (done * graph.n_vars),
        fer=frame_errors / done,
        avg_iters=iters_total / done,
        seed=seed,
        n_vars=graph.n_vars,
        iter_error_sums=iter_sums,
    )


def _run_frames_star(args):
    return _run_frames(*args)
