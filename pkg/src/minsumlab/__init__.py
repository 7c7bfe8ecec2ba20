"""Noisy fixed-point Min-Sum LDPC decoding laboratory.

Subpackages model faulty arithmetic units (`noisy_arith`), channels and
quantization (`channel`), Tanner graphs (`codes`), exact density evolution
(`density_evolution`), threshold/region searches (`threshold_analysis`), and
finite-length Monte-Carlo simulation (`sim`); `cli` exposes everything as
reproducible CSV/JSON-emitting commands.
"""

__version__ = "0.1.0"

from .channel import BiAwgn, Bsc, QuantConfig, input_error_prob, prior_pmf, quantize, sample
from .codes import EnsembleSpec, TannerGraph, parse_alist, random_regular_graph, syndrome_ok, to_alist
from .density_evolution import DEConfig, DETrace, cn_update, de_lower_bound, de_run, error_probability, vn_update
from .noisy_arith import (
    Alphabet,
    ErrorInjector,
    InjectorModel,
    NoiseParams,
    SignedRepr,
    fold_nested,
    noisy_add,
    noisy_min,
    noisy_xor,
    saturate,
)
from .sim import DecoderConfig, MCStats, decode, hard_decision, run_monte_carlo
from .threshold_analysis import (
    ThresholdResult,
    classical_threshold,
    classify_point,
    eta_threshold,
    functional_threshold,
    lipschitz_estimate,
    region_scan,
)
