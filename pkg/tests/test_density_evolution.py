import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minsumlab.channel import Bsc, QuantConfig, input_error_prob, prior_pmf
from minsumlab.density_evolution import (
    DEConfig,
    cn_update,
    de_lower_bound,
    de_run,
    error_probability,
    vn_update,
)
from minsumlab.noisy_arith import Alphabet, ErrorInjector, InjectorModel, NoiseParams, SignedRepr

from oracles import cn_oracle, vn_oracle


def delta(z, Q):
    pmf = np.zeros(2 * Q + 1)
    pmf[Q + z] = 1.0
    return pmf


def random_pmf(rng, Q):
    x = rng.random(2 * Q + 1)
    return x / x.sum()


# -- check-node update ---------------------------------------------------


def test_cn_point_mass_positive():
    np.testing.assert_allclose(cn_update(delta(3, 7), 6), delta(3, 7), atol=0)


def test_cn_point_mass_negative_sign_product():
    # five inputs at -2: sign product is -1, so the output sits at -2;
    # with dc=5 (four inputs) the product is +1
    np.testing.assert_allclose(cn_update(delta(-2, 7), 6), delta(-2, 7), atol=1e-15)
    np.testing.assert_allclose(cn_update(delta(-2, 7), 5), delta(2, 7), atol=1e-15)


def test_cn_binary_input_matches_parity_formula():
    # +-1 inputs: magnitude always 1, sign wrong with the odd-parity probability
    eps = 0.06
    pmf = np.zeros(15)
    pmf[7 + 1] = 1 - eps
    pmf[7 - 1] = eps
    out = cn_update(pmf, 6)
    p_neg = 0.5 * (1 - (1 - 2 * eps) ** 5)
    np.testing.assert_allclose(out[7 - 1], p_neg, rtol=1e-14)
    np.testing.assert_allclose(out[7 + 1], 1 - p_neg, rtol=1e-14)


@pytest.mark.parametrize("dc", [3, 4])
@pytest.mark.parametrize("p_comp,p_xor", [(0.0, 0.0), (0.1, 0.01), (0.3, 0.2)])
def test_cn_update_matches_enumeration(dc, p_comp, p_xor):
    rng = np.random.default_rng(dc * 100 + int(p_comp * 10))
    pmf = random_pmf(rng, 3)
    got = cn_update(pmf, dc, p_comp, p_xor)
    want = cn_oracle(pmf, dc, p_comp, p_xor)
    np.testing.assert_allclose(got, want, atol=1e-12)
    np.testing.assert_allclose(got.sum(), 1.0, atol=1e-12)


def test_cn_update_oracle_at_full_width():
    # one spot-check at the production alphabet
    rng = np.random.default_rng(0)
    pmf = random_pmf(rng, 7)
    got = cn_update(pmf, 3, 0.05, 0.02)
    want = cn_oracle(pmf, 3, 0.05, 0.02)
    np.testing.assert_allclose(got, want, atol=1e-12)


# -- variable-node update ------------------------------------------------


def test_vn_point_masses_pass_through():
    B = delta(0, 7)
    C = delta(6, 7)
    msg, app = vn_update(B, C, 3, app_max_mag=15)
    np.testing.assert_allclose(msg, delta(6, 7), atol=0)
    np.testing.assert_allclose(app, delta(6, 15), atol=0)


def test_vn_saturation_chain():
    B = delta(6, 7)
    C = delta(6, 7)
    msg, app = vn_update(B, C, 3, app_max_mag=15)
    np.testing.assert_allclose(app, delta(15, 15), atol=0)
    np.testing.assert_allclose(msg, delta(7, 7), atol=0)


@pytest.mark.parametrize("dv", [2, 3])
@pytest.mark.parametrize(
    "model,p_add",
    [
        (None, 0.0),
        (InjectorModel.SIGN_PRESERVING, 0.05),
        (InjectorModel.SIGN_PRESERVING, 0.3),
        (InjectorModel.FULL_DEPTH, 0.05),
    ],
)
def test_vn_update_matches_enumeration(dv, model, p_add):
    rng = np.random.default_rng(dv * 10 + int(p_add * 100))
    Q, app_max = 3, 7
    B = random_pmf(rng, Q)
    C = random_pmf(rng, Q)
    inj = ErrorInjector(model, p_add, Alphabet(4)) if model else None
    got_msg, got_app = vn_update(B, C, dv, inj, app_max_mag=app_max)
    want_msg, want_app = vn_oracle(B, C, dv, inj, app_max)
    np.testing.assert_allclose(got_msg, want_msg, atol=1e-12)
    np.testing.assert_allclose(got_app, want_app, atol=1e-12)


@pytest.mark.parametrize("model", [InjectorModel.SIGN_PRESERVING, InjectorModel.FULL_DEPTH])
@pytest.mark.parametrize("p_add", [1e-5, 1e-3, 0.05])
def test_closed_form_injection_equals_matrix_path(model, p_add):
    rng = np.random.default_rng(17)
    B = random_pmf(rng, 7)
    C = random_pmf(rng, 7)
    for repr_ in SignedRepr:
        inj = ErrorInjector(model, p_add, Alphabet(5), repr_)
        msg_c, app_c = vn_update(B, C, 3, inj, injection="closed-form")
        msg_m, app_m = vn_update(B, C, 3, inj, injection="matrix")
        np.testing.assert_allclose(msg_c, msg_m, atol=1e-13)
        np.testing.assert_allclose(app_c, app_m, atol=1e-13)


def test_injection_matrix_identical_across_representations():
    for model in (InjectorModel.SIGN_PRESERVING, InjectorModel.FULL_DEPTH):
        mats = [
            ErrorInjector(model, 0.2, Alphabet(5), repr_).transition_matrix()
            for repr_ in SignedRepr
        ]
        np.testing.assert_allclose(mats[0], mats[1], atol=0)
        np.testing.assert_allclose(mats[0], mats[2], atol=0)


# -- error probability and traces ----------------------------------------


def test_error_probability_basics():
    assert error_probability(delta(1, 15)) == 0.0
    assert error_probability(delta(0, 15)) == 0.5


def test_iteration_zero_matches_input_error_prob():
    quant = QuantConfig(scale=1, bits=4)
    cfg = DEConfig(dv=3, dc=6, channel=Bsc(0.06), quant=quant, max_iters=5)
    trace = de_run(cfg)
    assert trace.pe[0] == input_error_prob(prior_pmf(cfg.channel, cfg.quant))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 6), st.integers(2, 4))
def test_updates_preserve_normalization(seed, dc, dv):
    rng = np.random.default_rng(seed)
    pmf = random_pmf(rng, 7)
    prior = random_pmf(rng, 7)
    out = cn_update(pmf, dc, rng.random() * 0.5, rng.random() * 0.5)
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(), 1.0, atol=1e-12)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, rng.random(), Alphabet(5))
    msg, app = vn_update(out, prior, dv, inj)
    assert np.all(msg >= 0) and np.all(app >= 0)
    np.testing.assert_allclose(msg.sum(), 1.0, atol=1e-12)
    np.testing.assert_allclose(app.sum(), 1.0, atol=1e-12)


def test_even_support_of_app_pmf_for_degree_three():
    # integer-scaled BSC prior, dv=3: the a-posteriori PMF lives on even
    # values; the odd boundary bins +-15 may hold folded saturation tails
    quant = QuantConfig(scale=1, bits=4)
    cfg = DEConfig(dv=3, dc=6, channel=Bsc(0.06), quant=quant, max_iters=30)
    trace = de_run(cfg, capture=range(1, 31))
    values = np.arange(-15, 16)
    interior_odd = (values % 2 != 0) & (np.abs(values) != 15)
    for it, pmf in trace.snapshots.items():
        assert np.all(pmf[interior_odd] == 0.0), f"iteration {it} leaked onto odd values"


def test_noiseless_de_reaches_known_fixed_points():
    quant = QuantConfig(scale=1, bits=4)
    below = de_run(DEConfig(dv=3, dc=6, channel=Bsc(0.03), quant=quant, max_iters=2000))
    assert below.kind == "converged" and below.pe_limit == 0.0
    above = de_run(DEConfig(dv=3, dc=6, channel=Bsc(0.06), quant=quant, max_iters=2000))
    assert above.kind == "converged"
    assert abs(above.pe_limit - 0.323) < 5e-3


def test_trace_respects_injection_floor():
    quant = QuantConfig(scale=1, bits=4)
    noise = NoiseParams(p_add=1e-3, adder_model=InjectorModel.SIGN_PRESERVING)
    cfg = DEConfig(dv=3, dc=6, channel=Bsc(0.06), quant=quant, noise=noise, max_iters=500)
    trace = de_run(cfg)
    bound = de_lower_bound(noise, cfg.app_max)
    assert np.all(trace.pe[1:] >= bound * (1 - 1e-9))


def test_de_lower_bound_values():
    sp = NoiseParams(p_add=1e-5, adder_model=InjectorModel.SIGN_PRESERVING)
    fd = NoiseParams(p_add=1e-5, adder_model=InjectorModel.FULL_DEPTH)
    assert abs(de_lower_bound(sp, 15) - 3.333e-7) < 1e-9
    assert abs(de_lower_bound(fd, 15) - 5.167e-6) < 1e-9
    assert de_lower_bound(NoiseParams(), 15) == 0.0


def test_config_validation():
    quant = QuantConfig(scale=1, bits=4)
    with pytest.raises(ValueError):
        DEConfig(dv=1, dc=6, channel=Bsc(0.05), quant=quant)
    with pytest.raises(ValueError):
        DEConfig(dv=3, dc=6, channel=Bsc(0.05), quant=quant, app_bits=4)
    with pytest.raises(ValueError):
        DEConfig(dv=3, dc=6, channel=Bsc(0.05), quant=quant, injection="magic")
