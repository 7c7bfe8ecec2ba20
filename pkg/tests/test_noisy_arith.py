import itertools

import numpy as np
import pytest

from minsumlab.noisy_arith import (
    Alphabet,
    ErrorInjector,
    InjectorModel,
    NoiseParams,
    SignedRepr,
    decode,
    encode,
    fold_nested,
    fold_ordered,
    invalid_pattern,
    noisy_add,
    noisy_min,
    noisy_xor,
    saturate,
)

REPRS = list(SignedRepr)


def test_encode_decode_round_trip_every_value():
    for bits in range(2, 7):
        alph = Alphabet(bits)
        for repr_ in REPRS:
            seen = set()
            for v in alph.values():
                pat = encode(int(v), repr_, bits)
                assert 0 <= pat < (1 << bits)
                assert decode(pat, repr_, bits) == v
                seen.add(pat)
            # exactly one pattern left over, the invalid one
            assert len(seen) == alph.size == (1 << bits) - 1
            leftover = set(range(1 << bits)) - seen
            assert leftover == {invalid_pattern(repr_, bits)}


def test_saturate_examples():
    assert saturate(20, Alphabet(5)) == 15
    assert saturate(-16, Alphabet(5)) == -15
    assert saturate(3, Alphabet(4)) == 3
    np.testing.assert_array_equal(saturate(np.array([-9, 9, 2]), Alphabet(4)), [-7, 7, 2])


def test_inject_known_bit_patterns():
    # -11 = 10101, e = 6 = 00110 -> 10011 = -13 under two's complement
    for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
        inj = ErrorInjector(model, 0.1, Alphabet(5))
        assert inj.inject(-11, 6, coin=0) == -13
    # 3 = 0011, e = -5 = 1011 -> 1000 which is the unused pattern, so output e
    inj = ErrorInjector(InjectorModel.FULL_DEPTH, 0.1, Alphabet(4))
    assert inj.inject(3, -5) == -5


def test_inject_zero_error_is_identity():
    for bits in (3, 4, 5):
        for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
            for repr_ in REPRS:
                inj = ErrorInjector(model, 0.5, Alphabet(bits), repr_)
                for v in Alphabet(bits).values():
                    assert inj.inject(int(v), 0, coin=1) == v


def test_inject_zero_value_uses_coin():
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.5, Alphabet(4))
    assert inj.inject(0, 5, coin=1) == 5
    assert inj.inject(0, 5, coin=0) == -5
    with pytest.raises(ValueError):
        inj.inject(0, 5)


def test_inject_rejects_out_of_range_error():
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.5, Alphabet(4))
    with pytest.raises(ValueError):
        inj.inject(3, -2, coin=0)
    full = ErrorInjector(InjectorModel.FULL_DEPTH, 0.5, Alphabet(4))
    with pytest.raises(ValueError):
        full.inject(3, 9)


def test_outputs_always_in_alphabet():
    for bits in range(2, 7):
        alph = Alphabet(bits)
        for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
            for repr_ in REPRS:
                inj = ErrorInjector(model, 0.3, alph, repr_)
                for v in alph.values():
                    for e in inj.error_values():
                        for coin in (0, 1):
                            out = inj.inject(int(v), int(e), coin)
                            assert -alph.max_mag <= out <= alph.max_mag


def test_error_distribution_shapes():
    alph = Alphabet(4)
    fd = ErrorInjector(InjectorModel.FULL_DEPTH, 0.3, alph)
    assert len(fd.error_values()) == 15
    np.testing.assert_allclose(fd.error_pmf().sum(), 1.0, rtol=0, atol=5e-16)
    assert np.isclose(fd.error_pmf()[fd.error_values() != 0], 0.3 / 14).all()
    sp = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.3, alph)
    assert list(sp.error_values()) == list(range(8))
    assert np.isclose(sp.error_pmf()[1:], 0.3 / 7).all()
    osw = ErrorInjector(InjectorModel.OUTPUT_SWITCHING, 0.2)
    np.testing.assert_allclose(osw.error_pmf(), [0.8, 0.2])


def test_sample_error_zero_probability():
    inj = ErrorInjector(InjectorModel.FULL_DEPTH, 0.0, Alphabet(4))
    rng = np.random.default_rng(0)
    assert all(inj.sample_error(rng) == 0 for _ in range(100))


def test_empirical_injection_probability_matches_p0():
    # relative frequency of a changed output under uniform inputs equals p0
    rng = np.random.default_rng(42)
    n = 10**6
    for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
        inj = ErrorInjector(model, 0.3, Alphabet(4))
        v = rng.integers(-7, 8, n)
        out = inj.inject_array(v, inj.sample_errors(rng, n), rng.integers(0, 2, n))
        freq = np.mean(out != v)
        sigma = np.sqrt(0.3 * 0.7 / n)
        assert abs(freq - 0.3) < 3 * sigma


def test_noisy_add_noiseless_cases():
    rng = np.random.default_rng(0)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.0, Alphabet(5))
    assert noisy_add(7, 5, inj, rng) == 12
    assert noisy_add(14, 8, inj, rng) == 15


def test_noisy_add_sign_preserving_property():
    rng = np.random.default_rng(3)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 1.0, Alphabet(5))
    x = rng.integers(-15, 16, 10**5)
    y = rng.integers(-15, 16, 10**5)
    s = np.clip(x + y, -15, 15)
    out = inj.inject_array(s, inj.sample_errors(rng, len(s)), rng.integers(0, 2, len(s)))
    assert np.all(s * out >= 0)


def test_noisy_min():
    rng = np.random.default_rng(0)
    assert noisy_min(3, 5, 0.0, rng) == 3
    assert noisy_min(3, 5, 1.0, rng) == 5
    assert all(noisy_min(4, 4, p, rng) == 4 for p in (0.0, 0.5, 1.0))


def test_noisy_xor_encodings():
    rng = np.random.default_rng(0)
    assert noisy_xor(+1, -1, 0.0, rng) == -1
    assert noisy_xor(+1, +1, 1.0, rng) == -1  # both-nonzero reads as signs
    assert noisy_xor(0, 1, 0.0, rng) == 1
    assert noisy_xor(1, 1, 0.0, rng) == 1  # sign mode: (+1)*(+1)
    assert noisy_xor(0, 0, 1.0, rng) == 1
    with pytest.raises(ValueError):
        noisy_xor(0, -1, 0.0, rng)


def test_noisy_xor_flip_rate():
    rng = np.random.default_rng(1)
    p = 0.2
    flips = sum(noisy_xor(1, -1, p, rng) == 1 for _ in range(2000))
    # scalar loop is slow; use a modest sample with a generous band
    assert abs(flips / 2000 - p) < 4 * np.sqrt(p * (1 - p) / 2000)


def test_fold_ordered_and_nested():
    rng = np.random.default_rng(0)
    wide = Alphabet(8)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.0, wide)
    add = lambda a, b: noisy_add(a, b, inj, rng)
    for perm in itertools.permutations([1, 2, 3]):
        assert fold_ordered(add, perm) == 6
    assert fold_nested(add, [5], rng) == 5
    with pytest.raises(ValueError):
        fold_nested(add, [], rng)


def test_fold_order_matters_under_saturation():
    rng = np.random.default_rng(0)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.0, Alphabet(4))
    add = lambda a, b: noisy_add(a, b, inj, rng)
    assert fold_ordered(add, [7, 7, -7]) == 0
    assert fold_ordered(add, [7, -7, 7]) == 7


def test_fold_nested_distribution():
    # exact enumeration: 2 of 6 orders give 0, the rest give 7
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.0, Alphabet(4))
    rng = np.random.default_rng(0)
    add = lambda a, b: noisy_add(a, b, inj, rng)
    outcomes = [fold_ordered(add, p) for p in itertools.permutations([7, 7, -7])]
    assert sorted(outcomes).count(0) == 2 and sorted(outcomes).count(7) == 4
    # and the randomized fold matches the enumerated law
    draws = np.array([fold_nested(add, [7, 7, -7], rng) for _ in range(3000)])
    frac0 = np.mean(draws == 0)
    assert abs(frac0 - 1 / 3) < 4 * np.sqrt((1 / 3) * (2 / 3) / 3000)


def test_symmetry_distributional_all_reprs():
    # mirrored inputs produce mirrored output distributions
    for bits in range(2, 7):
        for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
            for repr_ in REPRS:
                inj = ErrorInjector(model, 0.3, Alphabet(bits), repr_)
                T = inj.transition_matrix()
                np.testing.assert_allclose(T, np.flip(np.flip(T, 0), 1), atol=1e-15)
                np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-12)
                assert inj.is_symmetric()


def test_highly_symmetric_is_pointwise_for_sm_and_oc():
    # the pointwise mirror identity holds everywhere for the sign-preserving
    # model; for full-depth it holds except where the XOR lands on the unused
    # pattern (whose remap rule is not odd), while the induced distributions
    # mirror exactly (test_symmetry_distributional_all_reprs)
    for bits in (3, 4, 5):
        alph = Alphabet(bits)
        for repr_ in (SignedRepr.SIGN_MAGNITUDE, SignedRepr.ONES_COMPLEMENT):
            sp = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.3, alph, repr_)
            assert sp.is_highly_symmetric()
            for v in alph.values():
                if v == 0:
                    continue
                for e in sp.error_values():
                    assert sp.inject(int(-v), int(e), 0) == -sp.inject(int(v), int(e), 0)
            fd = ErrorInjector(InjectorModel.FULL_DEPTH, 0.3, alph, repr_)
            bad = [
                (v, e)
                for v in alph.values()
                if v != 0
                for e in fd.error_values()
                if fd.inject(int(-v), int(e), 0) != -fd.inject(int(v), int(e), 0)
            ]
            # only the 2*max_mag unused-pattern pairs (v, -v)
            assert all(e == -v for v, e in bad)
            assert len(bad) == 2 * alph.max_mag


def test_twos_complement_not_highly_symmetric():
    inj = ErrorInjector(InjectorModel.FULL_DEPTH, 0.3, Alphabet(4), SignedRepr.TWOS_COMPLEMENT)
    assert not inj.is_highly_symmetric()
    alph = Alphabet(4)
    witnesses = [
        (v, e)
        for v in alph.values()
        if v != 0
        for e in inj.error_values()
        if e != 0 and inj.inject(int(-v), int(e), 0) != -inj.inject(int(v), int(e), 0)
    ]
    assert witnesses  # pointwise mirror identity genuinely fails


def test_shallow_xor_depth_breaks_twos_complement_symmetry():
    for bits in (4, 5):
        inj = ErrorInjector(InjectorModel.XOR_DEPTH, 0.3, Alphabet(bits), depth=1)
        assert not inj.is_symmetric()
        T = inj.transition_matrix()
        assert not np.allclose(T, np.flip(np.flip(T, 0), 1), atol=1e-15)
        # but stays highly symmetric under sign-magnitude and ones-complement
        for repr_ in (SignedRepr.SIGN_MAGNITUDE, SignedRepr.ONES_COMPLEMENT):
            inj2 = ErrorInjector(InjectorModel.XOR_DEPTH, 0.3, Alphabet(bits), repr_, depth=1)
            T2 = inj2.transition_matrix()
            np.testing.assert_allclose(T2, np.flip(np.flip(T2, 0), 1), atol=1e-15)


def test_sign_preservation_exhaustive():
    for bits in range(2, 7):
        alph = Alphabet(bits)
        inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.7, alph)
        for v in alph.values():
            for e in inj.error_values():
                for coin in (0, 1):
                    assert v * inj.inject(int(v), int(e), coin) >= 0


def test_zero_noise_reduces_to_noiseless_operators():
    rng = np.random.default_rng(0)
    alph = Alphabet(5)
    for model in (InjectorModel.FULL_DEPTH, InjectorModel.SIGN_PRESERVING):
        inj = ErrorInjector(model, 0.0, alph)
        for x in (-15, -3, 0, 9, 15):
            for y in (-12, 0, 7):
                assert noisy_add(x, y, inj, rng) == max(-15, min(15, x + y))
    assert noisy_min(2, 9, 0.0, rng) == 2
    assert noisy_xor(-1, -1, 0.0, rng) == 1


def test_transition_matrix_matches_sampling():
    rng = np.random.default_rng(5)
    inj = ErrorInjector(InjectorModel.SIGN_PRESERVING, 0.4, Alphabet(3))
    T = inj.transition_matrix()
    n = 200_000
    v = np.full(n, 2)
    out = inj.inject_array(v, inj.sample_errors(rng, n), rng.integers(0, 2, n))
    hist = np.bincount(out + 3, minlength=7) / n
    np.testing.assert_allclose(hist, T[2 + 3], atol=5e-3)


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(p_add=1.5)
    with pytest.raises(ValueError):
        NoiseParams(adder_model=InjectorModel.OUTPUT_SWITCHING)
    assert NoiseParams().is_noiseless
    assert not NoiseParams(p_xor=0.1).is_noiseless


def test_injector_validation():
    with pytest.raises(ValueError):
        ErrorInjector(InjectorModel.FULL_DEPTH, 0.1, None)
    with pytest.raises(ValueError):
        ErrorInjector(InjectorModel.FULL_DEPTH, 0.1, Alphabet(4), depth=2)
    with pytest.raises(ValueError):
        ErrorInjector(InjectorModel.XOR_DEPTH, 0.1, Alphabet(4), depth=4)
    with pytest.raises(ValueError):
        ErrorInjector(InjectorModel.XOR_DEPTH, 0.1, Alphabet(4))
    assert ErrorInjector(InjectorModel.XOR_DEPTH, 0.1, Alphabet(4), depth=3).model
