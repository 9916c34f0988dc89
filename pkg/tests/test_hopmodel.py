"""One-hop model tests: binomial tail, attempt outcomes, ARQ expectations.

Frozen reference values were computed with mpmath at 50 decimal digits
(see oracle helpers below); the ARQ expectation is checked against a
brute-force enumeration of every attempt sequence, which knows nothing
about the closed form.
"""

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lln_energy.hopmodel import (
    AttemptProbs,
    HopParams,
    attempt_probs,
    expected_success_bits,
    frame_error_prob,
    hop_model,
)


def enum_success_bits(pf, pp, r, d, a):
    """Brute-force E[bits | data delivered] over all attempt sequences.

    Attempts stop at the first success or after r tries; delivery means at
    least one partial or success. Every attempt sends d bits; every
    attempt whose data arrived triggers an a-bit link ACK.
    """
    ps = 1.0 - pf - pp
    total = 0.0
    p_delivered = 0.0
    for seq in itertools.product("FP", repeat=r):  # no outright success
        p = math.prod(pf if c == "F" else pp for c in seq)
        arrived = seq.count("P")
        if arrived == 0:
            continue
        total += p * (r * d + arrived * a)
        p_delivered += p
    for k in range(1, r + 1):  # first success at attempt k
        for seq in itertools.product("FP", repeat=k - 1):
            p = math.prod(pf if c == "F" else pp for c in seq) * ps
            arrived = seq.count("P") + 1
            total += p * (k * d + arrived * a)
            p_delivered += p
    return total / p_delivered


class TestFrameErrorProb:
    def test_no_errors_possible(self):
        assert frame_error_prob(952, 0, 0.0) == 0.0

    def test_everything_correctable(self):
        assert frame_error_prob(10, 10, 0.5) == 0.0

    def test_uncoded_frame_reference(self):
        # 1 - (1-3e-4)^952 evaluated with mpmath (50 digits)
        assert frame_error_prob(952, 0, 3e-4) == pytest.approx(
            0.2484690216153075, rel=1e-13
        )

    def test_single_correction_hand_sum(self):
        # 1 - (0.9^8 + 8*0.1*0.9^7), exact decimal arithmetic
        assert frame_error_prob(8, 1, 0.1) == pytest.approx(0.18689527, rel=1e-12)

    def test_matches_scipy_tail(self):
        binom = pytest.importorskip("scipy.stats").binom
        for d, c, b in [
            (952, 0, 3e-4),
            (1016, 12, 1e-3),
            (2000, 40, 5e-2),
            (672, 3, 1e-6),
            (441, 2, 0.4),
            (2000, 900, 0.5),
        ]:
            assert frame_error_prob(d, c, b) == pytest.approx(
                float(binom.sf(c, d, b)), rel=1e-9, abs=1e-300
            )

    def test_tiny_tail_keeps_precision(self):
        # P(X > 40) for X ~ Bin(1016, 1e-4): far below double-rounding of 1-CDF
        binom = pytest.importorskip("scipy.stats").binom
        p = frame_error_prob(1016, 40, 1e-4)
        assert 0 < p < 1e-60
        assert p == pytest.approx(float(binom.sf(40, 1016, 1e-4)), rel=1e-6)

    @given(
        d=st.integers(1, 3000),
        c=st.integers(0, 100),
        b=st.floats(1e-9, 0.99),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_frame_size_and_correction(self, d, c, b):
        c = min(c, d)
        p = frame_error_prob(d, c, b)
        assert 0.0 <= p <= 1.0
        assert frame_error_prob(d + 37, c, b) >= p - 1e-12
        if c >= 1:
            assert frame_error_prob(d, c - 1, b) >= p - 1e-12

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            frame_error_prob(0, 0, 0.1)
        with pytest.raises(ValueError):
            frame_error_prob(10, 11, 0.1)
        with pytest.raises(ValueError):
            frame_error_prob(10, 0, 1.0)


class TestAttemptProbs:
    def test_noiseless(self):
        p = attempt_probs(952, 0, 40, 0.0)
        assert (p.p_fail, p.p_partial, p.p_succ) == (0.0, 0.0, 1.0)

    def test_fully_correctable_data(self):
        p = attempt_probs(100, 100, 40, 0.01)
        assert p.p_fail == 0.0
        assert p.p_partial == pytest.approx(1 - 0.99**40, rel=1e-12)
        assert p.p_succ == pytest.approx(0.99**40, rel=1e-12)

    def test_reference_frame(self):
        # mpmath (50 digits) on the 952/40-bit frame pair at B = 3e-4
        p = attempt_probs(952, 0, 40, 3e-4)
        assert p.p_fail == pytest.approx(0.2484690216153075, rel=1e-13)
        assert p.p_partial == pytest.approx(0.008965814189209495, rel=1e-12)
        assert p.p_succ == pytest.approx(0.7425651641954830, rel=1e-12)

    @given(
        d=st.integers(1, 2000),
        c=st.integers(0, 50),
        a=st.integers(1, 200),
        b=st.floats(0.0, 0.9),
    )
    @settings(max_examples=80, deadline=None)
    def test_closure(self, d, c, a, b):
        c = min(c, d)
        p = attempt_probs(d, c, a, b)
        assert p.p_fail + p.p_partial + p.p_succ == pytest.approx(1.0, abs=1e-12)
        for v in (p.p_fail, p.p_partial, p.p_succ):
            assert 0.0 <= v <= 1.0


class TestHopModel:
    def test_noiseless_single_attempt_suffices(self):
        hm = hop_model(952, 0, 40, HopParams(ber=0.0, r=3))
        assert hm.f == 0.0
        assert hm.h_s == 992.0
        assert hm.h_f == 3 * 952.0
        assert not hm.degenerate

    def test_single_attempt_always_costs_one_exchange(self):
        # r=1 and delivery implies exactly one data frame and one ACK
        # (ber kept where (1-ber)^500 is still representable > eps)
        for ber in (1e-4, 0.01, 0.05):
            hm = hop_model(500, 0, 40, HopParams(ber=ber, r=1))
            assert hm.h_s == pytest.approx(540.0, rel=1e-12)

    def test_practically_dead_hop_is_degenerate(self):
        # delivery probability ~5.7e-78 rounds p_fail to exactly 1.0
        hm = hop_model(500, 0, 40, HopParams(ber=0.3, r=1))
        assert hm.probs.p_fail == 1.0
        assert hm.degenerate and hm.h_s is None

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_matches_enumeration(self, r):
        d, a = 672, 40
        grid = [0.05, 0.2, 0.4, 0.6, 0.8]
        for pf in grid:
            for pp in grid:
                if pf + pp >= 1.0:
                    continue
                probs = AttemptProbs(pf, pp, 1.0 - pf - pp)
                got = expected_success_bits(probs, r, d, a)
                want = enum_success_bits(pf, pp, r, d, a)
                assert got == pytest.approx(want, rel=1e-10)

    @given(
        d=st.integers(1, 2000),
        a=st.integers(1, 100),
        ber=st.floats(0.0, 0.2),
        r=st.integers(1, 7),
    )
    @settings(max_examples=60, deadline=None)
    def test_success_bits_bounds(self, d, a, ber, r):
        hm = hop_model(d, 0, a, HopParams(ber=ber, r=r))
        if not hm.degenerate:
            assert d <= hm.h_s <= r * (d + a) + 1e-9

    def test_failure_prob_decreases_with_attempts(self):
        prev = None
        for r in range(1, 8):
            hm = hop_model(952, 0, 40, HopParams(ber=3e-4, r=r))
            if prev is not None:
                assert hm.f < prev
                assert hm.h_f > (r - 1) * 952 - 1e-9
            prev = hm.f

    def test_degenerate_hop_flagged(self):
        # c = 0 and ber so high every frame is corrupt beyond repair
        hm = hop_model(4, 0, 1, HopParams(ber=0.999999999999999, r=2))
        if hm.probs.p_fail == 1.0:
            assert hm.degenerate and hm.h_s is None
        else:  # platform rounding kept it barely below 1
            assert not hm.degenerate

    def test_rejects_bad_hop_params(self):
        with pytest.raises(ValueError):
            HopParams(ber=1.0, r=3)
        with pytest.raises(ValueError):
            HopParams(ber=0.1, r=0)
