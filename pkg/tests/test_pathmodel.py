"""Path and TCP-level model tests: multi-hop expectations, fragment rounds,
segment totals, energy mapping, degeneracy handling."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lln_energy.framing import FrameLayout
from lln_energy.hopmodel import AttemptProbs, HopModel, HopParams
from lln_energy.pathmodel import (
    EnergyParams,
    PathScenario,
    fragment_failure_bits,
    fragment_failure_bits_closed,
    fragment_failure_bits_variant,
    path_bits,
    path_success_prob,
    segment_model,
    uniform_path,
)

LAYOUT = FrameLayout(frag_header_bits=136)


def make_hop(f, h_s, h_f):
    return HopModel(f=f, h_s=h_s, h_f=h_f, probs=AttemptProbs(f, 0.0, 1.0 - f))


class TestPathSuccess:
    def test_perfect_hops(self):
        assert path_success_prob([0.0, 0.0, 0.0]) == 1.0

    def test_single_hop(self):
        assert path_success_prob([0.3]) == pytest.approx(0.7)

    def test_three_hop_product(self):
        assert path_success_prob([0.1, 0.2, 0.5]) == pytest.approx(0.36)

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            path_success_prob([1.5])


class TestPathBits:
    def test_single_hop(self):
        e_s, e_f = path_bits([make_hop(0.25, 712.0, 2016.0)])
        assert e_s == 712.0
        assert e_f == 2016.0  # a single-hop loss burns all attempts on hop 1

    def test_lossless_failure_undefined(self):
        e_s, e_f = path_bits([make_hop(0.0, 712.0, 2016.0)] * 5)
        assert e_s == 5 * 712.0
        assert e_f is None

    def test_two_hop_hand_value(self):
        # f=(.5,.5), h_s=(10,10), h_f=(6,6): [6*.5 + 16*.25] / .75
        e_s, e_f = path_bits([make_hop(0.5, 10.0, 6.0)] * 2)
        assert e_s == 20.0
        assert e_f == pytest.approx(28.0 / 3.0, rel=1e-12)

    def test_dead_hop_short_circuits(self):
        dead = HopModel(f=1.0, h_s=None, h_f=6.0, probs=AttemptProbs(1, 0, 0),
                        degenerate=True)
        e_s, e_f = path_bits([make_hop(0.5, 10.0, 6.0), dead, make_hop(0.5, 10.0, 6.0)])
        assert e_s is None
        # failure happens on hop 1 w.p. .5, else surely on hop 2
        assert e_f == pytest.approx(6.0 * 0.5 + (10.0 + 6.0) * 0.5, rel=1e-12)


class TestFragmentFailure:
    def test_single_fragment_is_plain_failure(self):
        assert fragment_failure_bits(1, 0.5, 10.0, 20.0) == pytest.approx(20.0)

    def test_two_fragment_hand_value(self):
        got = fragment_failure_bits(2, 0.5, 10.0, 20.0)
        assert got == pytest.approx(100.0 / 3.0, rel=1e-12)

    @given(m=st.integers(1, 8), x=st.floats(1e-6, 1 - 1e-6))
    @settings(max_examples=60, deadline=None)
    def test_binomial_mean_identity(self, m, x):
        # sum_k C(m,k) k x^k (1-x)^(m-k) == m x  (e_f=1, e_s=0 isolates it)
        raw = sum(
            math.comb(m, k) * k * x**k * (1 - x) ** (m - k) for k in range(1, m + 1)
        )
        assert raw == pytest.approx(m * x, rel=1e-10)

    @given(
        m=st.integers(1, 8),
        q=st.floats(1e-9, 1 - 1e-9),
        e_s=st.floats(1.0, 1e6),
        e_f=st.floats(1.0, 1e6),
    )
    @settings(max_examples=120, deadline=None)
    def test_sum_matches_closed_form(self, m, q, e_s, e_f):
        direct = fragment_failure_bits(m, q, e_s, e_f)
        closed = fragment_failure_bits_closed(m, q, e_s, e_f)
        assert direct == pytest.approx(closed, rel=1e-12)

    def test_published_variant_is_not_the_exact_sum(self):
        # the variant replaces the exact m-1 exponent with m; it must match
        # its own definition and (for m >= 1, 0 < q < 1, e_s > 0) exceed the
        # exact unnormalized sum
        m, q, e_s, e_f = 4, 0.7, 10.0, 25.0
        variant = fragment_failure_bits_variant(m, q, e_s, e_f)
        assert variant == pytest.approx(
            m * (1 - q) * e_f + m * e_s * q * (1 - q**m), rel=1e-12
        )
        exact_raw = fragment_failure_bits(m, q, e_s, e_f) * (1 - q**m)
        assert variant > exact_raw

    def test_degenerate_endpoints(self):
        assert fragment_failure_bits(3, 0.0, 1.0, 2.0) is None
        assert fragment_failure_bits(3, 1.0, 1.0, 2.0) is None


class TestSegmentModel:
    def test_zero_noise_closed_form(self):
        sc = PathScenario(hops=uniform_path(5, 0.0, 3), layout=LAYOUT, mss_bytes=64)
        rep = segment_model(sc)
        assert rep.p_s == 1.0
        assert rep.s == 5 * (952 + 40) + 5 * (440 + 40) == 7360
        assert rep.segments == 800
        assert rep.total_bits == 5_888_000.0
        assert rep.total_joules == pytest.approx(5_888_000 * 0.66e-6, rel=1e-12)
        assert rep.flags == ()

    def test_total_decomposition(self):
        sc = PathScenario(hops=uniform_path(5, 3e-4, 3), layout=LAYOUT, mss_bytes=512)
        rep = segment_model(sc)
        assert rep.s == pytest.approx(
            rep.s_f * (1.0 / rep.p_s - 1.0) + rep.s_s, rel=1e-12
        )
        assert rep.s >= rep.s_s
        assert rep.total_bits == pytest.approx(rep.segments * rep.s, rel=1e-12)

    @given(ber=st.floats(0.0, 3e-3), mss=st.sampled_from([64, 512]))
    @settings(max_examples=40, deadline=None)
    def test_cost_at_least_lossless(self, ber, mss):
        sc = PathScenario(hops=uniform_path(5, ber, 3), layout=LAYOUT, mss_bytes=mss)
        rep = segment_model(sc)
        if rep.s is not None:
            assert rep.s >= rep.s_s - 1e-9

    def test_hop_permutation_invariants(self):
        hops = (HopParams(1e-4, 3), HopParams(5e-4, 2), HopParams(3e-4, 4))
        a = segment_model(PathScenario(hops=hops, layout=LAYOUT, mss_bytes=512))
        b = segment_model(
            PathScenario(hops=hops[::-1], layout=LAYOUT, mss_bytes=512)
        )
        assert a.q_s == pytest.approx(b.q_s, rel=1e-12)
        assert a.p_s == pytest.approx(b.p_s, rel=1e-12)
        assert a.e_s == pytest.approx(b.e_s, rel=1e-12)
        assert a.s_s == pytest.approx(b.s_s, rel=1e-12)
        # e_f is direction-dependent by design; no assertion on it

    def test_energy_linear_and_argmin_invariant(self):
        sc64 = PathScenario(hops=uniform_path(5, 4e-4, 3), layout=LAYOUT, mss_bytes=64)
        sc512 = replace(sc64, mss_bytes=512)
        base = EnergyParams()
        scaled = EnergyParams(tx_uj_per_bit=0.72, rx_uj_per_bit=0.63, n_neighbors=2)
        for sc in (sc64, sc512):
            e1 = segment_model(sc, energy=base).total_joules
            e3 = segment_model(sc, energy=scaled).total_joules
            assert e3 == pytest.approx(3 * e1, rel=1e-12)
        pick = lambda en: min(
            (64, 512),
            key=lambda m: segment_model(replace(sc64, mss_bytes=m), energy=en).total_joules,
        )
        assert pick(base) == pick(scaled)

    def test_divergent_scenario_flagged_not_infinite(self):
        dead = PathScenario(
            hops=(HopParams(0.5, 1),), layout=LAYOUT, mss_bytes=512
        )
        rep = segment_model(dead)
        if rep.p_s == 0.0:
            assert rep.diverges and rep.total_bits is None
        else:
            assert rep.total_bits is not None and math.isfinite(rep.total_bits)

    def test_fully_dead_hop(self):
        # an uncorrectable always-failing hop: explicit flags, no infinities
        sc = PathScenario(
            hops=(HopParams(0.99999999999999994, 1),), layout=LAYOUT, mss_bytes=64
        )
        rep = segment_model(sc)
        if rep.q_s == 0.0:
            assert rep.diverges
            assert rep.total_bits is None and rep.total_joules is None
            assert rep.s_f is not None  # failed rounds still cost real bits

    def test_record_round_trip_fields(self):
        sc = PathScenario(hops=uniform_path(3, 1e-4, 2), layout=LAYOUT, mss_bytes=64)
        rec = segment_model(sc).to_record(per_hop=True)
        for key in ("q_s", "e_s", "i_f", "p_s", "s", "total_bits", "flags"):
            assert key in rec
        assert len(rec["f_data"]) == 3
        assert rec["ber"] == 1e-4 and rec["r"] == 2
