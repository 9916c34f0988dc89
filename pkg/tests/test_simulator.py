"""Monte Carlo simulator tests: exactness, determinism, statistical agreement."""

import json

import pytest

from lln_energy.framing import FrameLayout
from lln_energy.hopmodel import HopParams
from lln_energy.pathmodel import PathScenario, segment_model, uniform_path
from lln_energy.simulator import SimConfig, TruncationWarning, simulate

LAYOUT = FrameLayout(frag_header_bits=136)


def default_scenario(ber=3e-4, r=3, mss=64, h=5, transfer=51200):
    return PathScenario(
        hops=uniform_path(h, ber, r), layout=LAYOUT, mss_bytes=mss,
        transfer_bytes=transfer,
    )


def test_noiseless_transfer_is_exact():
    rep = simulate(SimConfig(scenario=default_scenario(ber=0.0), replications=5))
    assert rep.mean_total_bits == 5_888_000.0
    assert rep.stddev_total_bits == 0.0
    assert rep.stderr_total_bits == 0.0
    assert rep.counters.segment_retx == 0.0
    assert not rep.truncated


def test_deterministic_and_parallel_invariant():
    cfg = SimConfig(scenario=default_scenario(mss=512), replications=60, master_seed=9)
    records = [
        json.dumps(simulate(c).to_record(), sort_keys=True)
        for c in (cfg, cfg, SimConfig(**{**cfg.__dict__, "workers": 3}))
    ]
    assert records[0] == records[1] == records[2]


def test_different_seeds_differ():
    a = simulate(SimConfig(scenario=default_scenario(), replications=20, master_seed=1))
    b = simulate(SimConfig(scenario=default_scenario(), replications=20, master_seed=2))
    assert a.mean_total_bits != b.mean_total_bits


def test_geometric_round_count_single_hop():
    """h=1, r=1: segment rounds are Geometric(q_s * q_ack).

    With one attempt per round the expected data-frame sends per segment
    are 1/(q_s * q_ack); ber is chosen so the data frame delivers with
    probability exactly 0.5. Bound: 4 combined standard errors of the
    geometric mean over all simulated segments.
    """
    lay = FrameLayout(
        ll_data_header_bits=0, ll_ack_bits=1, frag_header_bits=0,
        ip_header_bits=0, tcp_header_bits=1,
    )
    ber = 1.0 - 0.5 ** (1.0 / 9.0)  # data frame d = 8*1+1 = 9 bits
    sc = PathScenario(
        hops=(HopParams(ber=ber, r=1),), layout=lay, mss_bytes=1, transfer_bytes=50
    )
    q_s = 0.5
    q_ack = (1.0 - ber) ** 1  # 1-bit TCP-ACK frame
    expect = 1.0 / (q_s * q_ack)
    reps = 400
    rep = simulate(SimConfig(scenario=sc, replications=reps, master_seed=13))
    n_draws = 50 * reps  # independent geometric segment counts
    got = rep.counters.segment_sends / 50  # mean sends per segment
    se = (expect * (expect - 1.0) / n_draws) ** 0.5
    assert abs(got - expect) <= 4 * se


def test_sim_matches_model_default_config():
    sc = default_scenario()
    model = segment_model(sc)
    rep = simulate(SimConfig(scenario=sc, replications=600, master_seed=21, workers=2))
    assert abs(rep.mean_total_bits - model.total_bits) <= 3 * rep.stderr_total_bits


def test_bit_and_frame_fidelity_agree():
    sc = default_scenario(mss=512)
    frame = simulate(SimConfig(scenario=sc, replications=300, master_seed=5))
    bit = simulate(
        SimConfig(scenario=sc, replications=300, master_seed=5, fidelity="bit")
    )
    combined = (frame.stderr_total_bits**2 + bit.stderr_total_bits**2) ** 0.5
    assert abs(frame.mean_total_bits - bit.mean_total_bits) <= 3 * combined


def test_batched_estimator_agrees_with_direct():
    sc = default_scenario(ber=8e-4, mss=512)  # lossy enough to be interesting
    direct = simulate(
        SimConfig(scenario=sc, replications=150, master_seed=3, method="direct",
                  workers=2)
    )
    batched = simulate(
        SimConfig(scenario=sc, replications=150, master_seed=3, method="batched")
    )
    assert batched.method == "batched" and "batched_estimator" in batched.flags
    combined = (direct.stderr_total_bits**2 + batched.stderr_total_bits**2) ** 0.5
    assert abs(direct.mean_total_bits - batched.mean_total_bits) <= 3 * combined


def test_auto_method_picks_batched_for_heavy_tails():
    # round success ~1e-12: ~1e12 rounds per segment, hopeless to replay
    # directly; the default 1e6-round cap must be lifted to sample the
    # unbounded process (free in batched mode)
    sc = default_scenario(ber=8e-4, r=1, mss=512)
    rep = simulate(
        SimConfig(scenario=sc, replications=50, master_seed=4, round_cap=10**15)
    )
    assert rep.method == "batched"
    assert not rep.truncated
    assert rep.mean_total_bits > 1e14  # astronomically expensive, still finite


def test_heterogeneous_attempt_limits_match_model():
    from lln_energy.pathmodel import PathScenario as PS

    sc = PS(
        hops=(HopParams(4e-4, 1), HopParams(4e-4, 3), HopParams(4e-4, 2)),
        layout=LAYOUT, mss_bytes=512,
    )
    model = segment_model(sc)
    rep = simulate(SimConfig(scenario=sc, replications=400, master_seed=31,
                             workers=2))
    assert abs(rep.mean_total_bits - model.total_bits) <= 3 * rep.stderr_total_bits


def test_counter_consistency():
    sc = default_scenario(ber=6e-4, mss=512)
    rep = simulate(SimConfig(scenario=sc, replications=100, master_seed=17))
    c = rep.counters
    assert c.duplicates_suppressed <= c.partial_failures
    assert c.segment_retx == pytest.approx(c.segment_sends - rep.segments)
    assert c.hop_drops <= c.link_failures
    assert c.link_attempts > 0


def test_segment_cap_extrapolates_linearly():
    sc = default_scenario(mss=512)
    full = simulate(SimConfig(scenario=sc, replications=200, master_seed=8))
    capped = simulate(
        SimConfig(scenario=sc, replications=200, master_seed=8, segment_cap=20)
    )
    assert capped.segments_simulated == 20 and capped.segments == 100
    assert "extrapolated" in capped.flags
    combined = (full.stderr_total_bits**2 + capped.stderr_total_bits**2) ** 0.5
    assert abs(full.mean_total_bits - capped.mean_total_bits) <= 4 * combined


def test_round_cap_truncates_with_warning():
    sc = default_scenario(ber=8e-4, r=1, mss=512, transfer=1024)
    cfg = SimConfig(
        scenario=sc, replications=3, master_seed=1, round_cap=50, method="direct"
    )
    with pytest.warns(TruncationWarning):
        rep = simulate(cfg)
    assert rep.truncated and "truncated" in rep.flags


def test_rejects_bad_config():
    with pytest.raises(ValueError):
        SimConfig(scenario=default_scenario(), replications=0)
    with pytest.raises(ValueError):
        SimConfig(scenario=default_scenario(), fidelity="frames")
    with pytest.raises(ValueError):
        SimConfig(scenario=default_scenario(), fidelity="bit", method="batched")
    with pytest.raises(ValueError):
        SimConfig(scenario=default_scenario(), master_seed=-1)
