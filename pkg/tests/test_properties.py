import math

from hypothesis import given, settings
from hypothesis import strategies as st

from vanetroute.channel import NakagamiParams, mean_rx_power, phy_preset
from vanetroute.config import ScenarioConfig, dump_config, parse_config
from vanetroute.core import Engine
from vanetroute.mac import BROADCAST, Frame, FrameKind, TxQueue, contention_window, mac_preset
from vanetroute.mobility import GaussianDistanceModel, distance_cdf, distance_pdf, efficiency
from vanetroute.routing import PROTOCOLS, olsr_select_mprs

means = st.floats(-500, 500, allow_nan=False)
variances = st.floats(1e-3, 1e5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(means, variances, st.floats(0, 2000), st.floats(0, 2000))
def test_cdf_bounded_and_monotone(mean, var, r1, r2):
    m = GaussianDistanceModel(mean, var)
    lo, hi = sorted((r1, r2))
    a, b = distance_cdf(m, lo), distance_cdf(m, hi)
    assert 0.0 <= a <= b + 1e-12 <= 1.0 + 1e-12
    assert efficiency(m, hi) == 100.0 * distance_cdf(m, hi)


@given(means, variances, st.floats(0, 1e3))
def test_pdf_symmetric(mean, var, delta):
    m = GaussianDistanceModel(mean, var)
    assert math.isclose(distance_pdf(m, mean + delta), distance_pdf(m, mean - delta), rel_tol=1e-12, abs_tol=1e-300)


@given(st.lists(st.floats(0, 100, allow_nan=False), max_size=60))
def test_events_pop_in_time_then_insertion_order(times):
    eng = Engine()
    fired = []
    for k, t in enumerate(times):
        eng.schedule(t, fired.append, (t, k))
    eng.run_until(100)
    assert fired == sorted(fired)


@given(st.sampled_from(["802.11", "802.11p"]), st.integers(0, 40))
def test_contention_window_monotone_and_capped(kind, attempt):
    m = mac_preset(kind)
    cw = contention_window(m, attempt)
    assert m.cw_min <= cw <= m.cw_max
    assert contention_window(m, attempt + 1) >= cw


@given(st.lists(st.booleans(), max_size=120), st.integers(1, 60))
def test_queue_capacity_and_priority(kinds, cap):
    q = TxQueue(cap)
    for is_ctrl in kinds:
        q.enqueue(Frame(FrameKind.CONTROL if is_ctrl else FrameKind.DATA, 0, BROADCAST, 10, 0.0))
        assert len(q) <= cap
    out = []
    while (f := q.dequeue()) is not None:
        out.append(f.kind)
    assert out == sorted(out, key=lambda k: k is not FrameKind.CONTROL)
    assert q.accepted + q.dropped == q.offered == len(kinds)


@given(st.sampled_from(["802.11", "802.11p"]), st.floats(1.0, 5000.0), st.floats(1.001, 3.0))
def test_mean_power_decreases_with_distance(kind, d, factor):
    phy, naka = phy_preset(kind), NakagamiParams()
    assert mean_rx_power(phy, naka, d * factor) < mean_rx_power(phy, naka, d)


@given(st.integers(2, 200), st.floats(0, 40), st.sampled_from(PROTOCOLS), st.sampled_from(["802.11", "802.11p"]),
       st.floats(1, 1000), st.integers(0, 50), st.integers(0, 2**63 - 1),
       st.floats(0.05, 5.0))
def test_config_round_trip(n, speed, proto, mac, sim_time, flows, seed, hello):
    cfg = ScenarioConfig(n_nodes=n, speed_mps=speed, protocol=proto, mac_variant=mac, sim_time=sim_time,
                         n_flows=flows, seed=seed).with_overrides(**{"routing.olsr.hello_interval": hello})
    assert parse_config(dump_config(cfg)) == cfg


@given(st.dictionaries(st.integers(1, 8), st.sets(st.integers(20, 35), max_size=10), min_size=1, max_size=8))
def test_mpr_covers_strict_two_hop(two_hop):
    one = set(two_hop)
    mprs = olsr_select_mprs(one, two_hop)
    strict = set().union(*two_hop.values()) - one
    reach = set().union(*(two_hop[m] for m in mprs)) if mprs else set()
    assert strict <= reach
    assert mprs <= one
