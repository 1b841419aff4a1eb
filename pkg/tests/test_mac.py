import math

import numpy as np
import pytest

from vanetroute.channel import NakagamiParams, phy_preset
from vanetroute.core import Engine, RngStream
from vanetroute.errors import InvalidConfig
from vanetroute.mac import (BROADCAST, Enqueue, Frame, FrameKind, MacLayer, Medium, TxQueue, backoff_slots,
                            contention_window, frame_airtime, mac_preset)
from vanetroute.mobility import Fleet, HighwayConfig, NodeKinematics

NO_FADING = NakagamiParams(m_by_distance=((math.inf, 1e6),))


def data(src=0, dst=1, size=512):
    return Frame(FrameKind.DATA, src, dst, size, 0.0)


def ctrl(src=0):
    return Frame(FrameKind.CONTROL, src, BROADCAST, 60, 0.0)


# --- queue


def test_queue_accepts_until_capacity():
    q = TxQueue(50)
    assert q.enqueue(data()) is Enqueue.ACCEPTED
    for _ in range(49):
        q.enqueue(data())
    assert q.enqueue(data()) is Enqueue.DROPPED
    assert q.enqueue(ctrl()) is Enqueue.DROPPED
    assert (q.offered, q.accepted, q.dropped) == (52, 50, 2)


def test_control_dequeues_before_data():
    q = TxQueue()
    d, c = data(), ctrl()
    q.enqueue(d)
    q.enqueue(c)
    assert q.dequeue() is c
    assert q.dequeue() is d
    assert q.dequeue() is None


def test_queue_remove_if():
    q = TxQueue()
    frames = [data(dst=k % 3) for k in range(6)]
    for f in frames:
        q.enqueue(f)
    removed = q.remove_if(lambda f: f.dst == 1)
    assert [f.dst for f in removed] == [1, 1]
    assert len(q) == 4


# --- timing


def test_airtime_values():
    m = mac_preset("802.11")
    assert frame_airtime(m, 2e6, 512) - m.preamble_plus_header_time == pytest.approx(2.048e-3, rel=1e-12)
    mp = mac_preset("802.11p")
    assert frame_airtime(mp, 6e6, 512) - mp.preamble_plus_header_time == pytest.approx(0.68267e-3, rel=1e-4)
    t1 = frame_airtime(m, 2e6, 300) - m.preamble_plus_header_time
    t2 = frame_airtime(m, 2e6, 600) - m.preamble_plus_header_time
    assert t2 == pytest.approx(2 * t1, rel=1e-12)
    with pytest.raises(InvalidConfig):
        frame_airtime(m, 2e6, 0)


def test_contention_window_bounds():
    m = mac_preset("802.11")
    assert contention_window(m, 0) == 31
    assert contention_window(m, 1) == 63
    assert contention_window(m, 20) == m.cw_max
    rng = RngStream(0, "mac.backoff")
    slots = [backoff_slots(m, 0, rng) for _ in range(2000)]
    assert min(slots) >= 0 and max(slots) <= m.cw_min


def test_backoff_mean():
    for kind in ("802.11", "802.11p"):
        m = mac_preset(kind)
        rng = RngStream(4, "mac.backoff")
        mean = np.mean([backoff_slots(m, 0, rng) for _ in range(100_000)])
        assert abs(mean - m.cw_min / 2) / (m.cw_min / 2) < 0.02


def test_presets():
    a, p = mac_preset("802.11"), mac_preset("802.11p")
    assert a.slot_time == 20e-6
    assert p.slot_time == 13e-6
    assert a.difs == a.sifs + 2 * a.slot_time
    assert a.retry_limit == p.retry_limit == 7
    assert mac_preset("802.11", cw_min=63).cw_min == 63
    assert mac_preset("802.11p", queue_capacity=10).queue_capacity == 10
    with pytest.raises(InvalidConfig):
        mac_preset("802.11", cw_min=2000)
    with pytest.raises(InvalidConfig):
        mac_preset("802.11", nope=1)


# --- medium


class Bed:
    """A few static nodes on a straight road sharing one medium."""

    def __init__(self, xs, naka=NO_FADING, variant="802.11", seed=0):
        cfg = HighwayConfig(length=10_000.0, wraparound=False)
        nodes = [NodeKinematics(i, x, 2.5, 0, 0.0, 1) for i, x in enumerate(xs)]
        self.engine = Engine()
        self.medium = Medium(self.engine, Fleet(cfg, nodes), phy_preset(variant), naka, RngStream(seed, "channel"))
        self.got = {i: [] for i in range(len(xs))}
        self.failed = []
        self.sent = []
        rng = RngStream(seed, "mac.backoff")
        self.macs = [MacLayer(i, self.engine, self.medium, mac_preset(variant), rng,
                              deliver_up=lambda f, s, i=i: self.got[i].append((f.uid, s)),
                              on_link_failure=self.failed.append, on_transmit=self.sent.append)
                     for i in range(len(xs))]


def test_close_pair_receives():
    bed = Bed([0.0, 10.0])
    f = data(0, 1)
    bed.macs[0].enqueue(f)
    bed.engine.run_until(1.0)
    assert bed.got[1] == [(f.uid, 0)]
    assert bed.failed == []


def test_broadcast_reaches_everyone_in_range_only():
    bed = Bed([0.0, 50.0, 120.0, 2000.0])
    f = ctrl(0)
    bed.macs[0].enqueue(f)
    bed.engine.run_until(1.0)
    assert bed.got[1] and bed.got[2]
    assert bed.got[3] == []


def test_simultaneous_senders_collide():
    bed = Bed([0.0, 100.0, 200.0])
    a, b = ctrl(0), ctrl(2)
    bed.medium.start_tx(bed.macs[0], a, 1e-3)
    bed.medium.start_tx(bed.macs[2], b, 1e-3)
    bed.engine.run_until(1.0)
    assert bed.got[1] == []
    assert bed.macs[1].counters.collisions == 2


def test_staggered_overlap_also_collides():
    bed = Bed([0.0, 100.0, 200.0])
    bed.medium.start_tx(bed.macs[0], ctrl(0), 1e-3)
    bed.engine.run_until(0.5e-3)
    bed.medium.start_tx(bed.macs[2], ctrl(2), 1e-3)
    bed.engine.run_until(1.0)
    assert bed.got[1] == []


def test_carrier_sense_defers():
    bed = Bed([0.0, 100.0, 200.0])
    for i in (0, 2):
        bed.macs[i].enqueue(ctrl(i))
    bed.engine.run_until(1.0)
    # both senders hear each other, so DCF serialises them apart from equal-slot ties
    assert len(bed.got[1]) + bed.macs[1].counters.collisions == 2


def test_unicast_out_of_range_hits_retry_limit():
    bed = Bed([0.0, 3000.0])
    f = data(0, 1)
    bed.macs[0].enqueue(f)
    bed.engine.run_until(2.0)
    assert bed.failed == [f]
    assert len(bed.sent) == mac_preset("802.11").retry_limit
    assert bed.macs[0].counters.drops_retry == 1
    assert bed.macs[0].current is None


def test_backlog_drains_in_order():
    bed = Bed([0.0, 30.0])
    frames = [data(0, 1) for _ in range(20)]
    for f in frames:
        bed.macs[0].enqueue(f)
    bed.engine.run_until(5.0)
    assert [u for u, _ in bed.got[1]] == [f.uid for f in frames]


def test_unicast_occupancy_includes_ack():
    bed = Bed([0.0, 30.0])
    m = bed.macs[0]
    f = data(0, 1)
    assert m.airtime(f) == pytest.approx(frame_airtime(m.params, 2e6, 512) + m.params.sifs + m.params.ack_time)
    assert m.airtime(ctrl()) == frame_airtime(m.params, 2e6, 60)


def test_medium_is_deterministic():
    def run(seed):
        bed = Bed([0.0, 60.0, 140.0, 210.0, 260.0], naka=NakagamiParams(), seed=seed)
        for k in range(30):
            bed.macs[k % 5].enqueue(ctrl(k % 5))
            bed.macs[k % 5].enqueue(data(k % 5, (k + 1) % 5))
        bed.engine.run_until(3.0)
        return [sorted(v) for v in bed.got.values()], len(bed.failed)

    assert run(1) == run(1)
