import pytest

from harness import GraphNet, line
from vanetroute.routing import INF_METRIC, DsdvUpdate, ProtocolName, preset_params
from vanetroute.routing.base import DsdvParams


def agent_with_route(seq, metric_adv, via=2, dest=5):
    net = GraphNet(6, [], "DSDV")
    a = net.agents[0]
    a.dsdv_process_update(DsdvUpdate(origin=via, emitted_at=0.0, entries=((dest, seq, metric_adv),)), via, 0.0)
    return net, a


def test_higher_sequence_wins():
    _, a = agent_with_route(10, 2)
    assert (a.routes[5].seq_num, a.routes[5].metric) == (10, 3)
    changed, trig = a.dsdv_process_update(DsdvUpdate(3, 1.0, ((5, 12, 5),)), 3, 1.0)
    assert changed == [5] and trig
    assert (a.routes[5].seq_num, a.routes[5].metric, a.routes[5].next_hop) == (12, 6, 3)


def test_equal_sequence_better_metric_wins():
    _, a = agent_with_route(10, 2)
    a.dsdv_process_update(DsdvUpdate(3, 1.0, ((5, 10, 1),)), 3, 1.0)
    assert (a.routes[5].seq_num, a.routes[5].metric, a.routes[5].next_hop) == (10, 2, 3)


def test_stale_sequence_ignored():
    _, a = agent_with_route(12, 1)
    changed, _ = a.dsdv_process_update(DsdvUpdate(3, 1.0, ((5, 10, 0),)), 3, 1.0)
    assert changed == []
    assert (a.routes[5].seq_num, a.routes[5].metric, a.routes[5].next_hop) == (12, 2, 2)


def test_fresh_dump_and_even_sequence():
    net = GraphNet(3, [], "DSDV")
    a = net.agents[1]
    first = a.dsdv_periodic_dump(0.0)
    assert first.entries == ((1, first.entries[0][1], 0),)
    seqs = [a.dsdv_periodic_dump(float(t)).entries[0][1] for t in range(1, 6)]
    seqs = [first.entries[0][1]] + seqs
    assert all(s % 2 == 0 for s in seqs)
    assert all(b - a_ == 2 for a_, b in zip(seqs, seqs[1:]))


def test_broken_link_advertised_odd_infinite():
    net, a = agent_with_route(10, 2)
    a._break_link(2, 1.0)
    dump = a.dsdv_periodic_dump(2.0)
    entry = [e for e in dump.entries if e[0] == 5][0]
    assert entry[1] % 2 == 1
    assert entry[2] == INF_METRIC
    assert a.route_lookup(5, 2.0) is None


def test_lookup_rules():
    net, a = agent_with_route(10, 2)
    assert a.route_lookup(0, 0.0) == 0
    assert a.route_lookup(5, 0.0) == 2
    assert a.route_lookup(4, 0.0) is None


def test_line_converges_to_hop_counts():
    net = GraphNet(5, line(5), "DSDV", seed=1)
    net.start()
    net.run(40.0)
    for src in range(5):
        for dst in range(5):
            if src == dst:
                continue
            nh = net.agents[src].route_lookup(dst, net.engine.now)
            assert nh == (src + 1 if dst > src else src - 1)
            assert net.agents[src].routes[dst].metric == abs(dst - src)


def test_link_failure_propagates_breakage():
    net = GraphNet(4, line(4), "DSDV", seed=2)
    net.start()
    net.run(40.0)
    net.adj[1].discard(2)
    net.adj[2].discard(1)
    net.agents[1].link_failure(2)
    net.run(45.0)
    assert net.agents[0].route_lookup(3, net.engine.now) is None
    assert net.agents[0].routes[3].seq_num % 2 == 1


def test_triggered_updates_are_rate_limited():
    params = DsdvParams(periodic_update_interval=15.0, min_trigger_interval=5.0)
    net = GraphNet(6, line(6), "DSDV", params=params, seed=3)
    net.start()
    net.run(60.0)
    for host in net.hosts:
        times = sorted(t for t, m, _ in host.sent)
        # any two adverts closer than the trigger interval must include a periodic dump
        periodic = {t for t, m, _ in host.sent if m.entries and m.entries[0][0] == host.node_id}
        for t0, t1 in zip(times, times[1:]):
            if t1 - t0 < 5.0 - 1e-9:
                assert t0 in periodic or t1 in periodic


def test_mod_preset_is_slower():
    base, mod = preset_params("DSDV"), preset_params(ProtocolName.MOD_DSDV)
    assert mod.periodic_update_interval > base.periodic_update_interval
    assert mod.min_trigger_interval > base.min_trigger_interval
