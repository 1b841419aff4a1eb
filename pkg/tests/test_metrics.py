import pytest

from vanetroute.errors import DuplicateDelivery, InvalidConfig, NoDeliveredPackets, NonPositiveDuration
from vanetroute.metrics import CbrFlowConfig, DataPacket, MetricsAccumulator, cbr_schedule, e2ed, nrl, throughput


def test_cbr_schedule_small():
    times = cbr_schedule(CbrFlowConfig(0, 1, start_at=0.0, stop_at=0.1, interval=0.03))
    assert times == pytest.approx([0.0, 0.03, 0.06, 0.09])


def test_cbr_schedule_empty_and_long():
    assert cbr_schedule(CbrFlowConfig(0, 1, start_at=5.0, stop_at=5.0)) == []
    assert len(cbr_schedule(CbrFlowConfig(0, 1, start_at=0.0, stop_at=900.0, interval=0.03))) == 30000


def test_cbr_rejects_bad_flows():
    with pytest.raises(InvalidConfig):
        CbrFlowConfig(0, 1, interval=0)
    with pytest.raises(InvalidConfig):
        CbrFlowConfig(2, 2)
    with pytest.raises(InvalidConfig):
        CbrFlowConfig(0, 1, start_at=10, stop_at=5)


def deliver_n(acc, n, size=512, delay=0.1):
    for k in range(n):
        p = DataPacket(k, 0, 0, 1, size, float(k))
        acc.record_send(p)
        acc.record_delivery(p, k + delay)


def test_throughput():
    acc = MetricsAccumulator()
    assert throughput(acc, 900) == 0
    deliver_n(acc, 1000)
    assert throughput(acc, 900) == pytest.approx(568.8888888888889, rel=1e-12)
    acc2 = MetricsAccumulator()
    deliver_n(acc2, 1000, size=1024)
    assert throughput(acc2, 900) == 2 * throughput(acc, 900)
    with pytest.raises(NonPositiveDuration):
        throughput(acc, 0)


def test_e2ed():
    acc = MetricsAccumulator()
    for k, d in enumerate((0.1, 0.3)):
        p = DataPacket(k, 0, 0, 1, 512, 1.0)
        acc.record_send(p)
        acc.record_delivery(p, 1.0 + d)
    assert e2ed(acc) == pytest.approx(0.2)
    single = MetricsAccumulator()
    deliver_n(single, 1, delay=0.0421)
    assert e2ed(single) == pytest.approx(0.0421)
    with pytest.raises(NoDeliveredPackets):
        e2ed(MetricsAccumulator())


def test_nrl():
    acc = MetricsAccumulator()
    deliver_n(acc, 100)
    assert nrl(acc) == 0.0
    acc = MetricsAccumulator()
    deliver_n(acc, 50)
    for k in range(100):
        acc.record_control_tx(("Hello", "Tc")[k % 2])
    assert nrl(acc) == 2.0
    assert sum(acc.control_by_kind.values()) == acc.control_transmissions
    idle = MetricsAccumulator()
    idle.record_control_tx("DsdvUpdate")
    with pytest.raises(NoDeliveredPackets):
        nrl(idle)
    assert isinstance(NoDeliveredPackets("x"), ZeroDivisionError)


def test_accumulator_delivery_bookkeeping():
    acc = MetricsAccumulator()
    p = DataPacket(7, 0, 0, 1, 512, 2.0)
    acc.record_send(p)
    acc.record_delivery(p, 2.25)
    assert acc.data_packets_delivered == 1
    assert acc.delay_sum == pytest.approx(0.25)
    assert acc.delays() == pytest.approx([0.25])
    with pytest.raises(DuplicateDelivery):
        acc.record_delivery(p, 3.0)
    with pytest.raises(DuplicateDelivery):
        acc.record_delivery(DataPacket(8, 0, 0, 1, 512, 2.0), 3.0)


def test_control_kinds_checked():
    acc = MetricsAccumulator()
    acc.record_control_tx("Rreq", originated=True)
    acc.record_control_tx("Rreq")
    assert acc.control_transmissions == 2
    assert acc.control_originated == 1
    with pytest.raises(ValueError):
        acc.record_control_tx("Beacon")
