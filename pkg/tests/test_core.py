import numpy as np
import pytest

from vanetroute.core import Engine, EventQueue, RngStream, Streams, draw, schedule
from vanetroute.errors import InvalidDistParams, SchedulingInPast


def test_equal_time_events_fire_in_insertion_order():
    eng = Engine()
    seen = []
    eng.schedule(5.0, seen.append, "a")
    eng.schedule(5.0, seen.append, "b")
    eng.schedule(5.0, seen.append, "c")
    eng.run_until(10)
    assert seen == ["a", "b", "c"]


def test_event_at_current_time_fires_before_time_advances():
    eng = Engine()
    seen = []

    def first():
        eng.schedule(eng.now, lambda: seen.append(("now", eng.now)))
        eng.schedule(eng.now + 1, lambda: seen.append(("later", eng.now)))

    eng.schedule(2.0, first)
    eng.run_until(5)
    assert seen == [("now", 2.0), ("later", 3.0)]


def test_cancelled_event_never_fires():
    eng = Engine()
    seen = []
    h = eng.schedule(1.0, seen.append, 1)
    eng.cancel(h)
    assert eng.run_until(2) == 0
    assert seen == []


def test_scheduling_in_the_past_is_rejected():
    eng = Engine()
    eng.run_until(3.0)
    with pytest.raises(SchedulingInPast):
        eng.schedule(2.999, lambda: None)
    q = EventQueue()
    q.now = 1.0
    with pytest.raises(SchedulingInPast):
        schedule(q, 0.5, "x")


def test_run_until_empty_queue():
    eng = Engine()
    assert eng.run_until(900) == 0
    assert eng.now == 900


def test_run_until_stops_at_t_end():
    eng = Engine()
    for t in (1, 2, 3):
        eng.schedule(t, lambda: None)
    assert eng.run_until(2) == 2
    assert eng.now == 2
    assert eng.run_until(3) == 1


def test_trace_hash_is_reproducible():
    def build(seed):
        eng = Engine(trace=True)
        rng = RngStream(seed, "x")
        for k in range(50):
            eng.schedule(rng.uniform(0, 10), lambda: None, target=k % 5, kind="k")
        eng.run_until(10)
        return eng.trace_hash

    assert build(3) == build(3)
    assert build(3) != build(4)


def test_uniform_in_half_open_interval():
    rng = RngStream(1, "u")
    xs = [rng.uniform(0, 1) for _ in range(1000)]
    assert all(0.0 <= x < 1.0 for x in xs)


def test_gamma_mean():
    rng = RngStream(7, "gamma")
    xs = rng.gen.gamma(2.0, 3.0, size=100_000)
    assert abs(xs.mean() - 6.0) / 6.0 < 0.02
    assert draw(rng, "gamma", 2.0, 3.0) > 0


def test_labels_give_distinct_streams():
    assert RngStream(5, "a").uniform() != RngStream(5, "b").uniform()
    assert RngStream(5, "a").uniform() == RngStream(5, "a").uniform()
    s = Streams(5)
    assert s["a"] is s["a"]


def test_streams_are_uncorrelated():
    a = RngStream(11, "channel").gen.random(20_000)
    b = RngStream(11, "mobility").gen.random(20_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03


@pytest.mark.parametrize("dist,params", [
    ("uniform", (1.0, 1.0)),
    ("normal", (0.0, 0.0)),
    ("gamma", (0.0, 1.0)),
    ("gamma", (1.0, -1.0)),
    ("exponential", (0.0,)),
    ("poisson", (1.0,)),
])
def test_invalid_distribution_parameters(dist, params):
    with pytest.raises(InvalidDistParams):
        draw(RngStream(0, "x"), dist, *params)


def test_normal_variance_parameterisation():
    rng = RngStream(2, "n")
    xs = np.array([rng.normal(5.0, 9.0) for _ in range(20_000)])
    assert abs(xs.std(ddof=1) - 3.0) < 0.06
