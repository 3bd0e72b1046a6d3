import hashlib
import random
from collections import Counter

import pytest

from src.core.errors import ConservationError, HandlerFailure, PastTime
from src.kernel.engine import Entity, Simulation
from src.kernel.events import NodeFailure, SenseTick, WorkloadTick
from src.kernel.queue import FutureEventList
from src.kernel.rng import derive_seed, substream
from src.kernel.stats import RunStats
from src.nodes.gateway import GatewayNode

from tests.conftest import connection, datacenter, sensor


class Recorder(Entity):
    handlers = {SenseTick: "on_tick", NodeFailure: "on_boom"}

    def __init__(self, entity_id):
        super().__init__(entity_id)
        self.seen = []

    def on_tick(self, event):
        self.seen.append((self.sim.now, event.seq))

    def on_boom(self, event):
        raise RuntimeError("boom")


@pytest.fixture
def recorder():
    sim = Simulation(seed=1)
    return sim.register(Recorder("r"))


def test_same_time_events_fire_in_insertion_order(recorder):
    sim = recorder.sim
    for _ in range(3):
        sim.schedule(10, "r", SenseTick())
    sim.schedule(5, "r", SenseTick())
    sim.run()
    assert [t for t, _ in recorder.seen] == [5, 10, 10, 10]
    seqs = [seq for t, seq in recorder.seen if t == 10]
    assert seqs == sorted(seqs)


def test_cancelled_event_never_fires(recorder):
    sim = recorder.sim
    handle = sim.schedule(10, "r", SenseTick())
    sim.schedule(20, "r", SenseTick())
    assert sim.cancel(handle) is True
    assert sim.cancel(handle) is False
    sim.run()
    assert [t for t, _ in recorder.seen] == [20]
    assert sim.events_processed == 1


def test_scheduling_in_the_past_is_rejected(recorder):
    sim = recorder.sim
    sim.schedule(10, "r", SenseTick())
    sim.run()
    with pytest.raises(PastTime):
        sim.schedule(5, "r", SenseTick())
    # Same instant is still allowed
    sim.schedule(10, "r", SenseTick())


def test_run_until_is_resumable(recorder):
    sim = recorder.sim
    sim.schedule(5, "r", SenseTick())
    sim.schedule(15, "r", SenseTick())
    sim.run(until=10)
    assert len(recorder.seen) == 1
    assert sim.now == 5
    sim.run(until=20)
    assert len(recorder.seen) == 2
    assert sim.now == 15


def test_handler_error_is_wrapped_with_event_identity(recorder):
    sim = recorder.sim
    sim.schedule(3, "r", NodeFailure())
    with pytest.raises(HandlerFailure) as exc:
        sim.run()
    assert exc.value.event.target == "r"
    assert exc.value.event.fire_at == 3
    assert isinstance(exc.value.cause, RuntimeError)


def test_payload_without_handler_fails_the_run(recorder):
    recorder.sim.schedule(1, "r", WorkloadTick(0))
    with pytest.raises(HandlerFailure):
        recorder.sim.run()


def test_run_stops_at_horizon_plus_settle():
    sim = Simulation(seed=1, horizon=100, settle=10)
    r = sim.register(Recorder("r"))
    for t in (100, 110, 111):
        sim.schedule(t, "r", SenseTick())
    stats = sim.run()
    assert [t for t, _ in r.seen] == [100, 110]
    assert stats.final_time == 110
    assert sim.within_horizon(100) and not sim.within_horizon(101)


def test_empty_run_stats():
    stats = Simulation(seed=3).run()
    assert stats.events_processed == 0
    assert stats.packets_sent == 0
    assert stats.trace_hash == hashlib.sha256(b"").hexdigest()


def test_conservation_check():
    RunStats(packets_sent=5, packets_delivered=3, packets_lost=1, packets_in_flight=1).check_conservation()
    with pytest.raises(ConservationError):
        RunStats(packets_sent=5, packets_delivered=3).check_conservation()


def test_deterministic_view_drops_wall_clock_fields():
    view = RunStats(wall_clock_ms=12.5, peak_memory_bytes=10).deterministic_view()
    assert "wall_clock_ms" not in view
    assert "peak_memory_bytes" not in view
    assert "trace_hash" in view


def test_substreams_are_stable_and_independent():
    assert derive_seed(42, 3) == derive_seed(42, 3)
    assert derive_seed(42, 3) != derive_seed(42, 4)
    a, b = substream(42, 3), substream(42, 3)
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]
    assert substream(42, 3).random() != substream(42, 4).random()


def test_trace_rejects_out_of_order_records():
    sim = Simulation(seed=1, keep_trace=True)
    sim.trace.emit(10, "sense", "S1", {})
    with pytest.raises(ValueError):
        sim.trace.emit(9, "sense", "S1", {})
    assert len(sim.trace.of_kind("sense")) == 1
    assert sim.trace.counts["sense"] == 1


def test_future_event_list_counts_live_events():
    sim = Simulation()
    sim.register(Recorder("r"))
    h1 = sim.schedule(1, "r", SenseTick())
    sim.schedule(2, "r", SenseTick())
    queue: FutureEventList = sim.queue
    assert len(queue) == 2
    sim.cancel(h1)
    assert len(queue) == 1
    assert queue.peek_time() == 2


class Chainer(Recorder):
    """Schedules one follow-up tick from the tick at t=2."""

    def on_tick(self, event):
        super().on_tick(event)
        if self.sim.now == 2:
            self.sim.schedule(3, self.entity_id, SenseTick())


def test_pop_order_matches_sorted_reference(recorder):
    sim = recorder.sim
    rng = random.Random(17)
    handles = [sim.schedule(rng.randint(0, 50), "r", SenseTick()) for _ in range(300)]
    dropped = set(rng.sample(range(len(handles)), 40))
    for i in dropped:
        sim.cancel(handles[i])
    sim.run()
    expected = sorted((h.fire_at, h.event.seq) for i, h in enumerate(handles) if i not in dropped)
    assert recorder.seen == expected


def test_handler_can_schedule_ahead_of_waiting_events():
    sim = Simulation(seed=1)
    chain = sim.register(Chainer("c"))
    sim.schedule(2, "c", SenseTick())
    sim.schedule(4, "c", SenseTick())
    sim.run()
    assert [t for t, _ in chain.seen] == [2, 3, 4]


def test_run_until_between_events():
    sim = Simulation(seed=1)
    r = sim.register(Recorder("r"))
    for t in (3, 3, 5):
        sim.schedule(t, "r", SenseTick())
    sim.run(until=4)
    assert [t for t, _ in r.seen] == [3, 3]
    assert sim.now == 3
    assert sim.queue.peek_time() == 5


def test_every_sent_packet_settles_at_most_once():
    sim = Simulation(seed=9, horizon=86400, settle=3600, keep_trace=True)
    datacenter(sim)
    sim.register(GatewayNode("G", connection(base_loss=0.2), forward_target="DC"))
    for i in range(1, 4):
        sim.register(sensor(f"S{i}", [i], "G", conn=connection(base_loss=0.3))).start()
    stats = sim.run()

    sent = [r.detail["packet"] for r in sim.trace.of_kind("packet_sent")]
    settled = Counter(
        r.detail["packet"] for kind in ("packet_delivered", "packet_lost") for r in sim.trace.of_kind(kind)
    )
    assert len(sent) == len(set(sent)) == stats.packets_sent
    assert set(settled) <= set(sent)
    assert max(settled.values()) == 1
    assert len(sent) - len(settled) == stats.packets_in_flight
    assert stats.packets_lost > 0
