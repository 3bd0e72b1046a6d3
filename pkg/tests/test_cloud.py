import pytest

from src.cloud.broker import Placed, Rejected
from src.cloud.resources import PhysicalHost, VMSpec
from src.cloud.store import RecordStore
from src.core.errors import DuplicateRound, OutOfRange, UnknownServiceType
from src.network.packets import AggregatedRecord, ServiceRequest
from src.services.types import IoTServiceType, ServiceRegistry
from src.services.workload import RuntimeWorkload, generate_workload

from tests.conftest import datacenter, dec


def registry(*types):
    return ServiceRegistry(IoTServiceType(t, t, mi) for t, mi in types)


def request(n: int, service_type: str = "svc") -> ServiceRequest:
    return ServiceRequest(f"r{n}", service_type, "test", 0)


class TestHosts:
    def test_fits_respects_pes_and_slots(self):
        host = PhysicalHost("h", pes=24, vm_slots=10)
        assert host.fits(VMSpec("v"))
        assert not host.fits(VMSpec("big", pes=25))
        assert not host.fits(VMSpec("fast", mips_per_pe=4000))

    def test_energy_is_idle_plus_load_share(self):
        host = PhysicalHost("h", pes=10, idle_W=100, full_W=200)
        assert host.energy_J(60) == 6000
        host.busy_pe_seconds = 50
        assert host.energy_J(60) == 6000 + 100 * 50 / 10

    def test_invalid_shapes(self):
        with pytest.raises(OutOfRange):
            PhysicalHost("h", pes=0)
        with pytest.raises(OutOfRange):
            PhysicalHost("h", idle_W=300, full_W=200)
        with pytest.raises(OutOfRange):
            VMSpec("v", pes=0)


class TestPlacement:
    def test_eleventh_vm_is_rejected_on_a_ten_slot_host(self, sim):
        dc = datacenter(sim, hosts=[PhysicalHost("pm", pes=24, vm_slots=10)])
        outcomes = [dc.broker.provision(VMSpec(f"vm{i}")) for i in range(11)]
        assert outcomes[:10] == [Placed("pm")] * 10
        assert outcomes[10] == Rejected()
        assert dc.broker.rejected == 1
        assert details_of(sim, "provision")[-1] == "rejected"

    def test_first_fit_in_declaration_order(self, sim):
        hosts = [PhysicalHost("a", pes=4), PhysicalHost("b", pes=4)]
        dc = datacenter(sim, hosts=hosts)
        placed = [dc.broker.provision(VMSpec(f"v{i}")) for i in range(4)]
        assert [p.host_id for p in placed] == ["a", "a", "b", "b"]
        assert dc.broker.deprovision("v0")
        assert dc.broker.provision(VMSpec("v4")) == Placed("a")
        assert not dc.broker.deprovision("missing")


def details_of(sim, kind):
    return [r.detail["result"] for r in sim.trace.of_kind(kind)]


class TestScheduling:
    @pytest.fixture
    def dc(self, sim):
        dc = datacenter(sim, registry=registry(("svc", 4800), ("other", 4800)))
        dc.broker.provision(VMSpec("v1", services=frozenset({"svc"})))
        dc.broker.provision(VMSpec("v2", services=frozenset({"svc"})))
        return dc

    def test_least_loaded_with_declaration_order_ties(self, dc):
        broker = dc.broker
        placed = [broker.submit_request(request(n), 0).vm_id for n in range(4)]
        assert placed == ["v1", "v2", "v1", "v2"]

    def test_fifo_per_vm(self, sim, dc):
        broker = dc.broker
        for n in range(3):
            broker.submit_request(request(n), 0)
        sim.run()
        # 4800 MI on 2 x 2400 MIPS takes 1s
        done = [(c.vm_id, c.started_at, c.completed_at) for c in broker.completed]
        assert done == [("v1", 0, 1), ("v2", 0, 1), ("v1", 1, 2)]
        assert broker.completed[-1].wait_s == 1
        assert dc.hosts[0].busy_pe_seconds == 3 * 2

    def test_request_nobody_serves_is_counted(self, sim, dc):
        assert dc.broker.submit_request(request(0, "other"), 0) is None
        assert dc.broker.unserved == 1
        errors = sim.trace.of_kind("error")
        assert errors[0].detail["error"] == "Unserved"

    def test_unknown_service_type(self, dc):
        with pytest.raises(UnknownServiceType):
            dc.broker.submit_request(request(0, "nope"), 0)


def test_workload_submits_every_interval(sim):
    dc = datacenter(sim, registry=registry(("svc", 2400)))
    dc.broker.provision(VMSpec("v1"))
    w = RuntimeWorkload(intervals=3, interval_length_s=600, requests={"svc": 2})
    driver = generate_workload(w, dc.broker)
    sim.run()
    assert w.total_requests == 6
    assert driver.submitted == 6
    assert len(dc.broker.completed) == 6
    assert sorted({c.submitted_at for c in dc.broker.completed}) == [0, 600, 1200]


def test_workload_validation(sim):
    dc = datacenter(sim)
    with pytest.raises(ValueError):
        RuntimeWorkload(intervals=-1, interval_length_s=10)
    with pytest.raises(ValueError):
        RuntimeWorkload(intervals=1, interval_length_s=10, requests={"svc": -1})
    with pytest.raises(UnknownServiceType):
        generate_workload(RuntimeWorkload(1, 10, {"svc": 1}), dc.broker)


class TestRecordStore:
    @pytest.fixture
    def store(self):
        store = RecordStore()
        yield store
        store.close()

    def rec(self, round_index=1, value="1.5"):
        return AggregatedRecord("G", 3600 * round_index, 1, round_index, {"temp": (dec(value), dec("2"))})

    def test_insert_and_read_back_exact_values(self, store):
        store.insert(self.rec(), 3606)
        entry = store.get(("G", 1, 1))
        assert entry["stored_at"] == 3606
        assert entry["reading_count"] == 2
        assert entry["vals"] == {"temp": [dec("1.5"), dec("2")]}
        assert store.get(("G", 1, 2)) is None

    def test_duplicate_round_is_rejected(self, store):
        store.insert(self.rec(), 0)
        with pytest.raises(DuplicateRound) as exc:
            store.insert(self.rec(value="9"), 1)
        assert exc.value.key == ("G", 1, 1)
        assert len(store) == 1

    def test_filters_and_stored_values(self, store):
        store.insert(self.rec(2), 0)
        store.insert(self.rec(1), 0)
        assert [e["round"] for e in store.records("G")] == [1, 2]
        assert store.records(day=2) == []
        assert store.stored_values()[0] == ("temp", dec("1.5"))

    def test_file_backed_store(self, tmp_path):
        path = tmp_path / "nested" / "records.db"
        store = RecordStore(str(path))
        store.insert(self.rec(), 0)
        store.close()
        assert len(RecordStore(str(path))) == 1
