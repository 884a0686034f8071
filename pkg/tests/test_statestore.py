"""Two-tier state store: key codec, op accounting, bundles, merged writes."""

import pytest
from hypothesis import given, strategies as st

from databelt.statestore import (
    DEFAULT_OP_OVERHEAD,
    KEY_SEPARATOR,
    StateKey,
    StateLostError,
    StateObject,
    StateStore,
    StorageOpLog,
    OpRecord,
    bundle_get,
    encode_key,
    merged_put,
    parse_key,
)
from databelt.topology import AvailabilitySchedule, Link, Node, NodeKind, Topology, prune

BW = 1.25e7  # 100 Mbps

field_text = st.text(
    alphabet=st.characters(blacklist_characters=KEY_SEPARATOR, min_codepoint=33, max_codepoint=126),
    min_size=1,
    max_size=24,
)


def key(fid: str = "f1", node: str = "a", wf: str = "wf") -> StateKey:
    return StateKey(wf, node, fid)


def obj(fid: str = "f1", node: str = "a", size: int = 0, payload: bytes | None = None) -> StateObject:
    if payload is not None:
        size = len(payload)
    return StateObject(key(fid, node), size, payload)


def line_graph(*ids: str, latency: float = 0.010):
    nodes = [Node(i, NodeKind.SATELLITE) for i in ids]
    links = [Link(a, b, latency, BW) for a, b in zip(ids, ids[1:])]
    return prune(Topology(nodes, links), 0)


class TestKeyCodec:
    def test_ipv6_storage_address_survives(self):
        # ":" appears inside IPv6 literals, which is why the separator is "|"
        k = StateKey("9eed920b-1680-461e-ae21", "2001:db8::1", "d4aa0228-ff89-43ad-8934")
        text = encode_key(k)
        assert text == "9eed920b-1680-461e-ae21|2001:db8::1|d4aa0228-ff89-43ad-8934"
        assert parse_key(text) == k

    def test_separator_not_allowed_inside_fields(self):
        with pytest.raises(ValueError):
            StateKey("a|b", "n", "f")
        with pytest.raises(ValueError):
            StateKey("w", "n|", "f")
        with pytest.raises(ValueError):
            StateKey("w", "n", "|f")

    def test_empty_fields_rejected(self):
        with pytest.raises(ValueError):
            StateKey("", "n", "f")

    def test_parse_needs_exactly_three_fields(self):
        with pytest.raises(ValueError):
            parse_key("a|b")
        with pytest.raises(ValueError):
            parse_key("a|b|c|d")

    def test_rehoming(self):
        assert key(node="a").at("b") == key(node="b")

    @given(field_text, field_text, field_text)
    def test_round_trip(self, wf, node, fid):
        k = StateKey(wf, node, fid)
        assert parse_key(encode_key(k)) == k


class TestStateObject:
    def test_payload_length_must_match(self):
        with pytest.raises(ValueError):
            StateObject(key(), 3, b"xxxx")
        with pytest.raises(ValueError):
            StateObject(key(), -1)

    def test_segments(self):
        merged = StateObject(
            key("f1+f2"),
            7,
            b"aaaabbb",
            segments=(("f1", 0, 4), ("f2", 4, 3)),
        )
        assert merged.segment_functions == ("f1", "f2")
        part = merged.segment_of("f2")
        assert part.payload == b"bbb"
        assert part.size == 3
        assert part.key.function_id == "f2"
        with pytest.raises(KeyError):
            merged.segment_of("f9")


class TestPutGet:
    def test_local_put_costs_nothing_on_the_network(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        latency = store.put(obj(), node="a", origin="a", graph=graph)
        assert latency == 0.0
        record = store.oplog.records[-1]
        assert (record.kind, record.bytes_moved) == ("write", 0)

    def test_one_hop_put_charges_round_trip_plus_transfer(self):
        # 2 x 10 ms + 1 MB / 100 Mbps = 0.02 + 0.08
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        latency = store.put(obj(size=1_000_000), node="b", origin="a", graph=graph)
        assert latency == pytest.approx(0.10)
        assert store.oplog.records[-1].bytes_moved == 1_000_000

    def test_default_overhead_added(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a")
        assert store.op_overhead == DEFAULT_OP_OVERHEAD == 0.005
        latency = store.put(obj(size=1_000_000), node="b", origin="a", graph=graph)
        assert latency == pytest.approx(0.105)

    def test_put_rekeys_to_the_target_node(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        store.put(obj(fid="f1", node="a"), node="b", origin="a", graph=graph)
        assert StateKey("wf", "b", "f1") in store.local["b"]

    def test_unknown_node_rejected(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a")
        with pytest.raises(ValueError):
            store.put(obj(), node="zz", origin="a", graph=graph)
        with pytest.raises(ValueError):
            StateStore(("a",), global_node="zz")
        with pytest.raises(ValueError):
            StateStore(("a",), global_node="a", op_overhead=-0.001)

    def test_local_get(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        stored_key = store.preload(obj(payload=b"xyz"), "b")
        state, latency, distance = store.get(stored_key, reader="b", graph=graph)
        assert state.payload == b"xyz"
        assert latency == 0.0
        assert distance == 0

    def test_one_hop_get(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        stored_key = store.preload(obj(size=1_000_000), "a")
        _state, latency, distance = store.get(stored_key, reader="b", graph=graph)
        assert latency == pytest.approx(0.10)
        assert distance == 1

    def test_preload_is_silent(self):
        store = StateStore(("a",), global_node="a")
        store.preload(obj(), "a")
        assert len(store.oplog) == 0


class TestGlobalReplica:
    def _setup(self, replicate: bool):
        nodes = [
            Node("sat", NodeKind.SATELLITE, schedule=AvailabilitySchedule.windows((0, 1))),
            Node("mid", NodeKind.SATELLITE),
            Node("cloud", NodeKind.CLOUD),
        ]
        links = [
            Link("sat", "mid", 0.010, BW),
            Link("mid", "cloud", 0.010, BW),
        ]
        topo = Topology(nodes, links)
        store = StateStore(
            ("sat", "mid", "cloud"),
            global_node="cloud",
            op_overhead=0.0,
            replicate_to_global=replicate,
        )
        stored_key = store.preload(obj(node="sat", size=1_000_000), "sat")
        return topo, store, stored_key

    def test_home_node_serves_while_up(self):
        topo, store, stored_key = self._setup(replicate=True)
        graph = prune(topo, 0)
        assert store.serving_node(stored_key, graph, reader="mid") == "sat"

    def test_replica_serves_after_home_goes_down(self):
        topo, store, stored_key = self._setup(replicate=True)
        graph = prune(topo, 1)  # sat is gone now
        assert store.serving_node(stored_key, graph, reader="mid") == "cloud"
        _state, latency, distance = store.get(stored_key, reader="mid", graph=graph)
        assert distance == 1
        assert latency == pytest.approx(0.10)

    def test_without_replication_the_state_is_lost(self):
        topo, store, stored_key = self._setup(replicate=False)
        graph = prune(topo, 1)
        with pytest.raises(StateLostError):
            store.get(stored_key, reader="mid", graph=graph)

    def test_unreachable_origin_put_is_lost(self):
        nodes = [Node("a", NodeKind.SATELLITE), Node("b", NodeKind.SATELLITE)]
        graph = prune(Topology(nodes), 0)
        store = StateStore(("a", "b"), global_node="a")
        with pytest.raises(StateLostError):
            store.put(obj(), node="b", origin="a", graph=graph)


class TestBundleGet:
    def test_all_local_keys_cost_one_op(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.005)
        keys = [store.preload(obj(fid=f"f{i}", size=10), "b") for i in range(5)]
        bundle = bundle_get(store, keys, reader="b", graph=graph)
        assert bundle.op_count == 1
        assert bundle.latency == pytest.approx(0.005)  # a single overhead
        assert store.oplog.counts_by_kind() == {"bundle_read": 1}
        assert store.oplog.records[-1].key_count == 5
        assert all(f.hops == 0 and f.bytes_moved == 0 for f in bundle.fetches)

    def test_remote_group_shares_one_transfer(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.005)
        local = [store.preload(obj(fid=f"l{i}", size=10), "b") for i in range(3)]
        remote = [
            store.preload(obj(fid=f"r{i}", size=500_000), "a") for i in range(2)
        ]
        bundle = bundle_get(store, local + remote, reader="b", graph=graph)
        assert bundle.op_count == 2
        # one overhead per op; the remote pair crosses as one combined megabyte
        assert bundle.latency == pytest.approx(0.005 + 0.005 + 0.10)
        by_count = sorted(r.key_count for r in store.oplog)
        assert by_count == [2, 3]
        remote_fetches = [f for f in bundle.fetches if f.serving_node == "a"]
        assert all(f.hops == 1 for f in remote_fetches)
        # solo accounting carries each key's individual cost, not the shared one
        for fetch in remote_fetches:
            assert fetch.solo_transfer == pytest.approx(0.02 + 500_000 / BW)
            assert fetch.bytes_moved == 500_000

    def test_states_keep_request_order(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        k_b = store.preload(obj(fid="zz", size=1), "b")
        k_a = store.preload(obj(fid="aa", size=1), "a")
        bundle = bundle_get(store, [k_b, k_a], reader="b", graph=graph)
        assert [s.key for s in bundle.states] == [k_b, k_a]
        assert [f.key for f in bundle.fetches] == [k_b, k_a]

    def test_duplicates_are_fetched_once(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.005)
        k1 = store.preload(obj(fid="f1", size=7), "b")
        k2 = store.preload(obj(fid="f2", size=9), "b")
        bundle = bundle_get(store, [k1, k1, k2], reader="b", graph=graph)
        assert bundle.op_count == 1
        assert len(bundle.states) == 3
        assert store.oplog.records[-1].key_count == 2

    def test_empty_request(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a")
        bundle = bundle_get(store, [], reader="b", graph=graph)
        assert bundle.op_count == 0
        assert bundle.latency == 0.0
        assert bundle.states == ()
        assert len(store.oplog) == 0


class TestMergedPut:
    def test_members_concatenate_in_function_id_order(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        states = [
            StateObject(key("f2", "b"), 3, b"aaa"),
            StateObject(key("f1", "b"), 4, b"bbbb"),
            StateObject(key("f3", "b"), 5, b"ccccc"),
        ]
        merged_key, latency = merged_put(store, states, node="b", origin="b", graph=graph)
        assert merged_key == StateKey("wf", "b", "f1+f2+f3")
        assert latency == 0.0
        state, _lat, _hops = store.get(merged_key, reader="b", graph=graph)
        assert state.size == 12
        assert state.payload == b"bbbbaaaccccc"
        assert state.segments == (("f1", 0, 4), ("f2", 4, 3), ("f3", 7, 5))
        assert state.segment_of("f2").payload == b"aaa"
        assert store.oplog.counts_by_kind() == {"merged_write": 1, "read": 1}

    def test_remote_merged_write_charges_combined_size(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a", op_overhead=0.0)
        states = [
            StateObject(key("f1", "a"), 600_000, None),
            StateObject(key("f2", "a"), 400_000, None),
        ]
        _merged_key, latency = merged_put(store, states, node="b", origin="a", graph=graph)
        assert latency == pytest.approx(0.10)  # 1 MB over one 10 ms hop
        assert store.oplog.records[-1].bytes_moved == 1_000_000

    def test_empty_merge_rejected(self):
        graph = line_graph("a", "b")
        store = StateStore(("a", "b"), global_node="a")
        with pytest.raises(ValueError):
            merged_put(store, [], node="a", origin="a", graph=graph)


class TestOpLog:
    def test_bytes_ledger_counts_network_bytes_only(self):
        graph = line_graph("a", "b", "c")
        store = StateStore(("a", "b", "c"), global_node="a", op_overhead=0.0)
        store.put(obj(size=100), node="a", origin="a", graph=graph)   # local: 0
        store.put(obj(fid="f2", size=200), node="b", origin="a", graph=graph)  # 200
        k3 = store.preload(obj(fid="f3", size=50), "c")
        store.get(k3, reader="a", graph=graph)  # two hops away: 50
        assert store.oplog.total_bytes_moved == 250
        assert store.oplog.counts_by_kind() == {"write": 2, "read": 1}

    def test_csv_round_trip_shape(self):
        log = StorageOpLog()
        log.append(OpRecord("write", "a", 1, 0, 0.005))
        log.append(OpRecord("bundle_read", "b", 3, 1200, 0.125))
        text = log.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "op,node,key_count,bytes,latency_s"
        assert lines[1] == "write,a,1,0,0.005"
        assert lines[2] == "bundle_read,b,3,1200,0.125"

    def test_total_latency_sums(self):
        log = StorageOpLog()
        log.append(OpRecord("write", "a", 1, 0, 0.25))
        log.append(OpRecord("read", "a", 1, 0, 0.5))
        assert log.total_latency == pytest.approx(0.75)
