"""Tests for the multilayer topology model."""

import itertools

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import build_topology
from errors import AmbiguousAttachment, NoPath, NotAttached, ParseError, ValidationError
from topology import (
    LinkLayer,
    NodeKind,
    PortId,
    dump_topology,
    load_topology,
    optical_path,
    roadm_client_port_of,
)

BAD_LINK = b"""
nodes:
  - {id: R1, kind: Roadm, mgmt_address: 10.0.0.1}
ports:
  - {id: {node: R1, name: C1}, role: ClientPort}
links:
  - {a: {node: R1, name: C1}, z: {node: R9, name: C1}, layer: Fiber}
"""


class TestLoadTopology:

    def test_testbed(self, testbed):
        kinds = [n.kind for n in testbed.nodes.values()]
        assert kinds.count(NodeKind.PACKET_SWITCH) == 2
        assert kinds.count(NodeKind.ROADM) == 3
        assert len(testbed.links_of_layer(LinkLayer.FIBER)) == 3
        assert len(testbed.links_of_layer(LinkLayer.CROSS_LAYER)) == 2
        capable = {p.id.node for p in testbed.ports.values() if p.encryption_capable}
        assert capable == {"ROADM1", "ROADM2"}

    def test_empty_document(self):
        topology = load_topology(b"nodes: []\nports: []\nlinks: []\n")
        assert topology.nodes == {}
        assert topology.links == ()

    def test_blank_document(self):
        assert load_topology(b"").nodes == {}

    def test_unknown_port(self):
        with pytest.raises(ValidationError, match="unknown port"):
            load_topology(BAD_LINK)

    def test_malformed_yaml(self):
        with pytest.raises(ParseError):
            load_topology(b"nodes: [unclosed")

    def test_root_must_be_mapping(self):
        with pytest.raises(ParseError):
            load_topology(b"- just\n- a list\n")

    def test_encryption_on_switch_port(self):
        document = b"""
nodes:
  - {id: S1, kind: PacketSwitch, mgmt_address: 10.0.0.1}
ports:
  - {id: {node: S1, name: eth1}, role: NetworkPort, encryption_capable: true}
"""
        with pytest.raises(ValidationError, match="encryption capable"):
            load_topology(document)

    def test_cross_layer_needs_client_port(self):
        document = b"""
nodes:
  - {id: S1, kind: PacketSwitch, mgmt_address: 10.0.0.1}
  - {id: R1, kind: Roadm, mgmt_address: 10.0.0.2}
ports:
  - {id: {node: S1, name: eth1}, role: NetworkPort}
  - {id: {node: R1, name: N1}, role: NetworkPort}
links:
  - {a: {node: S1, name: eth1}, z: {node: R1, name: N1}, layer: CrossLayer}
"""
        with pytest.raises(ValidationError, match="client port"):
            load_topology(document)

    def test_fiber_between_roadms_only(self):
        document = b"""
nodes:
  - {id: S1, kind: PacketSwitch, mgmt_address: 10.0.0.1}
  - {id: R1, kind: Roadm, mgmt_address: 10.0.0.2}
ports:
  - {id: {node: S1, name: eth1}, role: NetworkPort}
  - {id: {node: R1, name: N1}, role: NetworkPort}
links:
  - {a: {node: S1, name: eth1}, z: {node: R1, name: N1}, layer: Fiber}
"""
        with pytest.raises(ValidationError, match="fiber"):
            load_topology(document)

    def test_duplicate_mgmt_address(self):
        document = b"""
nodes:
  - {id: R1, kind: Roadm, mgmt_address: 10.0.0.1}
  - {id: R2, kind: Roadm, mgmt_address: 10.0.0.1}
"""
        with pytest.raises(ValidationError, match="duplicate mgmt_address"):
            load_topology(document)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError, match="Roadm"):
            load_topology(b"nodes:\n  - {id: X, kind: Router, mgmt_address: 1.2.3.4}\n")

    def test_round_trip(self, testbed):
        reloaded = load_topology(dump_topology(testbed))
        assert reloaded == testbed
        assert dump_topology(reloaded) == dump_topology(testbed)


class TestClientPort:

    def test_ovs1(self, testbed):
        port = roadm_client_port_of(testbed, "OVS1")
        assert port == PortId("ROADM1", "1-7-C1")
        assert testbed.node(port.node).mgmt_address == "10.12.105.39"

    def test_ovs2(self, testbed):
        port = roadm_client_port_of(testbed, "OVS2")
        assert port == PortId("ROADM2", "1-7-C1")
        assert testbed.node(port.node).mgmt_address == "10.12.105.38"

    def test_isolated_switch(self):
        document = b"""
nodes:
  - {id: S1, kind: PacketSwitch, mgmt_address: 10.0.0.1}
ports:
  - {id: {node: S1, name: eth1}, role: NetworkPort}
"""
        with pytest.raises(NotAttached):
            roadm_client_port_of(load_topology(document), "S1")

    def test_ambiguous_attachment(self):
        document = b"""
nodes:
  - {id: S1, kind: PacketSwitch, mgmt_address: 10.0.0.1}
  - {id: R1, kind: Roadm, mgmt_address: 10.0.0.2}
  - {id: R2, kind: Roadm, mgmt_address: 10.0.0.3}
ports:
  - {id: {node: S1, name: eth1}, role: NetworkPort}
  - {id: {node: S1, name: eth2}, role: NetworkPort}
  - {id: {node: R1, name: C1}, role: ClientPort}
  - {id: {node: R2, name: C1}, role: ClientPort}
links:
  - {a: {node: S1, name: eth1}, z: {node: R1, name: C1}, layer: CrossLayer}
  - {a: {node: S1, name: eth2}, z: {node: R2, name: C1}, layer: CrossLayer}
"""
        with pytest.raises(AmbiguousAttachment):
            roadm_client_port_of(load_topology(document), "S1")

    def test_roadm_is_not_a_switch(self, testbed):
        with pytest.raises(ValueError):
            roadm_client_port_of(testbed, "ROADM1")


class TestOpticalPath:

    def test_adjacent(self, testbed):
        path = optical_path(testbed, "ROADM1", "ROADM2")
        assert len(path) == 1
        assert set(path[0].nodes()) == {"ROADM1", "ROADM2"}

    def test_direct_beats_two_hops(self):
        topology = build_topology([("A", "B"), ("B", "C"), ("C", "A")])
        path = topology.optical_path("A", "C")
        assert topology.path_nodes("A", path) == ["A", "C"]

    def test_same_node(self, testbed):
        assert optical_path(testbed, "ROADM3", "ROADM3") == []

    def test_weight_wins_over_hops(self):
        topology = build_topology([("A", "B", 5), ("A", "C"), ("C", "B")])
        assert topology.path_nodes("A", topology.optical_path("A", "B")) == ["A", "C", "B"]

    def test_tie_break_lexicographic(self):
        topology = build_topology([("A", "C"), ("C", "D"), ("A", "B"), ("B", "D")])
        assert topology.path_nodes("A", topology.optical_path("A", "D")) == ["A", "B", "D"]
        assert topology.path_nodes("D", topology.optical_path("D", "A")) == ["D", "B", "A"]

    def test_disconnected(self):
        topology = build_topology([("A", "B")], roadms=["C"])
        with pytest.raises(NoPath):
            topology.optical_path("A", "C")

    def test_not_a_roadm(self, testbed):
        with pytest.raises(ValueError):
            optical_path(testbed, "OVS1", "ROADM2")


NAMES = ["R0", "R1", "R2", "R3", "R4", "R5"]


@st.composite
def small_graphs(draw):
    count = draw(st.integers(min_value=2, max_value=6))
    pairs = list(itertools.combinations(NAMES[:count], 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    fibers = [(u, v, draw(st.integers(min_value=1, max_value=3))) for u, v in chosen]
    a, z = draw(st.lists(st.sampled_from(NAMES[:count]), min_size=2, max_size=2, unique=True))
    return NAMES[:count], fibers, a, z


def brute_force(names, fibers, a, z):
    graph = nx.Graph()
    graph.add_nodes_from(names)
    for u, v, w in fibers:
        graph.add_edge(u, v, weight=w)
    paths = list(nx.all_simple_paths(graph, a, z))
    if not paths:
        return None, []
    cost = {tuple(p): sum(graph.edges[u, v]["weight"] for u, v in zip(p, p[1:])) for p in paths}
    best = min(cost.values())
    return best, sorted(p for p, c in cost.items() if c == best)


@settings(max_examples=300, deadline=None, derandomize=True)
@given(small_graphs())
def test_optical_path_matches_exhaustive_search(graph):
    names, fibers, a, z = graph
    topology = build_topology(fibers, roadms=names)
    best, winners = brute_force(names, fibers, a, z)
    if best is None:
        with pytest.raises(NoPath):
            topology.optical_path(a, z)
        return

    path = topology.optical_path(a, z)
    nodes = topology.path_nodes(a, path)
    assert sum(link.hop_weight for link in path) == best
    assert tuple(nodes) in winners
    for first, second in zip(path, path[1:]):
        assert set(first.nodes()) & set(second.nodes())
    if a < z:
        assert tuple(nodes) == winners[0]


@settings(max_examples=200, deadline=None)
@given(small_graphs())
def test_optical_path_symmetry(graph):
    names, fibers, a, z = graph
    topology = build_topology(fibers, roadms=names)
    try:
        forward = topology.optical_path(a, z)
    except NoPath:
        with pytest.raises(NoPath):
            topology.optical_path(z, a)
        return
    assert list(reversed(forward)) == topology.optical_path(z, a)
