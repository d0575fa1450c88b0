"""
Multilayer Topology
===================

In-memory model of the two-layer network: packet switches on top, a ROADM
ring below, cross-layer links attaching each switch to a ROADM client port.
AES-capable client ports are flagged with ``encryption_capable``.

The topology is declared in a YAML file (see ``testbed.topo``) with three
sections, ``nodes``, ``ports`` and ``links``, whose field names mirror the
dataclasses below. It is immutable once loaded.

Usage:
    from topology import load_topology
    topo = load_topology(open('testbed.topo', 'rb').read())
    topo.optical_path('ROADM1', 'ROADM2')
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import pairwise
from typing import Mapping

import networkx as nx
import yaml

from errors import AmbiguousAttachment, NoPath, NotAttached, ParseError, ValidationError

logger = logging.getLogger(__name__)


class NodeKind(Enum):
    PACKET_SWITCH = "PacketSwitch"
    ROADM = "Roadm"


class PortRole(Enum):
    CLIENT = "ClientPort"
    NETWORK = "NetworkPort"
    HOST = "HostPort"


class LinkLayer(Enum):
    PACKET = "Packet"
    FIBER = "Fiber"
    CROSS_LAYER = "CrossLayer"


@dataclass(frozen=True, order=True)
class PortId:
    node: str
    name: str

    def __str__(self):
        return f"{self.node}|{self.name}"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    mgmt_address: str


@dataclass(frozen=True)
class Port:
    id: PortId
    role: PortRole
    encryption_capable: bool = False


@dataclass(frozen=True)
class Link:
    a: PortId
    z: PortId
    layer: LinkLayer
    hop_weight: int = 1

    def nodes(self):
        return self.a.node, self.z.node

    def other_end(self, port_id):
        return self.z if port_id == self.a else self.a


@dataclass(frozen=True)
class MultilayerTopology:
    nodes: Mapping[str, Node]
    ports: Mapping[PortId, Port]
    links: tuple[Link, ...]

    def node(self, node_id):
        return self.nodes[node_id]

    def port(self, port_id):
        return self.ports[port_id]

    def packet_switches(self):
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.PACKET_SWITCH)

    def roadms(self):
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.ROADM)

    def node_by_address(self, mgmt_address):
        for node in self.nodes.values():
            if node.mgmt_address == mgmt_address:
                return node
        return None

    def links_of_layer(self, layer):
        return [link for link in self.links if link.layer is layer]

    @cached_property
    def fiber_graph(self):
        """Undirected graph of ROADMs; each edge keeps the lightest fiber link between its ends"""
        graph = nx.Graph()
        graph.add_nodes_from(self.roadms())
        for link in self.links_of_layer(LinkLayer.FIBER):
            u, v = link.nodes()
            if u == v:
                continue
            current = graph.get_edge_data(u, v)
            if current is None or link.hop_weight < current["weight"]:
                graph.add_edge(u, v, weight=link.hop_weight, link=link)
        return graph

    def roadm_client_port_of(self, switch):
        """
        Find the ROADM client port a packet switch is attached to

        Args:
            switch (str): PacketSwitch node id

        Returns:
            PortId: The ROADM ClientPort on the far side of the switch's only
            cross-layer link
        """
        node = self.nodes.get(switch)
        if node is None or node.kind is not NodeKind.PACKET_SWITCH:
            raise ValueError(f"{switch} is not a packet switch")

        attached = []
        for link in self.links_of_layer(LinkLayer.CROSS_LAYER):
            for end in (link.a, link.z):
                if end.node == switch:
                    attached.append(link.other_end(end))
        if not attached:
            raise NotAttached(f"{switch} has no cross-layer link")
        if len(attached) > 1:
            raise AmbiguousAttachment(f"{switch} has {len(attached)} cross-layer links")
        return attached[0]

    def optical_path(self, a, z):
        """
        Minimum-weight path over fiber links between two ROADMs

        Equal-weight paths are broken by the lexicographically smallest node
        sequence, read from the smaller of the two endpoints so that the
        answer for (z, a) is the exact reverse of the answer for (a, z).

        Args:
            a (str): Source ROADM
            z (str): Destination ROADM

        Returns:
            list[Link]: Fiber links in path order; empty when a == z
        """
        for node_id in (a, z):
            node = self.nodes.get(node_id)
            if node is None or node.kind is not NodeKind.ROADM:
                raise ValueError(f"{node_id} is not a ROADM")
        if a == z:
            return []

        source, target = min(a, z), max(a, z)
        try:
            candidates = list(nx.all_shortest_paths(self.fiber_graph, source, target, weight="weight"))
        except nx.NetworkXNoPath:
            raise NoPath(f"no fiber path between {a} and {z}") from None
        best = min(candidates)
        if source != a:
            best.reverse()
        return [self.fiber_graph.edges[u, v]["link"] for u, v in pairwise(best)]

    def path_nodes(self, a, path):
        """Node sequence walked by ``path`` starting at ``a``"""
        sequence = [a]
        for link in path:
            u, v = link.nodes()
            sequence.append(v if sequence[-1] == u else u)
        return sequence


def roadm_client_port_of(topology, switch):
    return topology.roadm_client_port_of(switch)


def optical_path(topology, a, z):
    return topology.optical_path(a, z)


# Loading

def _require(entry, key, where):
    if key not in entry:
        raise ValidationError(f"{where}: missing field {key!r}")
    return entry[key]


def _enum(enum_cls, value, where):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ValidationError(f"{where}: {value!r} is not one of {allowed}") from None


def _port_id(raw, where):
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: port reference must be a mapping with node and name")
    return PortId(node=str(_require(raw, "node", where)), name=str(_require(raw, "name", where)))


def _section_list(document, name):
    entries = document.get(name) or []
    if not isinstance(entries, list):
        raise ParseError(f"section {name!r} must be a list")
    for entry in entries:
        if not isinstance(entry, dict):
            raise ParseError(f"every entry of {name!r} must be a mapping")
    return entries


def _check_link(link, nodes, ports, where):
    for end in (link.a, link.z):
        if end not in ports:
            raise ValidationError(f"{where}: unknown port {end}")
    kinds = {nodes[link.a.node].kind, nodes[link.z.node].kind}
    roles = (ports[link.a].role, ports[link.z].role)

    if link.layer is LinkLayer.FIBER:
        if kinds != {NodeKind.ROADM} or roles != (PortRole.NETWORK, PortRole.NETWORK):
            raise ValidationError(f"{where}: fiber links join two ROADM network ports")
    elif link.layer is LinkLayer.CROSS_LAYER:
        if kinds != {NodeKind.ROADM, NodeKind.PACKET_SWITCH}:
            raise ValidationError(f"{where}: cross-layer links join a packet switch and a ROADM")
        roadm_end = link.a if nodes[link.a.node].kind is NodeKind.ROADM else link.z
        if ports[roadm_end].role is not PortRole.CLIENT:
            raise ValidationError(f"{where}: cross-layer links terminate on a ROADM client port")
    elif kinds != {NodeKind.PACKET_SWITCH}:
        raise ValidationError(f"{where}: packet links join two packet switches")


def load_topology(document):
    """
    Parse and validate a topology file

    Args:
        document (bytes | str): YAML text with nodes, ports and links

    Returns:
        MultilayerTopology
    """
    try:
        raw = yaml.safe_load(document)
    except yaml.YAMLError as e:
        raise ParseError(f"topology is not valid YAML: {e}") from e
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("topology root must be a mapping")

    nodes = {}
    addresses = set()
    for i, entry in enumerate(_section_list(raw, "nodes")):
        where = f"nodes[{i}]"
        node = Node(
            id=str(_require(entry, "id", where)),
            kind=_enum(NodeKind, _require(entry, "kind", where), where),
            mgmt_address=str(_require(entry, "mgmt_address", where)),
        )
        if node.id in nodes:
            raise ValidationError(f"{where}: duplicate node id {node.id}")
        if node.mgmt_address in addresses:
            raise ValidationError(f"{where}: duplicate mgmt_address {node.mgmt_address}")
        nodes[node.id] = node
        addresses.add(node.mgmt_address)

    ports = {}
    for i, entry in enumerate(_section_list(raw, "ports")):
        where = f"ports[{i}]"
        capable = entry.get("encryption_capable", False)
        if not isinstance(capable, bool):
            raise ValidationError(f"{where}: encryption_capable must be a boolean")
        port = Port(
            id=_port_id(_require(entry, "id", where), where),
            role=_enum(PortRole, _require(entry, "role", where), where),
            encryption_capable=capable,
        )
        if port.id.node not in nodes:
            raise ValidationError(f"{where}: unknown node {port.id.node}")
        if port.id in ports:
            raise ValidationError(f"{where}: duplicate port {port.id}")
        if port.encryption_capable and nodes[port.id.node].kind is not NodeKind.ROADM:
            raise ValidationError(f"{where}: only ROADM ports can be encryption capable")
        ports[port.id] = port

    links = []
    for i, entry in enumerate(_section_list(raw, "links")):
        where = f"links[{i}]"
        weight = entry.get("hop_weight", 1)
        if isinstance(weight, bool) or not isinstance(weight, int) or weight < 1:
            raise ValidationError(f"{where}: hop_weight must be a positive integer")
        link = Link(
            a=_port_id(_require(entry, "a", where), where),
            z=_port_id(_require(entry, "z", where), where),
            layer=_enum(LinkLayer, _require(entry, "layer", where), where),
            hop_weight=weight,
        )
        _check_link(link, nodes, ports, where)
        links.append(link)

    topology = MultilayerTopology(nodes=nodes, ports=ports, links=tuple(links))
    logger.info(f"Loaded topology: {len(nodes)} nodes, {len(ports)} ports, {len(links)} links")
    return topology


def dump_topology(topology):
    """Serialize a topology back to the YAML file format"""
    def port_ref(port_id):
        return {"node": port_id.node, "name": port_id.name}

    document = {
        "nodes": [
            {"id": n.id, "kind": n.kind.value, "mgmt_address": n.mgmt_address}
            for n in topology.nodes.values()
        ],
        "ports": [
            {"id": port_ref(p.id), "role": p.role.value, "encryption_capable": p.encryption_capable}
            for p in topology.ports.values()
        ],
        "links": [
            {"a": port_ref(l.a), "z": port_ref(l.z), "layer": l.layer.value, "hop_weight": l.hop_weight}
            for l in topology.links
        ],
    }
    return yaml.safe_dump(document, sort_keys=False).encode("utf-8")


def load_topology_file(path):
    """Read and load a topology file from disk"""
    try:
        with open(path, "rb") as f:
            return load_topology(f.read())
    except OSError as e:
        raise ParseError(f"cannot read topology {path}: {e}") from e
