import os

import pytest
import yaml

from config import OrchestratorConfig
from netsim import DevicePlane
from service import Orchestrator, create_app
from topology import load_topology, load_topology_file

HERE = os.path.dirname(os.path.abspath(__file__))
TESTBED_PATH = os.path.join(HERE, "testbed.topo")
FIXTURES = os.path.join(HERE, "fixtures")


def build_topology(fibers, switches=None, capable=(), roadms=None):
    """
    Small topology for tests

    Args:
        fibers: (u, v) or (u, v, weight) ROADM pairs
        switches (dict): switch id -> ROADM id it is attached to
        capable: ROADM ids whose client port is AES capable
        roadms: extra ROADM ids with no fiber
    """
    switches = switches or {}
    names = set(roadms or [])
    for fiber in fibers:
        names.update(fiber[:2])
    names = sorted(names)

    nodes = [{"id": r, "kind": "Roadm", "mgmt_address": f"10.0.0.{i + 1}"} for i, r in enumerate(names)]
    ports = [
        {"id": {"node": r, "name": "C1"}, "role": "ClientPort", "encryption_capable": r in capable}
        for r in names
    ]
    links = []
    for i, fiber in enumerate(fibers):
        u, v = fiber[:2]
        weight = fiber[2] if len(fiber) > 2 else 1
        for node in (u, v):
            ports.append({"id": {"node": node, "name": f"N{i}"}, "role": "NetworkPort"})
        links.append({
            "a": {"node": u, "name": f"N{i}"},
            "z": {"node": v, "name": f"N{i}"},
            "layer": "Fiber",
            "hop_weight": weight,
        })
    for i, (switch, roadm) in enumerate(sorted(switches.items())):
        nodes.append({"id": switch, "kind": "PacketSwitch", "mgmt_address": f"10.1.0.{i + 1}"})
        ports.append({"id": {"node": switch, "name": "vhost0"}, "role": "HostPort"})
        ports.append({"id": {"node": switch, "name": "eth1"}, "role": "NetworkPort"})
        links.append({
            "a": {"node": switch, "name": "eth1"},
            "z": {"node": roadm, "name": "C1"},
            "layer": "CrossLayer",
        })
    return load_topology(yaml.safe_dump({"nodes": nodes, "ports": ports, "links": links}))


def make_orchestrator(topology, plane, **overrides):
    config = OrchestratorConfig(
        ovc_address=plane.ovc_address,
        agent_addresses=plane.agent_addresses,
        per_hop_delay_ms=round(plane.ovc.per_hop_delay * 1000),
        **overrides,
    )
    return Orchestrator(topology, config)


# fixtures

@pytest.fixture(scope="session")
def testbed():
    yield load_topology_file(TESTBED_PATH)


@pytest.fixture
def plane(testbed):
    with DevicePlane(testbed, per_hop_delay=0.0) as running:
        yield running


@pytest.fixture
def orchestrator(testbed, plane):
    yield make_orchestrator(testbed, plane)


@pytest.fixture
def client(orchestrator):
    app = create_app(orchestrator)
    app.config["TESTING"] = True
    yield app.test_client()


@pytest.fixture
def golden_cop_call():
    with open(os.path.join(FIXTURES, "cop_call_acino1.json"), "rb") as f:
        yield f.read()
