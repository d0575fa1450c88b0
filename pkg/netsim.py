"""
Simulated Device Plane
======================

In-process stand-ins for the lab hardware:

- SimOvc: the optical controller. Accepts COP calls, checks AES capability of
  the endpoint client ports, computes the fiber path and brings the
  lightpath up after hops x per_hop_delay seconds of wall-clock time.
- SimSwitchAgent: one per packet switch. Accepts tunnel configs and keeps a
  tunnel Pending until the lightpath underneath it is Up.

Each device is served by its own Flask app on a local port so the
orchestrator only ever talks to it over HTTP. ``GET /state`` dumps device
state for inspection.

Usage:
    with DevicePlane(topology, per_hop_delay=2.0) as plane:
        plane.ovc_address, plane.agent_addresses
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from flask import Flask, jsonify, request
from werkzeug.serving import make_server

from compiler import call_id_for_tunnel, tunnel_name
from config import split_address
from errors import (
    DuplicateCall,
    DuplicateTunnel,
    MalformedBody,
    NoPath,
    RejectNoEncryptionCapablePort,
    RejectNoPath,
    RejectUnknownPort,
    SimRejection,
    UnknownIntent,
)
from sbi import decode_cop_call, decode_tunnel_config, encode_cop_call
from topology import LinkLayer, NodeKind, PortId, PortRole

logger = logging.getLogger(__name__)


class CallStatus(Enum):
    SETTING_UP = "SettingUp"
    UP = "Up"


class TunnelStatus(Enum):
    PENDING = "Pending"
    ACTIVE = "Active"


class EncryptedAt(Enum):
    OPTICAL = "Optical"
    IP = "Ip"
    NONE = "None"


@dataclass
class CallRecord:
    call: object
    status: CallStatus
    path: list
    accepted_at: float
    up_at: Optional[float] = None

    @property
    def hops(self):
        return max(len(self.path) - 1, 0)

    def to_dict(self):
        return {
            "callId": self.call.call_id,
            "status": self.status.value,
            "encryption": self.call.encryption,
            "path": list(self.path),
            "hops": self.hops,
            "acceptedAt": self.accepted_at,
            "upAt": self.up_at,
        }


@dataclass
class TunnelRecord:
    config: object
    status: TunnelStatus
    configured_at: float
    activated_at: Optional[float] = None

    def to_dict(self):
        return {
            "name": self.config.name,
            "status": self.status.value,
            "localAddr": self.config.local_addr,
            "remoteAddr": self.config.remote_addr,
            "mode": self.config.mode.value,
            "keyRef": self.config.key_ref,
            "configuredAt": self.configured_at,
            "activatedAt": self.activated_at,
        }


class SimOvc:
    """Simulated optical controller managing the ROADM ring"""

    def __init__(self, topology, per_hop_delay=2.0):
        """
        Args:
            topology (MultilayerTopology): Optical view of the network
            per_hop_delay (float): Lightpath setup time per fiber hop, seconds
        """
        if per_hop_delay < 0:
            raise ValueError("per_hop_delay must be >= 0")
        self.topology = topology
        self.per_hop_delay = per_hop_delay
        self.calls = {}
        self._timers = {}
        self._subscribers = {}
        self._lock = threading.Lock()

    def _resolve(self, endpoint):
        node = self.topology.node_by_address(endpoint.router_id)
        if node is None or node.kind is not NodeKind.ROADM:
            raise RejectUnknownPort(f"no ROADM at {endpoint.router_id}")
        port = self.topology.ports.get(PortId(node.id, endpoint.port_name))
        if port is None or port.role is not PortRole.CLIENT:
            raise RejectUnknownPort(f"no client port {endpoint.endpoint_id}")
        return port

    def handle_call(self, call):
        """
        Accept a COP call and schedule its lightpath

        Returns:
            CallRecord: Snapshot right after acceptance
        """
        a_port = self._resolve(call.a_end)
        z_port = self._resolve(call.z_end)
        if call.encryption:
            lacking = [p for p in (a_port, z_port) if not p.encryption_capable]
            if lacking:
                names = ", ".join(str(p.id) for p in lacking)
                raise RejectNoEncryptionCapablePort(f"no encryption-capable port at {names}")
        try:
            links = self.topology.optical_path(a_port.id.node, z_port.id.node)
        except NoPath as e:
            raise RejectNoPath(str(e)) from e
        path = self.topology.path_nodes(a_port.id.node, links)

        with self._lock:
            if call.call_id in self.calls:
                raise DuplicateCall(f"call {call.call_id} already exists")
            record = CallRecord(call=call, status=CallStatus.SETTING_UP, path=path, accepted_at=time.monotonic())
            self.calls[call.call_id] = record
            delay = record.hops * self.per_hop_delay
            if delay > 0:
                timer = threading.Timer(delay, self._lightpath_up, args=(call.call_id, record))
                timer.daemon = True
                self._timers[call.call_id] = timer
                timer.start()
            snapshot = replace(record)

        logger.info(f"OVC accepted call {call.call_id}: path {'-'.join(path)}, {record.hops} hop(s), up in {delay:.3f}s")
        if delay <= 0:
            self._lightpath_up(call.call_id, record)
            snapshot = replace(record)
        return snapshot

    def _lightpath_up(self, call_id, record):
        with self._lock:
            if self.calls.get(call_id) is not record:
                return
            record.status = CallStatus.UP
            record.up_at = time.monotonic()
            self._timers.pop(call_id, None)
            callbacks = self._subscribers.pop(call_id, [])
            up_at = record.up_at
        logger.info(f"Lightpath for call {call_id} is up")
        for callback in callbacks:
            callback(up_at)

    def on_lightpath_up(self, call_id, callback):
        """Invoke ``callback(up_at)`` once the lightpath of ``call_id`` is Up"""
        with self._lock:
            record = self.calls.get(call_id)
            if record is None or record.status is not CallStatus.UP:
                self._subscribers.setdefault(call_id, []).append(callback)
                return
            up_at = record.up_at
        callback(up_at)

    def unsubscribe(self, call_id, callback):
        with self._lock:
            callbacks = self._subscribers.get(call_id)
            if callbacks and callback in callbacks:
                callbacks.remove(callback)
            if not callbacks:
                self._subscribers.pop(call_id, None)

    def pending_subscriptions(self, call_id):
        with self._lock:
            return len(self._subscribers.get(call_id, ()))

    def delete_call(self, call_id):
        with self._lock:
            record = self.calls.pop(call_id, None)
            timer = self._timers.pop(call_id, None)
            self._subscribers.pop(call_id, None)
        if timer:
            timer.cancel()
        if record is None:
            raise RejectUnknownPort(f"unknown call {call_id}")
        logger.info(f"OVC released call {call_id}")
        return record

    def get_call(self, call_id):
        with self._lock:
            record = self.calls.get(call_id)
            return replace(record) if record else None

    def state(self):
        with self._lock:
            return {
                "perHopDelayMs": round(self.per_hop_delay * 1000),
                "calls": {cid: r.to_dict() for cid, r in self.calls.items()},
            }

    def close(self):
        with self._lock:
            timers = list(self._timers.values())
            self._timers.clear()
        for timer in timers:
            timer.cancel()


class SimSwitchAgent:
    """Simulated switch agent holding encrypted tunnels"""

    def __init__(self, node_id, lightpath_feed=None, host_interface=True):
        self.node_id = node_id
        self.lightpath_feed = lightpath_feed
        self.host_interface = host_interface
        self.tunnels = {}
        self._callbacks = {}
        self._lock = threading.Lock()

    def handle_tunnel(self, config):
        with self._lock:
            if config.name in self.tunnels:
                raise DuplicateTunnel(f"tunnel {config.name} already exists on {self.node_id}")
            record = TunnelRecord(config=config, status=TunnelStatus.PENDING, configured_at=time.monotonic())
            self.tunnels[config.name] = record
            snapshot = replace(record)
        logger.info(f"{self.node_id}: tunnel {config.name} pending ({config.local_addr} -> {config.remote_addr})")

        if self.lightpath_feed is not None:
            def callback(up_at):
                self._activate(config.name, record, up_at)

            with self._lock:
                self._callbacks[config.name] = callback
            self.lightpath_feed.on_lightpath_up(call_id_for_tunnel(config.name), callback)
        return snapshot

    def _activate(self, name, record, up_at):
        with self._lock:
            if self.tunnels.get(name) is not record or record.status is TunnelStatus.ACTIVE:
                return
            record.status = TunnelStatus.ACTIVE
            record.activated_at = max(time.monotonic(), up_at)
            self._callbacks.pop(name, None)
        logger.info(f"{self.node_id}: tunnel {name} active")

    def remove_tunnel(self, name):
        with self._lock:
            record = self.tunnels.pop(name, None)
            callback = self._callbacks.pop(name, None)
        if callback is not None and self.lightpath_feed is not None:
            self.lightpath_feed.unsubscribe(call_id_for_tunnel(name), callback)
        if record is None:
            raise RejectUnknownPort(f"unknown tunnel {name} on {self.node_id}")
        logger.info(f"{self.node_id}: tunnel {name} removed")
        return record

    def tunnel(self, name):
        with self._lock:
            record = self.tunnels.get(name)
            return replace(record) if record else None

    def state(self):
        with self._lock:
            return {
                "node": self.node_id,
                "hostInterface": self.host_interface,
                "tunnels": {name: r.to_dict() for name, r in self.tunnels.items()},
            }


def ovc_handle_call(sim, call):
    return sim.handle_call(call)


def agent_handle_tunnel(sim, config):
    return sim.handle_tunnel(config)


# HTTP surfaces

def error_response(message, code=404, error_type=None):
    """Create error response"""
    body = {"success": False, "error": message}
    if error_type:
        body["errorType"] = error_type
    return jsonify(body), code


def _register_error_handlers(app):
    @app.errorhandler(SimRejection)
    def rejected(error):
        logger.warning(f"Rejected: {error.describe()}")
        return error_response(str(error), error.status, error.reason)

    @app.errorhandler(MalformedBody)
    def malformed(error):
        return error_response(str(error), 400, error.reason)

    @app.errorhandler(404)
    def not_found(error):
        return error_response("Endpoint not found", 404)


def _call_reply(record, code=200):
    status = "UP" if record.status is CallStatus.UP else "DOWN"
    body = encode_cop_call(replace(record.call, oper_status=status))
    return body, code, {"Content-Type": "application/json"}


def create_ovc_app(ovc):
    """Flask app serving the COP calls subtree of a SimOvc"""
    app = Flask(f"ovc-{id(ovc)}")
    _register_error_handlers(app)

    @app.route("/data/calls/call-<call_id>", methods=["POST"])
    def create_call(call_id):
        call = decode_cop_call(request.get_data())
        if call.call_id != call_id:
            return error_response(f"callId {call.call_id} does not match path call-{call_id}", 400)
        return _call_reply(ovc.handle_call(call), 201)

    @app.route("/data/calls/call-<call_id>", methods=["GET"])
    def get_call(call_id):
        record = ovc.get_call(call_id)
        if record is None:
            return error_response(f"unknown call {call_id}")
        return _call_reply(record)

    @app.route("/data/calls/call-<call_id>", methods=["DELETE"])
    def delete_call(call_id):
        ovc.delete_call(call_id)
        return jsonify({"success": True, "callId": call_id})

    @app.route("/state")
    def state():
        return jsonify(ovc.state())

    return app


def create_agent_app(agent):
    """Flask app serving the tunnel-config protocol of a SimSwitchAgent"""
    app = Flask(f"agent-{agent.node_id}")
    _register_error_handlers(app)

    @app.route("/tunnels/<name>", methods=["POST"])
    def create_tunnel(name):
        config = decode_tunnel_config(request.get_data(), local_node=agent.node_id)
        if config.name != name:
            return error_response(f"tunnel name {config.name} does not match path {name}", 400)
        record = agent.handle_tunnel(config)
        return jsonify({"success": True, "name": name, "status": record.status.value}), 201

    @app.route("/tunnels/<name>", methods=["DELETE"])
    def delete_tunnel(name):
        agent.remove_tunnel(name)
        return jsonify({"success": True, "name": name})

    @app.route("/state")
    def state():
        return jsonify(agent.state())

    return app


class ServerThread:
    """Runs one Flask app on its own thread"""

    def __init__(self, name, app, address):
        host, port = split_address(address)
        self.name = name
        self._server = make_server(host, port, app, threaded=True)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True, name=name)

    @property
    def address(self):
        return f"{self._server.host}:{self._server.server_port}"

    def start(self):
        self._thread.start()
        logger.info(f"{self.name} listening on {self.address}")
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()


class DevicePlane:
    """The simulated OVC and one agent per packet switch, each on its own port"""

    def __init__(self, topology, per_hop_delay=0.0, ovc_address="127.0.0.1:0", agent_addresses=None):
        """
        Args:
            topology (MultilayerTopology): Network to simulate
            per_hop_delay (float): Lightpath setup time per hop, seconds
            ovc_address (str): host:port for the OVC (port 0 = ephemeral)
            agent_addresses (dict | None): node id -> host:port; missing
                switches get an ephemeral port on the OVC host
        """
        self.topology = topology
        self.ovc = SimOvc(topology, per_hop_delay=per_hop_delay)
        self.agents = {
            node_id: SimSwitchAgent(node_id, lightpath_feed=self.ovc)
            for node_id in topology.packet_switches()
        }
        host = split_address(ovc_address)[0]
        agent_addresses = agent_addresses or {}
        self._requested = {"OVC": ovc_address}
        for node_id in self.agents:
            self._requested[node_id] = agent_addresses.get(node_id, f"{host}:0")
        self._servers = {}

    def start(self):
        try:
            self._servers["OVC"] = ServerThread("OVC", create_ovc_app(self.ovc), self._requested["OVC"]).start()
            for node_id, agent in self.agents.items():
                server = ServerThread(f"agent-{node_id}", create_agent_app(agent), self._requested[node_id])
                self._servers[node_id] = server.start()
        except Exception:
            self.stop()
            raise
        return self

    def stop(self):
        for server in self._servers.values():
            server.stop()
        self._servers.clear()
        self.ovc.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    @property
    def ovc_address(self):
        return self._servers["OVC"].address

    @property
    def agent_addresses(self):
        return {node_id: self._servers[node_id].address for node_id in self.agents}

    def _switches_for_call(self, call):
        switches = []
        for endpoint in (call.a_end, call.z_end):
            roadm = self.topology.node_by_address(endpoint.router_id)
            client = PortId(roadm.id, endpoint.port_name)
            for link in self.topology.links_of_layer(LinkLayer.CROSS_LAYER):
                if client in (link.a, link.z):
                    switches.append(link.other_end(client).node)
        return switches

    def end_to_end_check(self, intent_id):
        """
        Check whether an intent's traffic can flow host to host

        Returns:
            dict: ``connectivity`` (bool) and ``encrypted_at`` (EncryptedAt)
        """
        record = self.ovc.get_call(intent_id)
        if record is None:
            raise UnknownIntent(f"no lightpath for intent {intent_id}")

        switches = self._switches_for_call(record.call)
        agents = [self.agents[s] for s in switches if s in self.agents]
        hosts_ready = len(agents) == 2 and all(a.host_interface for a in agents)
        lightpath_up = record.status is CallStatus.UP

        tunnels = [a.tunnel(tunnel_name(intent_id)) for a in agents]
        tunnels = [t for t in tunnels if t is not None]
        if tunnels:
            connectivity = lightpath_up and hosts_ready and len(tunnels) == 2 and all(
                t.status is TunnelStatus.ACTIVE for t in tunnels
            )
            layer = EncryptedAt.IP
        else:
            connectivity = lightpath_up and hosts_ready
            layer = EncryptedAt.OPTICAL if record.call.encryption else EncryptedAt.NONE

        return {"connectivity": connectivity, "encrypted_at": layer if connectivity else EncryptedAt.NONE}

    def lightpath_setup_time(self, intent_id):
        """Seconds between call acceptance and lightpath up, or None while setting up"""
        record = self.ovc.get_call(intent_id)
        if record is None or record.up_at is None:
            return None
        return record.up_at - record.accepted_at


def end_to_end_check(sim, intent_id):
    return sim.end_to_end_check(intent_id)
