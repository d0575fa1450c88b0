"""
Southbound Interface
====================

Wire codecs and HTTP clients for the two southbound protocols:

    COP           POST/DELETE /data/calls/call-{id} toward the optical controller
    Tunnel config POST/DELETE /tunnels/{name} toward the switch agents (port 6640)

COP bodies are compact JSON with a fixed member order. ``encryption`` is a
presence marker: it is emitted as ``true`` when the call must be encrypted and
left out otherwise, never written as ``false``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import requests

from errors import (
    AgentRejected,
    AgentUnreachable,
    ControllerRejected,
    ControllerUnreachable,
    MalformedBody,
    OrchestratorError,
)

logger = logging.getLogger(__name__)

CONTROLLER = "Controller"
OVC = "OVC"

COP_CALLS_PATH = "/data/calls/call-"
TUNNELS_PATH = "/tunnels/"
OPER_STATUSES = ("UP", "DOWN")


class Protocol(Enum):
    HTTP = "HTTP"
    COP = "COP"
    TUNNELCFG = "TUNNELCFG"
    INTERNAL = "INTERNAL"


@dataclass(frozen=True)
class CopEndpoint:
    router_id: str
    interface_id: str
    endpoint_id: str

    def __post_init__(self):
        prefix = f"{self.router_id}|"
        if not self.endpoint_id.startswith(prefix) or len(self.endpoint_id) == len(prefix):
            raise ValueError(f"endpointId {self.endpoint_id!r} must be routerId|port")

    @classmethod
    def for_port(cls, router_id, port_name):
        return cls(router_id=router_id, interface_id="", endpoint_id=f"{router_id}|{port_name}")

    @property
    def port_name(self):
        return self.endpoint_id[len(self.router_id) + 1:]


@dataclass(frozen=True)
class TransportLayer:
    layer: str = "DWDM_LINK"
    direction: str = "BIDIR"
    layer_id: str = "layer"


@dataclass(frozen=True)
class CopCall:
    call_id: str
    a_end: CopEndpoint
    z_end: CopEndpoint
    oper_status: str = "UP"
    connections: tuple = ()
    encryption: bool = False
    transport_layer: TransportLayer = field(default_factory=TransportLayer)

    @property
    def path(self):
        return f"{COP_CALLS_PATH}{self.call_id}"


class TunnelMode(Enum):
    ENCRYPTED_GRE = "EncryptedGre"


@dataclass(frozen=True)
class TunnelConfig:
    name: str
    local_node: str
    remote_node: Optional[str]
    local_addr: str
    remote_addr: str
    mode: TunnelMode = TunnelMode.ENCRYPTED_GRE
    key_ref: str = "psk-admin"

    @property
    def path(self):
        return f"{TUNNELS_PATH}{self.name}"


@dataclass(frozen=True)
class CopAck:
    call_id: str
    oper_status: str


@dataclass(frozen=True)
class TunnelAck:
    name: str
    status: str


# COP codec

def _endpoint_to_wire(endpoint):
    return {
        "routerId": endpoint.router_id,
        "interfaceId": endpoint.interface_id,
        "endpointId": endpoint.endpoint_id,
    }


def encode_cop_call(call):
    """
    Serialize a COP call

    Members keep the order operStatus, callId, zEnd, connections, aEnd,
    encryption, transportLayer.

    Returns:
        bytes: Compact JSON body
    """
    body = {
        "operStatus": call.oper_status,
        "callId": call.call_id,
        "zEnd": _endpoint_to_wire(call.z_end),
        "connections": list(call.connections),
        "aEnd": _endpoint_to_wire(call.a_end),
    }
    if call.encryption:
        body["encryption"] = True
    body["transportLayer"] = {
        "layer": call.transport_layer.layer,
        "direction": call.transport_layer.direction,
        "layerId": call.transport_layer.layer_id,
    }
    return json.dumps(body, separators=(",", ":")).encode("utf-8")


def _load_object(body, what):
    try:
        document = json.loads(body)
    except (ValueError, UnicodeDecodeError) as e:
        raise MalformedBody(f"{what} is not valid JSON: {e}") from None
    if not isinstance(document, dict):
        raise MalformedBody(f"{what} must be a JSON object")
    return document


def _check_members(document, required, optional, where):
    unknown = set(document) - set(required) - set(optional)
    if unknown:
        raise MalformedBody(f"{where}: unknown member(s) {sorted(unknown)}")
    missing = [key for key in required if key not in document]
    if missing:
        raise MalformedBody(f"{where}: missing member(s) {missing}")


def _string(document, key, where):
    value = document[key]
    if not isinstance(value, str):
        raise MalformedBody(f"{where}.{key} must be a string")
    return value


def _endpoint_from_wire(raw, where):
    if not isinstance(raw, dict):
        raise MalformedBody(f"{where} must be an object")
    _check_members(raw, ("routerId", "interfaceId", "endpointId"), (), where)
    try:
        return CopEndpoint(
            router_id=_string(raw, "routerId", where),
            interface_id=_string(raw, "interfaceId", where),
            endpoint_id=_string(raw, "endpointId", where),
        )
    except ValueError as e:
        raise MalformedBody(f"{where}: {e}") from None


def decode_cop_call(body):
    """
    Parse a COP call body

    Unknown members are rejected. An absent ``encryption`` member decodes to
    an unencrypted call.

    Returns:
        CopCall
    """
    document = _load_object(body, "COP body")
    _check_members(
        document,
        ("operStatus", "callId", "zEnd", "connections", "aEnd", "transportLayer"),
        ("encryption",),
        "call",
    )

    oper_status = _string(document, "operStatus", "call")
    if oper_status not in OPER_STATUSES:
        raise MalformedBody(f"call.operStatus must be UP or DOWN, got {oper_status!r}")
    if not isinstance(document["connections"], list):
        raise MalformedBody("call.connections must be a list")
    if "encryption" in document and document["encryption"] is not True:
        raise MalformedBody("call.encryption is a presence marker and must be true when present")

    layer = document["transportLayer"]
    if not isinstance(layer, dict):
        raise MalformedBody("call.transportLayer must be an object")
    _check_members(layer, ("layer", "direction", "layerId"), (), "call.transportLayer")

    return CopCall(
        call_id=_string(document, "callId", "call"),
        a_end=_endpoint_from_wire(document["aEnd"], "call.aEnd"),
        z_end=_endpoint_from_wire(document["zEnd"], "call.zEnd"),
        oper_status=oper_status,
        connections=tuple(document["connections"]),
        encryption="encryption" in document,
        transport_layer=TransportLayer(
            layer=_string(layer, "layer", "call.transportLayer"),
            direction=_string(layer, "direction", "call.transportLayer"),
            layer_id=_string(layer, "layerId", "call.transportLayer"),
        ),
    )


# Tunnel-config codec

def encode_tunnel_config(config):
    body = {
        "name": config.name,
        "localAddr": config.local_addr,
        "remoteAddr": config.remote_addr,
        "mode": config.mode.value,
        "keyRef": config.key_ref,
    }
    return json.dumps(body, separators=(",", ":")).encode("utf-8")


def decode_tunnel_config(body, local_node=None):
    """
    Parse a tunnel-config body

    The node ids are not carried on the wire; the receiving agent supplies
    its own as ``local_node`` and the remote side stays unknown.
    """
    document = _load_object(body, "tunnel body")
    members = ("name", "localAddr", "remoteAddr", "mode", "keyRef")
    _check_members(document, members, (), "tunnel")
    for key in members:
        _string(document, key, "tunnel")
    try:
        mode = TunnelMode(document["mode"])
    except ValueError:
        raise MalformedBody(f"tunnel.mode {document['mode']!r} is not supported") from None
    if not document["name"]:
        raise MalformedBody("tunnel.name must not be empty")
    return TunnelConfig(
        name=document["name"],
        local_node=local_node,
        remote_node=None,
        local_addr=document["localAddr"],
        remote_addr=document["remoteAddr"],
        mode=mode,
        key_ref=document["keyRef"],
    )


# Clients

def _error_message(response):
    try:
        payload = response.json()
    except ValueError:
        return response.text or f"HTTP {response.status_code}"
    if isinstance(payload, dict) and payload.get("error"):
        return str(payload["error"])
    return f"HTTP {response.status_code}"


class SouthboundClient:
    """Shared HTTP plumbing for the southbound clients"""

    unreachable = ControllerUnreachable
    rejected = ControllerRejected

    def __init__(self, timeout=5.0, session=None):
        self.timeout = timeout
        self.session = session or requests.Session()
        # Device addresses are local; never route them through a proxy.
        self.session.trust_env = False

    def _request(self, method, url, body=None):
        headers = {"Content-Type": "application/json"} if body is not None else {}
        try:
            response = self.session.request(method, url, data=body, headers=headers, timeout=self.timeout)
        except requests.exceptions.RequestException as e:
            raise self.unreachable(f"{method} {url}: {e}") from e
        if not 200 <= response.status_code < 300:
            raise self.rejected(_error_message(response))
        return response


class CopClient(SouthboundClient):
    """COP client toward the optical controller"""

    def push_cop_call(self, endpoint, call, emit=None):
        """
        POST a call to the optical controller

        Args:
            endpoint (str): Controller host:port
            call (CopCall): Call to create
            emit (callable | None): Trace hook, invoked right before sending

        Returns:
            CopAck
        """
        body = encode_cop_call(call)
        if emit:
            emit(CONTROLLER, OVC, Protocol.COP, f"POST {call.path}")
        response = self._request("POST", f"http://{endpoint}{call.path}", body)
        try:
            reply = decode_cop_call(response.content)
            ack = CopAck(call_id=reply.call_id, oper_status=reply.oper_status)
        except MalformedBody:
            ack = CopAck(call_id=call.call_id, oper_status="DOWN")
        logger.info(f"COP call {call.call_id} accepted by {endpoint} (operStatus {ack.oper_status})")
        return ack

    def delete_cop_call(self, endpoint, call_id, emit=None):
        path = f"{COP_CALLS_PATH}{call_id}"
        if emit:
            emit(CONTROLLER, OVC, Protocol.COP, f"DELETE {path}")
        self._request("DELETE", f"http://{endpoint}{path}")
        logger.info(f"COP call {call_id} deleted on {endpoint}")


class TunnelClient(SouthboundClient):
    """Tunnel-config client toward the switch agents"""

    unreachable = AgentUnreachable
    rejected = AgentRejected

    def push_tunnel_config(self, agent, config, emit=None):
        """
        POST a tunnel config to a switch agent

        Args:
            agent (str): Agent host:port
            config (TunnelConfig): Tunnel to set up
            emit (callable | None): Trace hook, invoked right before sending

        Returns:
            TunnelAck
        """
        body = encode_tunnel_config(config)
        if emit:
            emit(CONTROLLER, config.local_node, Protocol.TUNNELCFG, f"POST {config.path} ({agent})")
        response = self._request("POST", f"http://{agent}{config.path}", body)
        try:
            payload = response.json()
        except ValueError:
            payload = None
        status = payload.get("status", "Pending") if isinstance(payload, dict) else "Pending"
        logger.info(f"Tunnel {config.name} accepted by {config.local_node} at {agent} ({status})")
        return TunnelAck(name=config.name, status=status)

    def delete_tunnel_config(self, agent, config, emit=None):
        if emit:
            emit(CONTROLLER, config.local_node, Protocol.TUNNELCFG, f"DELETE {config.path} ({agent})")
        self._request("DELETE", f"http://{agent}{config.path}")
        logger.info(f"Tunnel {config.name} removed from {config.local_node}")


def push_cop_call(endpoint, call, timeout=5.0, emit=None):
    return CopClient(timeout=timeout).push_cop_call(endpoint, call, emit=emit)


def push_tunnel_config(agent, config, timeout=5.0, emit=None):
    return TunnelClient(timeout=timeout).push_tunnel_config(agent, config, emit=emit)


class PlanExecutor:
    """
    Dispatches an action plan to the devices

    Actions go out strictly in plan order; each ack is awaited before the
    next message is sent.
    """

    def __init__(self, ovc_address, agent_addresses, timeout=5.0, session=None):
        self.ovc_address = ovc_address
        self.agent_addresses = dict(agent_addresses)
        session = session or requests.Session()
        self.cop = CopClient(timeout=timeout, session=session)
        self.tunnels = TunnelClient(timeout=timeout, session=session)

    def _agent(self, node_id):
        address = self.agent_addresses.get(node_id)
        if address is None:
            raise AgentUnreachable(f"no agent address configured for {node_id}")
        return address

    def execute(self, plan, emit=None):
        """
        Send every action of a plan

        If an action fails, the actions already acknowledged are undone in
        reverse order before the error is re-raised.

        Returns:
            list: One ack per action, in plan order
        """
        acks = []
        done = []
        for action in plan.actions:
            try:
                acks.append(self._send(action, emit))
            except OrchestratorError as e:
                logger.warning(f"Plan for {plan.intent_id} stopped at {type(action).__name__}: {e.describe()}; rolling back {len(done)} action(s)")
                self._undo_all(reversed(done), emit)
                raise
            done.append(action)
        logger.info(f"Plan for {plan.intent_id} dispatched: {len(acks)} action(s)")
        return acks

    def teardown(self, plan, emit=None):
        """
        Undo a plan in reverse order

        Every action is attempted even if an earlier delete fails; the first
        failure is raised once all of them have been tried.
        """
        errors = self._undo_all(reversed(plan.actions), emit)
        if errors:
            raise errors[0]
        logger.info(f"Plan for {plan.intent_id} torn down")

    def _send(self, action, emit):
        payload = action.payload
        if isinstance(payload, TunnelConfig):
            return self.tunnels.push_tunnel_config(self._agent(payload.local_node), payload, emit=emit)
        if isinstance(payload, CopCall):
            return self.cop.push_cop_call(self.ovc_address, payload, emit=emit)
        raise TypeError(f"unsupported action {action!r}")

    def _undo(self, action, emit):
        payload = action.payload
        if isinstance(payload, TunnelConfig):
            self.tunnels.delete_tunnel_config(self._agent(payload.local_node), payload, emit=emit)
        elif isinstance(payload, CopCall):
            self.cop.delete_cop_call(self.ovc_address, payload.call_id, emit=emit)

    def _undo_all(self, actions, emit):
        errors = []
        for action in actions:
            try:
                self._undo(action, emit)
            except OrchestratorError as e:
                logger.error(f"Could not undo {type(action).__name__}: {e.describe()}")
                errors.append(e)
        return errors
