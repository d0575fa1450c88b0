"""
Intent Compiler
===============

Turns an intent and its encryption layer choice into an ordered action plan:

    OpticalLayer  -> [COP call with encryption]
    IpLayer       -> [tunnel on src switch, tunnel on dst switch, COP call]
    Unencrypted   -> [COP call]

The optical path is not part of the COP call; the optical controller computes
it. The compiler still checks that one exists so unroutable intents fail
before anything is sent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

from decision import EncryptionLayerChoice
from errors import AmbiguousAttachment, NoEncryptionCapablePorts, NotAttached, UnattachedEndpoint
from sbi import CopCall, CopEndpoint, TunnelConfig, TunnelMode
from topology import NodeKind, PortRole

logger = logging.getLogger(__name__)

TUNNEL_PREFIX = "gre-"


@dataclass(frozen=True)
class ConfigureTunnel:
    switch: str
    tunnel: TunnelConfig

    @property
    def payload(self):
        return self.tunnel


@dataclass(frozen=True)
class CreateCopCall:
    call: CopCall

    @property
    def payload(self):
        return self.call


Action = Union[ConfigureTunnel, CreateCopCall]


@dataclass(frozen=True)
class ActionPlan:
    intent_id: str
    choice: EncryptionLayerChoice
    actions: tuple

    def shape(self):
        return [type(action).__name__ for action in self.actions]


def tunnel_name(intent_id):
    return f"{TUNNEL_PREFIX}{intent_id}"


def call_id_for_tunnel(name):
    return name[len(TUNNEL_PREFIX):] if name.startswith(TUNNEL_PREFIX) else name


def build_cop_call(topology, intent_id, a_port, z_port, encrypted):
    """
    Build the COP call connecting two ROADM client ports

    Args:
        topology (MultilayerTopology): Resolves router ids
        intent_id (str): Becomes the callId
        a_port (PortId): Client port on the intent's source side
        z_port (PortId): Client port on the intent's destination side
        encrypted (bool): Sets the encryption presence marker

    Returns:
        CopCall
    """
    if a_port == z_port:
        raise ValueError(f"degenerate call: both ends are {a_port}")
    for port_id in (a_port, z_port):
        port = topology.ports.get(port_id)
        if port is None or port.role is not PortRole.CLIENT or topology.node(port_id.node).kind is not NodeKind.ROADM:
            raise ValueError(f"{port_id} is not a ROADM client port")

    return CopCall(
        call_id=intent_id,
        a_end=CopEndpoint.for_port(topology.node(a_port.node).mgmt_address, a_port.name),
        z_end=CopEndpoint.for_port(topology.node(z_port.node).mgmt_address, z_port.name),
        oper_status="UP",
        connections=(),
        encryption=encrypted,
    )


def build_tunnel_config(topology, local, remote, intent_id, key_ref="psk-admin"):
    """Encrypted GRE tunnel from ``local`` toward ``remote``, named after the intent"""
    for node_id in (local, remote):
        node = topology.nodes.get(node_id)
        if node is None or node.kind is not NodeKind.PACKET_SWITCH:
            raise ValueError(f"{node_id} is not a packet switch")
    return TunnelConfig(
        name=tunnel_name(intent_id),
        local_node=local,
        remote_node=remote,
        local_addr=topology.node(local).mgmt_address,
        remote_addr=topology.node(remote).mgmt_address,
        mode=TunnelMode.ENCRYPTED_GRE,
        key_ref=key_ref,
    )


def _client_port(topology, switch):
    try:
        return topology.roadm_client_port_of(switch)
    except (NotAttached, AmbiguousAttachment) as e:
        raise UnattachedEndpoint(str(e)) from e


def compile_intent(intent, choice, topology, key_ref="psk-admin"):
    """
    Compile an intent into an action plan

    Args:
        intent (Intent): Intent to satisfy
        choice (EncryptionLayerChoice): Outcome of the layer decision
        topology (MultilayerTopology): Shared read-only topology
        key_ref (str): Pre-shared key reference for IP tunnels

    Returns:
        ActionPlan
    """
    a_port = _client_port(topology, intent.src)
    z_port = _client_port(topology, intent.dst)

    if choice is EncryptionLayerChoice.OPTICAL_LAYER:
        lacking = [str(p) for p in (a_port, z_port) if not topology.port(p).encryption_capable]
        if lacking:
            raise NoEncryptionCapablePorts(f"no AES-capable client port at {', '.join(lacking)}")

    # NoPath propagates; the path itself is left to the optical controller.
    topology.optical_path(a_port.node, z_port.node)

    call = build_cop_call(
        topology, intent.id, a_port, z_port,
        encrypted=choice is EncryptionLayerChoice.OPTICAL_LAYER,
    )
    actions = []
    if choice is EncryptionLayerChoice.IP_LAYER:
        for local, remote in ((intent.src, intent.dst), (intent.dst, intent.src)):
            tunnel = build_tunnel_config(topology, local, remote, intent.id, key_ref=key_ref)
            actions.append(ConfigureTunnel(switch=local, tunnel=tunnel))
    actions.append(CreateCopCall(call=call))

    plan = ActionPlan(intent_id=intent.id, choice=choice, actions=tuple(actions))
    logger.info(f"Compiled {intent.id} ({choice.value}): {plan.shape()}")
    return plan
