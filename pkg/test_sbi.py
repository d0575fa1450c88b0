"""Tests for the southbound codecs and clients."""

import json

import pytest
from flask import Flask, jsonify
from hypothesis import given, settings, strategies as st

from compiler import build_cop_call, build_tunnel_config
from errors import AgentRejected, ControllerRejected, ControllerUnreachable, MalformedBody
from netsim import ServerThread
from sbi import (
    CopCall,
    CopEndpoint,
    Protocol,
    TransportLayer,
    decode_cop_call,
    decode_tunnel_config,
    encode_cop_call,
    encode_tunnel_config,
    push_cop_call,
    push_tunnel_config,
)
from topology import PortId

A_PORT = PortId("ROADM1", "1-7-C1")
Z_PORT = PortId("ROADM2", "1-7-C1")


class TestCopCodec:

    def test_golden_bytes(self, testbed, golden_cop_call):
        call = build_cop_call(testbed, "acino1", A_PORT, Z_PORT, encrypted=True)
        assert encode_cop_call(call) == golden_cop_call

    def test_decode_golden(self, golden_cop_call):
        call = decode_cop_call(golden_cop_call)
        assert call.call_id == "acino1"
        assert call.encryption is True
        assert call.a_end.router_id == "10.12.105.39"
        assert call.z_end.port_name == "1-7-C1"
        assert call.transport_layer == TransportLayer()

    def test_unencrypted_omits_marker(self, testbed):
        body = encode_cop_call(build_cop_call(testbed, "acino3", A_PORT, Z_PORT, encrypted=False))
        assert b'"encryption"' not in body
        assert decode_cop_call(body).encryption is False

    def test_member_order(self, testbed):
        body = encode_cop_call(build_cop_call(testbed, "acino1", A_PORT, Z_PORT, encrypted=True))
        assert list(json.loads(body)) == [
            "operStatus", "callId", "zEnd", "connections", "aEnd", "encryption", "transportLayer",
        ]

    def test_rejects_explicit_false(self, golden_cop_call):
        body = golden_cop_call.replace(b'"encryption":true', b'"encryption":false')
        with pytest.raises(MalformedBody):
            decode_cop_call(body)

    def test_rejects_unknown_member(self, golden_cop_call):
        document = json.loads(golden_cop_call)
        document["priority"] = 1
        with pytest.raises(MalformedBody, match="priority"):
            decode_cop_call(json.dumps(document))

    def test_rejects_missing_member(self, golden_cop_call):
        document = json.loads(golden_cop_call)
        del document["aEnd"]
        with pytest.raises(MalformedBody, match="aEnd"):
            decode_cop_call(json.dumps(document))

    def test_rejects_bad_endpoint(self, golden_cop_call):
        document = json.loads(golden_cop_call)
        document["zEnd"]["endpointId"] = "10.0.0.1|1-7-C1"
        with pytest.raises(MalformedBody):
            decode_cop_call(json.dumps(document))

    @pytest.mark.parametrize("body", [b"", b"not json", b"[]", b"null"])
    def test_rejects_garbage(self, body):
        with pytest.raises(MalformedBody):
            decode_cop_call(body)


ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-", min_size=1, max_size=12)
addresses = st.builds("{}.{}.{}.{}".format, *[st.integers(0, 255)] * 4)


@st.composite
def cop_calls(draw):
    def endpoint():
        router = draw(addresses)
        return CopEndpoint(router, draw(st.sampled_from(["", "eth0"])), f"{router}|{draw(ids)}")

    return CopCall(
        call_id=draw(ids),
        a_end=endpoint(),
        z_end=endpoint(),
        oper_status=draw(st.sampled_from(["UP", "DOWN"])),
        encryption=draw(st.booleans()),
    )


@settings(max_examples=1000)
@given(cop_calls())
def test_cop_call_survives_the_wire(call):
    body = encode_cop_call(call)
    assert decode_cop_call(body) == call
    assert b'"encryption":false' not in body


class TestTunnelCodec:

    def test_wire_members(self, testbed):
        config = build_tunnel_config(testbed, "OVS1", "OVS2", "acino2")
        assert json.loads(encode_tunnel_config(config)) == {
            "name": "gre-acino2",
            "localAddr": "10.12.104.11",
            "remoteAddr": "10.12.104.12",
            "mode": "EncryptedGre",
            "keyRef": "psk-admin",
        }

    def test_decode_takes_local_node(self, testbed):
        config = build_tunnel_config(testbed, "OVS2", "OVS1", "acino2")
        decoded = decode_tunnel_config(encode_tunnel_config(config), local_node="OVS2")
        assert decoded.local_node == "OVS2"
        assert decoded.remote_node is None
        assert decoded.remote_addr == config.remote_addr

    def test_unsupported_mode(self):
        body = b'{"name":"t","localAddr":"a","remoteAddr":"b","mode":"IpSec","keyRef":"k"}'
        with pytest.raises(MalformedBody, match="IpSec"):
            decode_tunnel_config(body)


class TestClients:

    def test_push_cop_call(self, testbed, plane):
        trace = []
        call = build_cop_call(testbed, "acino1", A_PORT, Z_PORT, encrypted=True)
        ack = push_cop_call(plane.ovc_address, call, emit=lambda *row: trace.append(row))
        assert ack.call_id == "acino1"
        assert ack.oper_status == "UP"
        assert trace == [("Controller", "OVC", Protocol.COP, "POST /data/calls/call-acino1")]

    def test_duplicate_call(self, testbed, plane):
        call = build_cop_call(testbed, "acino1", A_PORT, Z_PORT, encrypted=False)
        push_cop_call(plane.ovc_address, call)
        with pytest.raises(ControllerRejected, match="already exists"):
            push_cop_call(plane.ovc_address, call)

    def test_controller_rejects_non_aes_port(self, testbed, plane):
        call = build_cop_call(testbed, "acino1", A_PORT, PortId("ROADM3", "1-7-C1"), encrypted=True)
        with pytest.raises(ControllerRejected, match="encryption-capable"):
            push_cop_call(plane.ovc_address, call)

    def test_unreachable(self, testbed):
        call = build_cop_call(testbed, "acino1", A_PORT, Z_PORT, encrypted=True)
        with pytest.raises(ControllerUnreachable):
            push_cop_call("127.0.0.1:1", call, timeout=1.0)

    def test_push_tunnel(self, testbed, plane):
        config = build_tunnel_config(testbed, "OVS1", "OVS2", "acino2")
        ack = push_tunnel_config(plane.agent_addresses["OVS1"], config)
        assert ack.name == "gre-acino2"
        assert ack.status == "Pending"
        assert plane.agents["OVS1"].tunnel("gre-acino2") is not None

    def test_duplicate_tunnel(self, testbed, plane):
        config = build_tunnel_config(testbed, "OVS1", "OVS2", "acino2")
        push_tunnel_config(plane.agent_addresses["OVS1"], config)
        with pytest.raises(AgentRejected, match="already exists"):
            push_tunnel_config(plane.agent_addresses["OVS1"], config)

    def test_tunnel_ack_without_status_object(self, testbed):
        app = Flask(__name__)

        @app.route("/tunnels/<name>", methods=["POST"])
        def create_tunnel(name):
            return jsonify(["accepted"]), 201

        server = ServerThread("odd-agent", app, "127.0.0.1:0").start()
        try:
            ack = push_tunnel_config(server.address, build_tunnel_config(testbed, "OVS1", "OVS2", "acino2"))
        finally:
            server.stop()
        assert ack.status == "Pending"
