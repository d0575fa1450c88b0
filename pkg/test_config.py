"""Tests for configuration loading."""

import os

import pytest

from config import OrchestratorConfig, apply_environment, load_config, parse_config, split_address
from errors import ConfigError

HERE = os.path.dirname(os.path.abspath(__file__))


class TestConfig:

    def test_defaults(self):
        config = load_config(None, environ={})
        assert config == OrchestratorConfig()
        assert config.per_hop_delay_s == 2.0

    def test_shipped_file(self):
        config = load_config(os.path.join(HERE, "config.yaml"), environ={})
        assert config.nbi_port == 8181
        assert config.agent_addresses == {"OVS1": "127.0.0.1:6640", "OVS2": "127.0.0.1:6641"}
        assert config.ip_bandwidth_threshold_bps == 1_000_000_000

    def test_environment_wins(self):
        config = apply_environment(OrchestratorConfig(), {"PORT": "9000", "PER_HOP_DELAY_MS": "50"})
        assert config.nbi_port == 9000
        assert config.per_hop_delay_ms == 50

    def test_nbi_port_over_port(self):
        config = apply_environment(OrchestratorConfig(), {"PORT": "9000", "NBI_PORT": "9100"})
        assert config.nbi_port == 9100

    def test_agent_ports_follow_default(self):
        config = parse_config({"ovc": {"address": "10.0.0.5:8080"}, "agents": {"addresses": {"OVS2": "h:1"}}})
        assert config.resolve_agent_addresses(["OVS2", "OVS1"]) == {"OVS1": "10.0.0.5:6640", "OVS2": "h:1"}

    def test_ephemeral_agents(self):
        config = parse_config({"agents": {"defaultPort": 0}})
        assert set(config.resolve_agent_addresses(["OVS1", "OVS2"]).values()) == {"127.0.0.1:0"}

    @pytest.mark.parametrize("document", [
        {"nbi": {"port": "eighty"}},
        {"decision": {"ipBandwidthThresholdBps": 0}},
        {"sim": {"perHopDelayMs": -1}},
        {"sbi": {"timeoutSeconds": 0}},
        {"ovc": {"address": "no-port"}},
        {"agents": {"addresses": ["OVS1"]}},
        {"nbi": "8181"},
        ["not", "a", "mapping"],
    ])
    def test_invalid(self, document):
        with pytest.raises(ConfigError):
            parse_config(document)

    def test_bad_environment(self):
        with pytest.raises(ConfigError):
            apply_environment(OrchestratorConfig(), {"SBI_TIMEOUT_SECONDS": "soon"})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.yaml"), environ={})

    def test_split_address(self):
        assert split_address("127.0.0.1:8080") == ("127.0.0.1", 8080)
