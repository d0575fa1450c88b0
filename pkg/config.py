"""
Orchestrator Configuration
==========================

One YAML file plus environment overrides.

Keys (camelCase, nested):
    nbi.host, nbi.port                  - NBI listener (default 127.0.0.1:8181)
    ovc.address                         - optical controller host:port (default port 8080)
    agents.defaultPort                  - first switch agent port (default 6640)
    agents.addresses                    - node id -> host:port
    decision.ipBandwidthThresholdBps    - IP tunnel capacity limit (default 1 Gbit/s)
    sim.perHopDelayMs                   - simulated lightpath setup per hop (default 2000)
    sbi.timeoutSeconds                  - ack timeout (default 5)
    intents.idPrefix                    - intent id prefix (default "acino")
    tunnels.keyRef                      - pre-shared key reference for tunnels

Environment:
    PORT / NBI_PORT, OVC_ADDRESS, IP_BANDWIDTH_THRESHOLD_BPS,
    PER_HOP_DELAY_MS, SBI_TIMEOUT_SECONDS
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Mapping

import yaml

from errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_NBI_PORT = 8181
DEFAULT_OVC_PORT = 8080
DEFAULT_AGENT_PORT = 6640


@dataclass(frozen=True)
class OrchestratorConfig:
    nbi_host: str = "127.0.0.1"
    nbi_port: int = DEFAULT_NBI_PORT
    ovc_address: str = f"127.0.0.1:{DEFAULT_OVC_PORT}"
    agent_default_port: int = DEFAULT_AGENT_PORT
    agent_addresses: Mapping[str, str] = field(default_factory=dict)
    ip_bandwidth_threshold_bps: int = 1_000_000_000
    per_hop_delay_ms: int = 2000
    sbi_timeout_s: float = 5.0
    id_prefix: str = "acino"
    tunnel_key_ref: str = "psk-admin"

    @property
    def per_hop_delay_s(self):
        return self.per_hop_delay_ms / 1000.0

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def resolve_agent_addresses(self, switch_ids):
        """
        Give every packet switch an agent address

        Args:
            switch_ids: Packet switch node ids

        Returns:
            dict: node id -> host:port; unconfigured switches get
            defaultPort + i in id order
        """
        host = split_address(self.ovc_address)[0]
        resolved = {}
        for index, node_id in enumerate(sorted(switch_ids)):
            if node_id in self.agent_addresses:
                resolved[node_id] = self.agent_addresses[node_id]
            elif self.agent_default_port == 0:
                resolved[node_id] = f"{host}:0"
            else:
                resolved[node_id] = f"{host}:{self.agent_default_port + index}"
        return resolved


def split_address(address):
    """Split "host:port" into (host, int port)"""
    host, sep, port = str(address).rpartition(":")
    if not sep or not host:
        raise ConfigError(f"address must be host:port, got {address!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"invalid port in address {address!r}") from None


def _section(document, name):
    value = document.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return value


def _as_int(value, key, minimum=0):
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer")
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    if number < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {number}")
    return number


def _as_float(value, key):
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if number <= 0:
        raise ConfigError(f"{key} must be positive")
    return number


def parse_config(document):
    """
    Build a config from an already-parsed YAML mapping

    Args:
        document (dict | None): Parsed configuration

    Returns:
        OrchestratorConfig
    """
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("configuration root must be a mapping")

    defaults = OrchestratorConfig()
    nbi = _section(document, "nbi")
    ovc = _section(document, "ovc")
    agents = _section(document, "agents")
    decision = _section(document, "decision")
    sim = _section(document, "sim")
    sbi = _section(document, "sbi")
    intents = _section(document, "intents")
    tunnels = _section(document, "tunnels")

    addresses = agents.get("addresses") or {}
    if not isinstance(addresses, dict):
        raise ConfigError("agents.addresses must be a mapping")
    for address in addresses.values():
        split_address(address)

    ovc_address = str(ovc.get("address", defaults.ovc_address))
    split_address(ovc_address)

    config = OrchestratorConfig(
        nbi_host=str(nbi.get("host", defaults.nbi_host)),
        nbi_port=_as_int(nbi.get("port", defaults.nbi_port), "nbi.port"),
        ovc_address=ovc_address,
        agent_default_port=_as_int(agents.get("defaultPort", defaults.agent_default_port), "agents.defaultPort"),
        agent_addresses={str(k): str(v) for k, v in addresses.items()},
        ip_bandwidth_threshold_bps=_as_int(
            decision.get("ipBandwidthThresholdBps", defaults.ip_bandwidth_threshold_bps),
            "decision.ipBandwidthThresholdBps",
            minimum=1,
        ),
        per_hop_delay_ms=_as_int(sim.get("perHopDelayMs", defaults.per_hop_delay_ms), "sim.perHopDelayMs"),
        sbi_timeout_s=_as_float(sbi.get("timeoutSeconds", defaults.sbi_timeout_s), "sbi.timeoutSeconds"),
        id_prefix=str(intents.get("idPrefix", defaults.id_prefix)),
        tunnel_key_ref=str(tunnels.get("keyRef", defaults.tunnel_key_ref)),
    )
    if not config.id_prefix:
        raise ConfigError("intents.idPrefix must not be empty")
    return config


def apply_environment(config, environ=None):
    """Apply environment variable overrides on top of a config"""
    environ = os.environ if environ is None else environ
    changes = {}

    port = environ.get("NBI_PORT", environ.get("PORT"))
    if port:
        changes["nbi_port"] = _as_int(port, "NBI_PORT")
    if environ.get("OVC_ADDRESS"):
        split_address(environ["OVC_ADDRESS"])
        changes["ovc_address"] = environ["OVC_ADDRESS"]
    if environ.get("IP_BANDWIDTH_THRESHOLD_BPS"):
        changes["ip_bandwidth_threshold_bps"] = _as_int(
            environ["IP_BANDWIDTH_THRESHOLD_BPS"], "IP_BANDWIDTH_THRESHOLD_BPS", minimum=1
        )
    if environ.get("PER_HOP_DELAY_MS"):
        changes["per_hop_delay_ms"] = _as_int(environ["PER_HOP_DELAY_MS"], "PER_HOP_DELAY_MS")
    if environ.get("SBI_TIMEOUT_SECONDS"):
        changes["sbi_timeout_s"] = _as_float(environ["SBI_TIMEOUT_SECONDS"], "SBI_TIMEOUT_SECONDS")

    if changes:
        logger.info(f"Environment overrides: {sorted(changes)}")
    return replace(config, **changes)


def load_config(path=None, environ=None):
    """
    Load configuration from a YAML file and the environment

    Args:
        path (str | None): Config file; None means defaults only
        environ (Mapping | None): Environment, defaults to os.environ

    Returns:
        OrchestratorConfig
    """
    document = None
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                document = yaml.safe_load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    return apply_environment(parse_config(document), environ)
