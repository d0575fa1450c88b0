"""
Encryption Layer Decision
=========================

Maps an intent's constraints to the layer that carries its encryption:

    encrypted?          no  -> Unencrypted
    latency sensitive?  yes -> OpticalLayer
    bandwidth > limit?  yes -> OpticalLayer (line-rate AES cards)
                        no  -> IpLayer (encrypted tunnel between switches)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class EncryptionLayerChoice(Enum):
    UNENCRYPTED = "Unencrypted"
    OPTICAL_LAYER = "OpticalLayer"
    IP_LAYER = "IpLayer"


@dataclass(frozen=True)
class DecisionConfig:
    ip_bandwidth_threshold_bps: int = 1_000_000_000

    def __post_init__(self):
        if self.ip_bandwidth_threshold_bps <= 0:
            raise ValueError("ip_bandwidth_threshold_bps must be positive")


def select_encryption_layer(constraints, config):
    if not constraints.encrypted:
        return EncryptionLayerChoice.UNENCRYPTED
    if constraints.latency_sensitive:
        return EncryptionLayerChoice.OPTICAL_LAYER
    # A demand the tunnel can exactly carry stays on IP.
    if constraints.bandwidth_bps > config.ip_bandwidth_threshold_bps:
        return EncryptionLayerChoice.OPTICAL_LAYER
    return EncryptionLayerChoice.IP_LAYER
