"""
Start Device Plane and Orchestrator
===================================

Starts the simulated optical controller, one switch agent per packet switch
and the orchestrator NBI, each on its own thread, and keeps them running
until interrupted.

Usage:
    python start_all.py [--topology testbed.topo] [--config config.yaml]
"""

import argparse
import sys
import time
import logging

from config import load_config
from errors import OrchestratorError
from netsim import DevicePlane, ServerThread
from service import INTENTS_PATH, Orchestrator, create_app
from topology import load_topology_file

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)


def start_device_plane(topology, config):
    """Run the simulated OVC and switch agents"""
    logger.info(f"Starting device plane (per-hop delay {config.per_hop_delay_ms} ms)...")
    return DevicePlane(
        topology,
        per_hop_delay=config.per_hop_delay_s,
        ovc_address=config.ovc_address,
        agent_addresses=config.resolve_agent_addresses(topology.packet_switches()),
    ).start()


def start_nbi(topology, config):
    """Run the orchestrator NBI"""
    logger.info(f"Starting orchestrator NBI on {config.nbi_host}:{config.nbi_port}...")
    app = create_app(Orchestrator(topology, config))
    return ServerThread("NBI", app, f"{config.nbi_host}:{config.nbi_port}").start()


def main(argv=None):
    """Start all services"""
    parser = argparse.ArgumentParser(description="Start the simulated testbed and the orchestrator")
    parser.add_argument('--topology', default='testbed.topo')
    parser.add_argument('--config', default=None)
    args = parser.parse_args(argv)

    logger.info("=" * 80)
    logger.info("MULTILAYER INTENT ORCHESTRATOR - STARTING ALL SERVICES")
    logger.info("=" * 80)

    try:
        topology = load_topology_file(args.topology)
        config = load_config(args.config)
    except OrchestratorError as e:
        logger.error(f"Startup failed: {e.describe()}")
        return 2

    try:
        plane = start_device_plane(topology, config)
    except (OrchestratorError, OSError) as e:
        logger.error(f"Device plane error: {e}")
        return 2

    config = config.with_overrides(ovc_address=plane.ovc_address, agent_addresses=plane.agent_addresses)
    try:
        nbi = start_nbi(topology, config)
    except OSError as e:
        logger.error(f"NBI error: {e}")
        plane.stop()
        return 2

    logger.info("=" * 80)
    logger.info("ALL SERVICES STARTED")
    logger.info(f"NBI available at: http://{nbi.address}{INTENTS_PATH}")
    logger.info(f"OVC at {plane.ovc_address}")
    for node_id, address in plane.agent_addresses.items():
        logger.info(f"Agent {node_id} at {address}")
    logger.info("=" * 80)

    # Keep main thread alive
    try:
        while True:
            time.sleep(60)
    except KeyboardInterrupt:
        logger.info("\nShutting down...")
    finally:
        nbi.stop()
        plane.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
