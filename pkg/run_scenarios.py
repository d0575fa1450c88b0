"""
Scenario Runner
===============

Boots the simulated device plane and the orchestrator NBI in-process, submits
secure-connectivity scenarios through the NBI, prints each scenario's layer
choice, processing time and message trace, and exits non-zero when an
expectation is not met.

Built-in scenarios (OVS1 -> OVS2, 1 Mbit/s, encrypted):
    optical  - latency sensitive     -> OpticalLayer, processing < 120 ms
    ip       - not latency sensitive -> IpLayer, processing < 200 ms

Usage:
    python run_scenarios.py --scenario builtin:all
    python run_scenarios.py --scenario scenarios.yaml --trace-format structured
    python run_scenarios.py --per-hop-delay-ms 0 --topology testbed.topo --config config.yaml
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import requests
import yaml
from tabulate import tabulate

from config import load_config
from decision import EncryptionLayerChoice
from errors import ConfigError, OrchestratorError
from intent import ConstraintSet, IntentState
from netsim import DevicePlane, ServerThread
from service import INTENTS_PATH, Orchestrator, create_app
from topology import load_topology_file
from tracing import COLUMNS

logger = logging.getLogger(__name__)

POLL_INTERVAL_S = 0.01


@dataclass(frozen=True)
class Expectation:
    choice: Optional[EncryptionLayerChoice] = None
    trace_rows: Optional[int] = None
    max_processing_time_ms: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    src: str
    dst: str
    constraints: ConstraintSet
    expected: Expectation = field(default_factory=Expectation)

    def request_body(self):
        return {
            "src": self.src,
            "dst": self.dst,
            "encryption": self.constraints.encrypted,
            "latencySensitive": self.constraints.latency_sensitive,
            "bandwidthBps": self.constraints.bandwidth_bps,
        }


@dataclass
class ScenarioResult:
    scenario: Scenario
    intent_id: Optional[str] = None
    state: Optional[str] = None
    choice: Optional[str] = None
    failure_reason: Optional[str] = None
    processing_time_ms: Optional[float] = None
    lightpath_setup_ms: Optional[float] = None
    connectivity: Optional[bool] = None
    encrypted_at: Optional[str] = None
    trace: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


BUILTIN_SCENARIOS = {
    "optical": Scenario(
        name="optical",
        src="OVS1",
        dst="OVS2",
        constraints=ConstraintSet(encrypted=True, latency_sensitive=True, bandwidth_bps=1_000_000),
        expected=Expectation(EncryptionLayerChoice.OPTICAL_LAYER, trace_rows=3, max_processing_time_ms=120),
    ),
    "ip": Scenario(
        name="ip",
        src="OVS1",
        dst="OVS2",
        constraints=ConstraintSet(encrypted=True, latency_sensitive=False, bandwidth_bps=1_000_000),
        expected=Expectation(EncryptionLayerChoice.IP_LAYER, trace_rows=5, max_processing_time_ms=200),
    ),
}


def _scenario_from_entry(entry, index):
    where = f"scenarios[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where} must be a mapping")
    try:
        constraints = entry.get("constraints") or {}
        expected = entry.get("expected") or {}
        choice = expected.get("choice")
        return Scenario(
            name=str(entry.get("name", f"scenario-{index + 1}")),
            src=str(entry["src"]),
            dst=str(entry["dst"]),
            constraints=ConstraintSet(
                encrypted=constraints.get("encryption", False),
                latency_sensitive=constraints.get("latencySensitive", False),
                bandwidth_bps=constraints.get("bandwidthBps", 0),
            ),
            expected=Expectation(
                choice=EncryptionLayerChoice(choice) if choice else None,
                trace_rows=expected.get("traceRows"),
                max_processing_time_ms=expected.get("maxProcessingTimeMs"),
            ),
        )
    except KeyError as e:
        raise ConfigError(f"{where}: missing {e.args[0]!r}") from None
    except (ValueError, AttributeError, OrchestratorError) as e:
        raise ConfigError(f"{where}: {e}") from None


def load_scenarios(spec):
    """
    Resolve the --scenario argument

    Args:
        spec (str): builtin:optical, builtin:ip, builtin:all or a YAML file

    Returns:
        list[Scenario]
    """
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name == "all":
            return [BUILTIN_SCENARIOS["optical"], BUILTIN_SCENARIOS["ip"]]
        if name not in BUILTIN_SCENARIOS:
            raise ConfigError(f"unknown built-in scenario {name!r}; available: optical, ip, all")
        return [BUILTIN_SCENARIOS[name]]

    try:
        with open(spec, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"cannot read scenarios {spec}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"scenarios {spec} is not valid YAML: {e}") from e
    entries = document.get("scenarios") if isinstance(document, dict) else None
    if not isinstance(entries, list):
        raise ConfigError(f"{spec} must contain a 'scenarios' list")
    return [_scenario_from_entry(entry, i) for i, entry in enumerate(entries)]


class ScenarioRunner:
    """Drives scenarios through a running NBI"""

    def __init__(self, nbi_address, plane, timeout=10.0):
        self.base_url = f"http://{nbi_address}"
        self.plane = plane
        self.timeout = timeout
        self.session = requests.Session()
        self.session.trust_env = False

    def _wait_terminal(self, intent_id):
        deadline = time.monotonic() + self.timeout
        while True:
            info = self.session.get(f"{self.base_url}{INTENTS_PATH}/{intent_id}", timeout=self.timeout).json()
            if IntentState(info["state"]).terminal or time.monotonic() > deadline:
                return info
            time.sleep(POLL_INTERVAL_S)

    def _wait_connectivity(self, intent_id, budget_s):
        deadline = time.monotonic() + budget_s
        while True:
            check = self.plane.end_to_end_check(intent_id)
            if check["connectivity"] or time.monotonic() > deadline:
                return check
            time.sleep(POLL_INTERVAL_S)

    def run(self, scenario):
        result = ScenarioResult(scenario=scenario)
        logger.info(f"Running scenario {scenario.name}: {scenario.src} -> {scenario.dst} {scenario.constraints}")

        response = self.session.post(f"{self.base_url}{INTENTS_PATH}", json=scenario.request_body(), timeout=self.timeout)
        if response.status_code != 201:
            result.state = "Rejected"
            result.failures.append(f"NBI answered {response.status_code}: {response.json().get('error')}")
            return result
        result.intent_id = response.json()["id"]

        info = self._wait_terminal(result.intent_id)
        result.state = info["state"]
        result.choice = info["choice"]
        result.failure_reason = info["failureReason"]
        result.processing_time_ms = info["processingTimeMs"]

        trace = self.session.get(
            f"{self.base_url}{INTENTS_PATH}/{result.intent_id}/trace",
            params={"format": "structured"},
            timeout=self.timeout,
        ).json()
        result.trace = [[row[c] for c in COLUMNS] for row in trace["rows"]]

        if result.state == IntentState.INSTALLED.value:
            hops = self.plane.ovc.get_call(result.intent_id).hops
            check = self._wait_connectivity(result.intent_id, hops * self.plane.ovc.per_hop_delay + 2.0)
            result.connectivity = check["connectivity"]
            result.encrypted_at = check["encrypted_at"].value
            setup = self.plane.lightpath_setup_time(result.intent_id)
            result.lightpath_setup_ms = round(setup * 1000.0, 3) if setup is not None else None

        self._check(result)
        return result

    def _check(self, result):
        expected = result.scenario.expected
        if expected.choice and result.choice != expected.choice.value:
            result.failures.append(f"choice {result.choice} != expected {expected.choice.value}")
        if expected.trace_rows is not None and len(result.trace) != expected.trace_rows:
            result.failures.append(f"trace has {len(result.trace)} rows, expected {expected.trace_rows}")
        if expected.max_processing_time_ms is not None:
            if result.processing_time_ms is None:
                result.failures.append("no processing time recorded")
            elif result.processing_time_ms >= expected.max_processing_time_ms:
                result.failures.append(
                    f"processing time {result.processing_time_ms:.1f} ms >= {expected.max_processing_time_ms} ms"
                )


def print_report(result, trace_format, out):
    mark = "✅" if result.passed else "❌"
    print("\n" + "=" * 80, file=out)
    print(f"{mark} SCENARIO {result.scenario.name.upper()} ({result.intent_id or 'not submitted'})", file=out)
    print("=" * 80, file=out)

    ratio = None
    if result.processing_time_ms is not None and result.lightpath_setup_ms:
        ratio = f"{100.0 * result.processing_time_ms / result.lightpath_setup_ms:.2f} %"
    rows = [
        ["Choice", result.choice],
        ["State", result.state],
        ["Failure reason", result.failure_reason or ""],
        ["Processing time (ms)", result.processing_time_ms],
        ["Lightpath setup (ms)", result.lightpath_setup_ms],
        ["Processing / lightpath", ratio or ""],
        ["End-to-end connectivity", result.connectivity],
        ["Encrypted at", result.encrypted_at or ""],
    ]
    print(tabulate(rows, tablefmt="simple"), file=out)

    print("\nTrace:", file=out)
    if trace_format == "structured":
        print(json.dumps([dict(zip(COLUMNS, row)) for row in result.trace], indent=2), file=out)
    else:
        print(tabulate(result.trace, headers=COLUMNS, tablefmt="grid"), file=out)

    for failure in result.failures:
        print(f"  ❌ {failure}", file=out)


def compare_builtin_timings(results):
    """Check that IP-layer processing took longer than optical processing"""
    by_name = {r.scenario.name: r for r in results}
    optical, ip = by_name.get("optical"), by_name.get("ip")
    if not optical or not ip or optical.processing_time_ms is None or ip.processing_time_ms is None:
        return None
    if ip.processing_time_ms > optical.processing_time_ms:
        return None
    return f"ip processing {ip.processing_time_ms:.1f} ms is not above optical {optical.processing_time_ms:.1f} ms"


def run(topology_path, config_path, scenario_spec, trace_format="table", per_hop_delay_ms=None, out=None):
    """
    Bring up devices and orchestrator, run scenarios, report

    Returns:
        int: 0 when every expectation held, 1 on a failed expectation,
        2 on a startup failure
    """
    out = out or sys.stdout
    stage = "topology"
    plane = None
    nbi = None
    try:
        topology = load_topology_file(topology_path)
        stage = "config"
        config = load_config(config_path)
        if per_hop_delay_ms is not None:
            config = config.with_overrides(per_hop_delay_ms=per_hop_delay_ms)
        stage = "scenarios"
        scenarios = load_scenarios(scenario_spec)

        stage = "netsim"
        plane = DevicePlane(
            topology,
            per_hop_delay=config.per_hop_delay_s,
            ovc_address=config.ovc_address,
            agent_addresses=config.resolve_agent_addresses(topology.packet_switches()),
        ).start()

        stage = "service"
        config = config.with_overrides(ovc_address=plane.ovc_address, agent_addresses=plane.agent_addresses)
        orchestrator = Orchestrator(topology, config)
        nbi = ServerThread("NBI", create_app(orchestrator), f"{config.nbi_host}:{config.nbi_port}").start()
    except (OrchestratorError, OSError) as e:
        message = e.describe() if isinstance(e, OrchestratorError) else str(e)
        logger.error(f"Startup failed in {stage}: {message}")
        print(f"❌ startup failed [{stage}]: {message}", file=out)
        if plane:
            plane.stop()
        return 2

    logger.info("=" * 80)
    logger.info(f"NBI {nbi.address} | OVC {plane.ovc_address} | agents {plane.agent_addresses}")
    logger.info(f"Per-hop delay {config.per_hop_delay_ms} ms | IP threshold {config.ip_bandwidth_threshold_bps} bit/s")
    logger.info("=" * 80)

    results = []
    try:
        runner = ScenarioRunner(nbi.address, plane, timeout=max(config.sbi_timeout_s * 2, 10.0))
        for scenario in scenarios:
            result = runner.run(scenario)
            print_report(result, trace_format, out)
            results.append(result)
    finally:
        nbi.stop()
        plane.stop()

    exit_code = 0 if all(r.passed for r in results) else 1
    if scenario_spec == "builtin:all":
        timing_failure = compare_builtin_timings(results)
        if timing_failure:
            print(f"\n❌ {timing_failure}", file=out)
            exit_code = 1

    print("\n" + "=" * 80, file=out)
    passed = sum(1 for r in results if r.passed)
    print(f"{'✅' if exit_code == 0 else '❌'} {passed}/{len(results)} scenario(s) passed", file=out)
    print("=" * 80, file=out)
    return exit_code


def build_parser():
    parser = argparse.ArgumentParser(description="Run secure-connectivity scenarios against the simulated testbed")
    parser.add_argument("--topology", default="testbed.topo", help="Topology file (default: testbed.topo)")
    parser.add_argument("--config", default=None, help="Config file (default: built-in defaults)")
    parser.add_argument("--scenario", default="builtin:all",
                        help="Scenario file or builtin:optical | builtin:ip | builtin:all")
    parser.add_argument("--trace-format", choices=["table", "structured"], default="table")
    parser.add_argument("--per-hop-delay-ms", type=int, default=None, help="Override sim.perHopDelayMs")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stdout)]
    )
    logging.getLogger("werkzeug").setLevel(logging.WARNING)

    if args.per_hop_delay_ms is not None and args.per_hop_delay_ms < 0:
        print("❌ --per-hop-delay-ms must be >= 0")
        return 2

    return run(args.topology, args.config, args.scenario, args.trace_format, args.per_hop_delay_ms)


if __name__ == "__main__":
    sys.exit(main())
