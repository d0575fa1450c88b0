"""
Intent Orchestrator Service
===========================

Flask NBI plus the asynchronous intent pipeline:
submit -> decide encryption layer -> compile -> dispatch southbound.

Endpoints:
    POST   /onos/v1/intents               - Submit an intent (201, pipeline runs in background)
    GET    /onos/v1/intents               - List intents
    GET    /onos/v1/intents/<id>          - Intent state, layer choice and processing time
    DELETE /onos/v1/intents/<id>          - Withdraw an installed intent
    GET    /onos/v1/intents/<id>/trace    - Message trace (format=table|structured)
    GET    /health                        - Health check

Request body:
    {"src": "OVS1", "dst": "OVS2", "encryption": true,
     "latencySensitive": true, "bandwidthBps": 1000000}
    Omitted constraints default to false / false / 0.

Usage:
    python service.py --topology testbed.topo --config config.yaml
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from datetime import datetime

from flask import Flask, Response, jsonify, request
from flask_cors import CORS

from compiler import compile_intent
from config import load_config
from decision import DecisionConfig, select_encryption_layer
from errors import IllegalTransition, IntentError, OrchestratorError, UnknownIntent
from intent import ConstraintSet, IntentState, IntentStore
from sbi import CONTROLLER, PlanExecutor, Protocol
from topology import load_topology_file
from tracing import TraceRecorder, export_trace

logger = logging.getLogger(__name__)

INTENTS_PATH = "/onos/v1/intents"
CLIENT = "Client"
BODY_MEMBERS = {"src", "dst", "encryption", "latencySensitive", "bandwidthBps"}


class BadRequest(IntentError):
    pass


def parse_intent_body(body):
    """
    Parse an NBI intent request

    Args:
        body (bytes): JSON request body

    Returns:
        tuple: (src, dst, ConstraintSet)
    """
    try:
        document = json.loads(body or b"")
    except (ValueError, UnicodeDecodeError):
        raise BadRequest("request body is not valid JSON") from None
    if not isinstance(document, dict):
        raise BadRequest("request body must be a JSON object")
    unknown = set(document) - BODY_MEMBERS
    if unknown:
        raise BadRequest(f"unknown member(s) {sorted(unknown)}")
    for key in ("src", "dst"):
        if not isinstance(document.get(key), str):
            raise BadRequest(f"{key} must be a node id string")

    constraints = ConstraintSet(
        encrypted=document.get("encryption", False),
        latency_sensitive=document.get("latencySensitive", False),
        bandwidth_bps=document.get("bandwidthBps", 0),
    )
    return document["src"], document["dst"], constraints


class Orchestrator:
    """Intent store, trace recorder and pipeline wired to one topology"""

    def __init__(self, topology, config, executor=None):
        """
        Args:
            topology (MultilayerTopology): Shared read-only topology
            config (OrchestratorConfig): Threshold, addresses, key ref
            executor (PlanExecutor | None): Defaults to one built from config
        """
        self.topology = topology
        self.config = config
        self.decision_config = DecisionConfig(config.ip_bandwidth_threshold_bps)
        self.store = IntentStore(topology, id_prefix=config.id_prefix)
        self.recorder = TraceRecorder()
        self.executor = executor or PlanExecutor(
            config.ovc_address,
            config.resolve_agent_addresses(topology.packet_switches()),
            timeout=config.sbi_timeout_s,
        )
        self.choices = {}
        self.plans = {}
        self._pipelines = {}
        self._lock = threading.Lock()
        self._withdraw_lock = threading.Lock()

    def submit(self, body, received_at=None):
        """
        Accept an NBI request and record its trace rows

        The 201 row is recorded before the pipeline starts, so it always
        precedes the intent's southbound messages.

        Returns:
            Intent
        """
        received_at = self.recorder.clock() if received_at is None else received_at
        src, dst, constraints = parse_intent_body(body)
        intent = self.store.submit(src, dst, constraints)
        self.recorder.open(intent.id, received_at)
        self.recorder.record(intent.id, CLIENT, CONTROLLER, Protocol.HTTP, f"POST {INTENTS_PATH} HTTP/1.1", at=received_at)
        self.recorder.record(intent.id, CONTROLLER, CLIENT, Protocol.HTTP, "HTTP/1.1 201 Created")
        return intent

    def start_pipeline(self, intent_id):
        thread = threading.Thread(target=self.run_pipeline, args=(intent_id,), daemon=True, name=f"pipeline-{intent_id}")
        with self._lock:
            self._pipelines[intent_id] = thread
        thread.start()
        return thread

    def wait(self, intent_id, timeout=None):
        with self._lock:
            thread = self._pipelines.get(intent_id)
        if thread is not None:
            thread.join(timeout)
        return self.store.get(intent_id)

    def run_pipeline(self, intent_id):
        """
        Decide, compile and dispatch one intent

        Returns:
            IntentState: Installed, or Failed with the reason recorded on the intent
        """
        try:
            intent = self.store.transition(intent_id, IntentState.COMPILING)
            choice = select_encryption_layer(intent.constraints, self.decision_config)
            self.choices[intent_id] = choice
            logger.info(f"Intent {intent_id}: encryption layer {choice.value}")

            plan = compile_intent(intent, choice, self.topology, key_ref=self.config.tunnel_key_ref)
            self.plans[intent_id] = plan
            self.store.transition(intent_id, IntentState.INSTALLING)

            self.executor.execute(plan, emit=self.recorder.emitter(intent_id))
            metrics = self.recorder.finalize_metrics(intent_id)
            self.store.transition(intent_id, IntentState.INSTALLED)
            if metrics:
                logger.info(f"Intent {intent_id} installed, processing time {metrics.processing_time_ms:.1f} ms")
            return IntentState.INSTALLED
        except OrchestratorError as e:
            self.recorder.finalize_metrics(intent_id)
            logger.error(f"Intent {intent_id} failed: {e.describe()}")
            self.store.transition(intent_id, IntentState.FAILED, reason=e.describe())
            return IntentState.FAILED
        except Exception as e:
            self.recorder.finalize_metrics(intent_id)
            logger.exception(f"Intent {intent_id} crashed in the pipeline")
            self.store.transition(intent_id, IntentState.FAILED, reason=f"{type(e).__name__}: {e}")
            return IntentState.FAILED

    def withdraw(self, intent_id):
        """
        Tear down an installed intent in reverse plan order

        Returns:
            Intent: Withdrawn, or Failed if teardown failed
        """
        with self._withdraw_lock:
            intent = self.store.get(intent_id)
            if intent.state is not IntentState.INSTALLED:
                raise IllegalTransition(f"{intent_id} is {intent.state.value}; only installed intents can be withdrawn")
            plan = self.plans[intent_id]
            try:
                self.executor.teardown(plan, emit=self.recorder.emitter(intent_id))
            except OrchestratorError as e:
                logger.error(f"Withdrawal of {intent_id} failed: {e.describe()}")
                return self.store.transition(intent_id, IntentState.FAILED, reason=e.describe())
            logger.info(f"Intent {intent_id} withdrawn")
            return self.store.transition(intent_id, IntentState.WITHDRAWN)

    def describe(self, intent):
        choice = self.choices.get(intent.id)
        metrics = self.recorder.metrics(intent.id)
        return {
            "id": intent.id,
            "src": intent.src,
            "dst": intent.dst,
            "constraints": {
                "encryption": intent.constraints.encrypted,
                "latencySensitive": intent.constraints.latency_sensitive,
                "bandwidthBps": intent.constraints.bandwidth_bps,
            },
            "state": intent.state.value,
            "failureReason": intent.failure_reason,
            "choice": choice.value if choice else None,
            "processingTimeMs": metrics.processing_time_ms if metrics else None,
        }


def error_response(message, code=404, error_type=None):
    """Create error response"""
    body = {'success': False, 'error': message}
    if error_type:
        body['errorType'] = error_type
    return jsonify(body), code


def create_app(orchestrator):
    """Build the NBI Flask app around an orchestrator"""
    app = Flask(__name__)
    app.config['ORCHESTRATOR'] = orchestrator

    CORS(app,
         origins=["http://localhost:3000", "http://localhost:3001"],
         methods=["GET", "POST", "DELETE", "OPTIONS"],
         allow_headers=["Content-Type"],
         supports_credentials=False)

    @app.route('/')
    def index():
        """API documentation"""
        return jsonify({
            'name': 'Multilayer Secure Intent Orchestrator',
            'version': '1.0',
            'endpoints': {
                f'POST {INTENTS_PATH}': 'Submit an intent',
                f'GET {INTENTS_PATH}': 'List intents',
                f'GET {INTENTS_PATH}/<id>': 'Intent state, layer choice, processing time',
                f'DELETE {INTENTS_PATH}/<id>': 'Withdraw an installed intent',
                f'GET {INTENTS_PATH}/<id>/trace': 'Message trace (format=table|structured)',
                'GET /health': 'Health check',
            },
        })

    @app.route('/health')
    def health():
        """Health check endpoint"""
        intents = orchestrator.store.list()
        return jsonify({
            'status': 'healthy',
            'timestamp': datetime.now().isoformat(),
            'intents': len(intents),
            'installed': sum(1 for i in intents if i.state is IntentState.INSTALLED),
        }), 200

    @app.route(INTENTS_PATH, methods=['POST'])
    def submit_intent():
        """Submit an intent; installation continues after the 201"""
        received_at = orchestrator.recorder.clock()
        try:
            intent = orchestrator.submit(request.get_data(), received_at=received_at)
        except IntentError as e:
            logger.warning(f"Rejected intent request: {e.describe()}")
            return error_response(str(e), 400, e.reason)

        orchestrator.start_pipeline(intent.id)
        location = f"{INTENTS_PATH}/{intent.id}"
        response = jsonify({'success': True, 'id': intent.id, 'path': location, 'state': intent.state.value})
        response.status_code = 201
        response.headers['Location'] = location
        return response

    @app.route(INTENTS_PATH, methods=['GET'])
    def list_intents():
        intents = [orchestrator.describe(i) for i in orchestrator.store.list()]
        return jsonify({'success': True, 'total': len(intents), 'intents': intents})

    @app.route(f'{INTENTS_PATH}/<intent_id>', methods=['GET'])
    def get_intent(intent_id):
        try:
            intent = orchestrator.store.get(intent_id)
        except UnknownIntent as e:
            return error_response(str(e), 404, e.reason)
        return jsonify({'success': True, **orchestrator.describe(intent)})

    @app.route(f'{INTENTS_PATH}/<intent_id>', methods=['DELETE'])
    def delete_intent(intent_id):
        try:
            intent = orchestrator.withdraw(intent_id)
        except UnknownIntent as e:
            return error_response(str(e), 404, e.reason)
        except IllegalTransition as e:
            return error_response(str(e), 409, e.reason)
        return jsonify({'success': True, **orchestrator.describe(intent)})

    @app.route(f'{INTENTS_PATH}/<intent_id>/trace', methods=['GET'])
    def get_trace(intent_id):
        fmt = request.args.get('format', 'table', type=str).lower()
        if fmt not in ('table', 'structured'):
            return error_response(f'Unknown format: {fmt}. Available formats: table, structured', 400)
        try:
            document = export_trace(orchestrator.recorder, intent_id, fmt)
        except UnknownIntent as e:
            return error_response(str(e), 404, e.reason)
        mimetype = 'text/tab-separated-values' if fmt == 'table' else 'application/json'
        return Response(document, mimetype=mimetype)

    @app.errorhandler(404)
    def not_found(error):
        """Handle 404 errors"""
        return error_response('Endpoint not found. Visit / for API documentation.', 404)

    @app.errorhandler(500)
    def internal_error(error):
        """Handle 500 errors"""
        return error_response('Internal server error', 500)

    return app


def main(argv=None):
    parser = argparse.ArgumentParser(description="Multilayer secure intent orchestrator (NBI only)")
    parser.add_argument('--topology', default='testbed.topo')
    parser.add_argument('--config', default=None)
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stdout)]
    )

    config = load_config(args.config)
    topology = load_topology_file(args.topology)
    app = create_app(Orchestrator(topology, config))

    logger.info("=" * 80)
    logger.info("MULTILAYER INTENT ORCHESTRATOR")
    logger.info("=" * 80)
    logger.info(f"NBI on {config.nbi_host}:{config.nbi_port}, OVC at {config.ovc_address}")
    logger.info("Press Ctrl+C to stop")

    app.run(host=config.nbi_host, port=config.nbi_port, debug=False, use_reloader=False, threaded=True)


if __name__ == '__main__':
    main()
