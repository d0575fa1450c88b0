"""
Intents
=======

Northbound intent model: endpoints, the constraint triple
(encrypted, latency sensitive, bandwidth), the lifecycle state machine and a
thread-safe intent store.

Lifecycle:
    Submitted -> Compiling -> Installing -> Installed -> Withdrawn
    any state -> Failed(reason)
"""

from __future__ import annotations

import itertools
import logging
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from statemachine import State, StateMachine
from statemachine.exceptions import TransitionNotAllowed

from errors import IllegalTransition, InvalidConstraints, UnknownEndpoint, UnknownIntent
from topology import NodeKind

logger = logging.getLogger(__name__)


class IntentState(Enum):
    SUBMITTED = "Submitted"
    COMPILING = "Compiling"
    INSTALLING = "Installing"
    INSTALLED = "Installed"
    FAILED = "Failed"
    WITHDRAWN = "Withdrawn"

    @property
    def terminal(self):
        return self in (IntentState.INSTALLED, IntentState.FAILED, IntentState.WITHDRAWN)


class IntentLifecycle(StateMachine):
    """Legal intent state transitions"""

    submitted = State(initial=True, value=IntentState.SUBMITTED)
    compiling = State(value=IntentState.COMPILING)
    installing = State(value=IntentState.INSTALLING)
    installed = State(value=IntentState.INSTALLED)
    failed = State(value=IntentState.FAILED)
    withdrawn = State(value=IntentState.WITHDRAWN)

    compile = submitted.to(compiling)
    install = compiling.to(installing)
    complete = installing.to(installed)
    withdraw = installed.to(withdrawn)
    fail = (
        submitted.to(failed)
        | compiling.to(failed)
        | installing.to(failed)
        | installed.to(failed)
        | withdrawn.to(failed)
        | failed.to.itself()
    )


_EVENT_FOR_TARGET = {
    IntentState.COMPILING: "compile",
    IntentState.INSTALLING: "install",
    IntentState.INSTALLED: "complete",
    IntentState.WITHDRAWN: "withdraw",
    IntentState.FAILED: "fail",
}


@dataclass(frozen=True)
class ConstraintSet:
    encrypted: bool = False
    latency_sensitive: bool = False
    bandwidth_bps: int = 0

    def __post_init__(self):
        if not isinstance(self.encrypted, bool) or not isinstance(self.latency_sensitive, bool):
            raise InvalidConstraints("encrypted and latency_sensitive must be booleans")
        if isinstance(self.bandwidth_bps, bool) or not isinstance(self.bandwidth_bps, int):
            raise InvalidConstraints("bandwidth_bps must be an integer")
        if self.bandwidth_bps < 0:
            raise InvalidConstraints(f"bandwidth_bps must be >= 0, got {self.bandwidth_bps}")


@dataclass(frozen=True)
class Intent:
    id: str
    src: str
    dst: str
    constraints: ConstraintSet
    state: IntentState
    submitted_at: float
    installed_at: Optional[float] = None
    failure_reason: Optional[str] = None


class _Entry:
    __slots__ = ("intent", "lifecycle", "lock")

    def __init__(self, intent):
        self.intent = intent
        self.lifecycle = IntentLifecycle()
        self.lock = threading.Lock()


class IntentStore:
    """
    In-memory intent store

    Readers get immutable snapshots; writes to one intent are serialized by a
    per-intent lock, so concurrent transitions observe a sequence of legal
    states.
    """

    def __init__(self, topology, id_prefix="acino"):
        self.topology = topology
        self.id_prefix = id_prefix
        self._entries = {}
        self._lock = threading.Lock()
        self._counter = itertools.count(1)

    def _check_endpoint(self, node_id):
        node = self.topology.nodes.get(node_id)
        if node is None:
            raise UnknownEndpoint(f"unknown node {node_id!r}")
        if node.kind is not NodeKind.PACKET_SWITCH:
            raise UnknownEndpoint(f"{node_id} is not a packet switch")

    def submit(self, src, dst, constraints=None):
        """
        Store a new intent in state Submitted

        Args:
            src (str): Source packet switch
            dst (str): Destination packet switch
            constraints (ConstraintSet | None): Defaults to {false, false, 0}

        Returns:
            Intent: Snapshot of the stored intent
        """
        constraints = constraints or ConstraintSet()
        self._check_endpoint(src)
        self._check_endpoint(dst)
        if src == dst:
            raise InvalidConstraints(f"source and destination are both {src}")

        with self._lock:
            intent_id = f"{self.id_prefix}{next(self._counter)}"
            intent = Intent(
                id=intent_id,
                src=src,
                dst=dst,
                constraints=constraints,
                state=IntentState.SUBMITTED,
                submitted_at=time.monotonic(),
            )
            self._entries[intent_id] = _Entry(intent)

        logger.info(f"Intent {intent_id} submitted: {src} -> {dst} {constraints}")
        return intent

    def _entry(self, intent_id):
        with self._lock:
            entry = self._entries.get(intent_id)
        if entry is None:
            raise UnknownIntent(f"unknown intent {intent_id!r}")
        return entry

    def transition(self, intent_id, new_state, reason=None):
        """
        Move an intent to a new state

        Illegal transitions raise IllegalTransition and leave the intent as
        it was.
        """
        entry = self._entry(intent_id)
        with entry.lock:
            current = entry.intent.state
            event = _EVENT_FOR_TARGET.get(new_state)
            if event is None:
                raise IllegalTransition(f"{intent_id}: {current.value} -> {new_state.value}")
            try:
                entry.lifecycle.send(event)
            except TransitionNotAllowed:
                raise IllegalTransition(f"{intent_id}: {current.value} -> {new_state.value}") from None

            changes = {"state": new_state}
            if new_state is IntentState.INSTALLED:
                changes["installed_at"] = max(time.monotonic(), entry.intent.submitted_at)
            if new_state is IntentState.FAILED:
                changes["failure_reason"] = reason or "unspecified"
            entry.intent = replace(entry.intent, **changes)
            updated = entry.intent

        logger.debug(f"Intent {intent_id}: {current.value} -> {new_state.value}")
        return updated

    def get(self, intent_id):
        entry = self._entry(intent_id)
        with entry.lock:
            return entry.intent

    def list(self):
        with self._lock:
            entries = list(self._entries.values())
        snapshot = []
        for entry in entries:
            with entry.lock:
                snapshot.append(entry.intent)
        return snapshot
