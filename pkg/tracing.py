"""
Message Traces
==============

Per-intent record of every NBI and SBI message, laid out like a capture
table (Time, Source, Destination, Protocol, Info). The first row of an
intent is its NBI POST and shows Time = REF; later rows show the offset from
it in seconds with microsecond resolution.

Processing time runs from the NBI request to the emission of the last
southbound setup message.
"""

from __future__ import annotations

import io
import json
import threading
import time
from dataclasses import dataclass
from typing import Optional

import pandas as pd

from errors import UnknownIntent
from sbi import Protocol

COLUMNS = ["Time", "Source", "Destination", "Protocol", "Info"]
SBI_PROTOCOLS = (Protocol.COP, Protocol.TUNNELCFG)


@dataclass(frozen=True)
class TraceEvent:
    t_offset: float
    source: str
    destination: str
    protocol: Protocol
    info: str

    def time_label(self, first):
        return "REF" if first else f"{self.t_offset:.6f}"


@dataclass(frozen=True)
class ProcessingMetrics:
    intent_id: str
    nbi_received_at: float
    last_sbi_emitted_at: float
    processing_time_ms: float


class TraceRecorder:
    """Thread-safe store of per-intent message traces"""

    def __init__(self, clock=time.perf_counter):
        self.clock = clock
        self._lock = threading.Lock()
        self._origins = {}
        self._events = {}
        self._metrics = {}

    def open(self, intent_id, received_at):
        """Start the trace of an intent at the moment its NBI request arrived"""
        with self._lock:
            self._origins[intent_id] = received_at
            self._events[intent_id] = []

    def record(self, intent_id, source, destination, protocol, info, at=None):
        """
        Append a message row

        Args:
            at (float | None): Clock reading of the message; defaults to now

        Returns:
            TraceEvent
        """
        with self._lock:
            if intent_id not in self._events:
                raise UnknownIntent(f"no trace for intent {intent_id!r}")
            now = self.clock() if at is None else at
            origin = self._origins[intent_id]
            events = self._events[intent_id]
            offset = round(max(now - origin, 0.0), 6)
            if events:
                offset = max(offset, events[-1].t_offset)
            event = TraceEvent(offset, source, destination, protocol, info)
            events.append(event)
            return event

    def emitter(self, intent_id):
        """Trace hook for the southbound clients"""
        def emit(source, destination, protocol, info):
            self.record(intent_id, source, destination, protocol, info)
        return emit

    def events(self, intent_id):
        with self._lock:
            if intent_id not in self._events:
                raise UnknownIntent(f"no trace for intent {intent_id!r}")
            return list(self._events[intent_id])

    def finalize_metrics(self, intent_id):
        """
        Freeze processing metrics at the last southbound message recorded so far

        Returns:
            ProcessingMetrics | None: None when nothing was sent south
        """
        with self._lock:
            origin = self._origins[intent_id]
            sbi = [e for e in self._events[intent_id] if e.protocol in SBI_PROTOCOLS]
            if not sbi:
                return None
            last = sbi[-1].t_offset
            metrics = ProcessingMetrics(intent_id, origin, origin + last, round(last * 1000.0, 3))
            self._metrics[intent_id] = metrics
            return metrics

    def metrics(self, intent_id) -> Optional[ProcessingMetrics]:
        with self._lock:
            return self._metrics.get(intent_id)


def trace_rows(events):
    return [
        [e.time_label(i == 0), e.source, e.destination, e.protocol.value, e.info]
        for i, e in enumerate(events)
    ]


def export_trace(recorder, intent_id, fmt="table"):
    """
    Export an intent trace

    Args:
        recorder (TraceRecorder): Trace source
        intent_id (str): Intent to export
        fmt (str): "table" for tab-separated text, "structured" for JSON

    Returns:
        str
    """
    events = recorder.events(intent_id)
    frame = pd.DataFrame(trace_rows(events), columns=COLUMNS)
    if fmt == "table":
        buffer = io.StringIO()
        frame.to_csv(buffer, sep="\t", index=False, lineterminator="\n")
        return buffer.getvalue()
    if fmt == "structured":
        return json.dumps({"intentId": intent_id, "columns": COLUMNS, "rows": frame.to_dict(orient="records")})
    raise ValueError(f"unknown trace format {fmt!r}")
