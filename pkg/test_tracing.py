"""Tests for message traces and processing metrics."""

import json

import pytest

from errors import UnknownIntent
from sbi import Protocol
from tracing import TraceRecorder, export_trace


class FakeClock:

    def __init__(self, *readings):
        self.readings = list(readings)

    def __call__(self):
        return self.readings.pop(0)


@pytest.fixture
def recorder():
    recorder = TraceRecorder(clock=FakeClock(10.0005, 10.0123, 10.0456))
    recorder.open("acino1", 10.0)
    recorder.record("acino1", "Client", "Controller", Protocol.HTTP, "POST /onos/v1/intents HTTP/1.1", at=10.0)
    recorder.record("acino1", "Controller", "Client", Protocol.HTTP, "HTTP/1.1 201 Created")
    yield recorder


def test_offsets(recorder):
    emit = recorder.emitter("acino1")
    emit("Controller", "OVS1", Protocol.TUNNELCFG, "POST /tunnels/gre-acino1")
    emit("Controller", "OVC", Protocol.COP, "POST /data/calls/call-acino1")
    events = recorder.events("acino1")
    assert [e.t_offset for e in events] == [0.0, 0.0005, 0.0123, 0.0456]
    assert events[0].time_label(True) == "REF"
    assert events[2].time_label(False) == "0.012300"


def test_offsets_never_go_backwards():
    recorder = TraceRecorder(clock=FakeClock(5.2, 5.1))
    recorder.open("x", 5.0)
    recorder.record("x", "a", "b", Protocol.HTTP, "first")
    recorder.record("x", "a", "b", Protocol.HTTP, "second")
    assert [e.t_offset for e in recorder.events("x")] == [0.2, 0.2]


def test_metrics_use_last_sbi_row(recorder):
    emit = recorder.emitter("acino1")
    emit("Controller", "OVC", Protocol.COP, "POST /data/calls/call-acino1")
    metrics = recorder.finalize_metrics("acino1")
    assert metrics.processing_time_ms == 12.3
    assert recorder.metrics("acino1") == metrics


def test_no_metrics_without_southbound(recorder):
    assert recorder.finalize_metrics("acino1") is None
    assert recorder.metrics("acino1") is None


def test_unknown_intent(recorder):
    with pytest.raises(UnknownIntent):
        recorder.record("acino2", "a", "b", Protocol.HTTP, "x")
    with pytest.raises(UnknownIntent):
        export_trace(recorder, "acino2")


def test_exports(recorder):
    table = export_trace(recorder, "acino1", "table")
    assert table.splitlines()[2] == "0.000500\tController\tClient\tHTTP\tHTTP/1.1 201 Created"
    document = json.loads(export_trace(recorder, "acino1", "structured"))
    assert document["intentId"] == "acino1"
    assert document["rows"][0]["Time"] == "REF"
    with pytest.raises(ValueError):
        export_trace(recorder, "acino1", "pcap")
