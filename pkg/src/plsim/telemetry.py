"""Line-delimited JSON telemetry: canonical encoding, decoding and ground-station aggregation.

Each event is one JSON object per line with sorted keys::

    {"kind":"PhaseChange","payload":{"phase_from":"Idle","phase_to":"Deploying"},"seq":1,"t_s":0.0}

A stream opens with a ``Header`` event carrying ``schema_version``. Payload
values are scalars (null, bool, int, float, str) or flat maps of scalars.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import EncodingError, ParseError, StreamIntegrityError
from .report import CHECKED_FIELDS, MissionReport, result_from_payload

SCHEMA_VERSION = 1


class EventKind(str, enum.Enum):
    HEADER = "Header"
    PHASE_CHANGE = "PhaseChange"
    SENSOR_READING = "SensorReading"
    ACTUATOR_COMMAND = "ActuatorCommand"
    ASSAY_RESULT = "AssayResultEvent"
    FAULT = "FaultEvent"
    REPORT = "ReportEvent"


@dataclass
class TelemetryEvent:
    t_s: float
    kind: EventKind
    payload: dict = field(default_factory=dict)
    seq: int = 0


_SCALARS = (str, int, float, bool, type(None))


def _check_scalar(key, value):
    if not isinstance(value, _SCALARS):
        raise EncodingError(f"payload key {key!r}: {type(value).__name__} is not encodable")
    if isinstance(value, float) and not math.isfinite(value):
        raise EncodingError(f"payload key {key!r}: non-finite number {value}")


def encode_event(e: TelemetryEvent) -> str:
    if not isinstance(e.kind, EventKind):
        raise EncodingError(f"unknown event kind {e.kind!r}")
    if not isinstance(e.seq, int) or isinstance(e.seq, bool):
        raise EncodingError("seq must be an integer")
    _check_scalar("t_s", e.t_s)
    if not isinstance(e.payload, dict):
        raise EncodingError("payload must be a map")
    for key, value in e.payload.items():
        if not isinstance(key, str):
            raise EncodingError(f"payload key {key!r} is not a string")
        if isinstance(value, dict):
            for sub_key, sub_value in value.items():
                if not isinstance(sub_key, str):
                    raise EncodingError(f"payload key {key}.{sub_key!r} is not a string")
                _check_scalar(f"{key}.{sub_key}", sub_value)
        else:
            _check_scalar(key, value)
    obj = {"t_s": e.t_s, "kind": e.kind.value, "payload": e.payload, "seq": e.seq}
    # float repr is already shortest round-trip
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def decode_event(line: str, line_number: int | None = None) -> TelemetryEvent:
    text = line.rstrip("\n")
    if not text.strip():
        raise ParseError("empty line", line_number)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line_number) from None
    if not isinstance(obj, dict) or set(obj) != {"t_s", "kind", "payload", "seq"}:
        raise ParseError("expected an object with keys kind, payload, seq, t_s", line_number)
    try:
        kind = EventKind(obj["kind"])
    except ValueError:
        raise ParseError(f"unknown event kind {obj['kind']!r}", line_number) from None
    seq, t_s, payload = obj["seq"], obj["t_s"], obj["payload"]
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise ParseError("seq must be an integer", line_number)
    if not isinstance(t_s, (int, float)) or isinstance(t_s, bool):
        raise ParseError("t_s must be a number", line_number)
    if not isinstance(payload, dict):
        raise ParseError("payload must be an object", line_number)
    return TelemetryEvent(t_s=t_s, kind=kind, payload=payload, seq=seq)


def write_stream(events: Iterable[TelemetryEvent], fh) -> None:
    for e in events:
        fh.write(encode_event(e))


def read_stream(fh) -> Iterator[TelemetryEvent]:
    for number, line in enumerate(fh, start=1):
        yield decode_event(line, number)


class Recorder:
    """Stamps events with a monotone sequence number as the mission emits them."""

    def __init__(self):
        self.events: list[TelemetryEvent] = []

    def emit(self, t_s: float, kind: EventKind, payload: dict) -> TelemetryEvent:
        e = TelemetryEvent(t_s=t_s, kind=kind, payload=payload, seq=len(self.events))
        self.events.append(e)
        return e


def _finish_segment(segment: MissionReport, embedded: dict | None, index: int) -> None:
    if embedded is None:
        return
    for name in CHECKED_FIELDS:
        got = getattr(segment, name)
        if embedded.get(name) != got:
            segment.integrity_mismatches.append(
                f"segment {index}: {name} embedded={embedded.get(name)} recomputed={got}")
    if embedded.get("end_phase") != segment.end_phase:
        segment.integrity_mismatches.append(
            f"segment {index}: end_phase embedded={embedded.get('end_phase')} "
            f"recomputed={segment.end_phase}")


def aggregate_report(events: Iterable[TelemetryEvent]) -> MissionReport:
    """Rebuild the mission report from a stream and cross-check embedded reports.

    Each ``Header`` starts a new segment (one mission); a ``ReportEvent`` is
    compared with the counts recomputed for its own segment.
    """
    total = MissionReport()
    segment = MissionReport()
    embedded = None
    last_seq = None
    last_t = None
    index = 0
    for e in events:
        if last_seq is not None and e.seq <= last_seq:
            raise StreamIntegrityError(f"seq {e.seq} follows {last_seq}")
        if last_t is not None and e.t_s < last_t and e.kind is not EventKind.HEADER:
            raise StreamIntegrityError(f"time goes backwards at seq {e.seq}")
        last_seq, last_t = e.seq, e.t_s
        if e.kind is EventKind.HEADER:
            if index or segment.per_site_results or embedded is not None:
                _finish_segment(segment, embedded, index)
                total = total + segment
            segment, embedded = MissionReport(), None
            index += 1
            continue
        segment.total_sim_time_s = e.t_s
        if e.kind is EventKind.ASSAY_RESULT:
            segment.add_result(result_from_payload(e.payload))
        elif e.kind is EventKind.PHASE_CHANGE:
            segment.end_phase = e.payload.get("phase_to")
            if segment.end_phase == "Fault":
                segment.fault_reason = e.payload.get("reason")
        elif e.kind is EventKind.REPORT:
            embedded = e.payload
            for name in ("chamber_reuse_count", "insufficient_count", "excavated_g",
                         "delivered_g", "residual_g", "lost_g"):
                setattr(segment, name, e.payload.get(name, 0))
    _finish_segment(segment, embedded, index)
    return total + segment
