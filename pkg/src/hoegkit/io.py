"""JSON-OCEL reading and writing, the order-to-cash example log, log
statistics, and JSON documents for encoded graphs.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .encoders import Efg, Hoeg
from .extraction import count_cases
from .model import AttributeValue, Event, EventLog, ObjectInstance

SCHEMA_VERSION = 1

EVENTS = "ocel:events"
OBJECTS = "ocel:objects"
GLOBAL_LOG = "ocel:global-log"
_KNOWN_TOP = {EVENTS, OBJECTS, GLOBAL_LOG, "ocel:global-event", "ocel:global-object"}
_EVENT_KEYS = {"ocel:activity", "ocel:timestamp", "ocel:omap", "ocel:vmap"}
_OBJECT_KEYS = {"ocel:type", "ocel:ovmap"}

# Only full date-times are read as timestamps; plain dates stay categories.
_DATETIME_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2}(\.\d{1,6})?)?(Z|[+-]\d{2}:?\d{2})?$"
)

METRIC_COLUMNS = ["dataset", "model", "split", "mae", "mse", "fit_seconds", "predict_seconds"]


class OcelParseError(ValueError):
    pass


@dataclass
class ParseReport:
    warnings: list[str] = field(default_factory=list)
    events: int = 0
    objects: int = 0
    types: int = 0


@dataclass
class LogStats:
    events: int
    event_attrs: int
    objects: int
    object_types: int
    object_attrs: int
    cases: int
    mean_object_interactions_per_event: float

    def row(self) -> str:
        return (
            f"events={self.events} objects={self.objects} types={self.object_types} "
            f"cases={self.cases} mean_interactions={self.mean_object_interactions_per_event:.2f}"
        )


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 to an aware UTC datetime truncated to milliseconds.

    Naive values are taken as UTC.
    """
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {text!r}")
    s = text.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond - ts.microsecond % 1000)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}+00:00"


def _decode_value(raw, where: str) -> AttributeValue:
    if isinstance(raw, bool):
        return float(raw)
    if isinstance(raw, (int, float)):
        value = float(raw)
        if not math.isfinite(value):
            raise OcelParseError(f"{where}: non-finite number")
        return value
    if isinstance(raw, str):
        if _DATETIME_RE.match(raw.strip()):
            try:
                return parse_timestamp(raw)
            except ValueError:
                pass
        return raw
    raise OcelParseError(f"{where}: unsupported attribute value {raw!r}")


def _encode_value(value: AttributeValue):
    if isinstance(value, datetime):
        return format_timestamp(value)
    return value


UNDECLARED = "<undeclared>"


def parse_ocel(data: bytes | str, strict: bool = True) -> tuple[EventLog, ParseReport]:
    """Read a JSON-OCEL 1.0 document.

    Unknown keys are reported as warnings. Raises :class:`OcelParseError`
    for malformed JSON, missing mandatory keys, bad timestamps and, when
    ``strict``, references to undeclared objects. Non-strict parsing keeps
    such references under the ``"<undeclared>"`` type so that
    :func:`hoegkit.model.validate` can report them.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise OcelParseError(f"input is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise OcelParseError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise OcelParseError("top level must be a JSON object")
    for key in (EVENTS, OBJECTS, GLOBAL_LOG):
        if key not in doc:
            raise OcelParseError(f"missing mandatory key {key!r}")
    report = ParseReport()
    for key in doc:
        if key not in _KNOWN_TOP:
            report.warnings.append(f"unknown top-level key {key!r}")

    glog = doc[GLOBAL_LOG] or {}
    declared_types = list(glog.get("ocel:object-types", []))

    objects = []
    for oid, entry in doc[OBJECTS].items():
        if not isinstance(entry, dict) or "ocel:type" not in entry:
            raise OcelParseError(f"object {oid}: missing 'ocel:type'")
        for key in entry:
            if key not in _OBJECT_KEYS:
                report.warnings.append(f"object {oid}: unknown key {key!r}")
        attrs = {}
        for name, raw in (entry.get("ocel:ovmap") or {}).items():
            if raw is None:
                report.warnings.append(f"object {oid}: null attribute {name!r} skipped")
                continue
            attrs[name] = _decode_value(raw, f"object {oid} attribute {name!r}")
        objects.append(ObjectInstance(str(oid), str(entry["ocel:type"]), attrs))
    type_of = {o.id: o.type_name for o in objects}

    events = []
    for eid, entry in doc[EVENTS].items():
        if not isinstance(entry, dict):
            raise OcelParseError(f"event {eid}: entry must be an object")
        for key in ("ocel:activity", "ocel:timestamp", "ocel:omap"):
            if key not in entry:
                raise OcelParseError(f"event {eid}: missing {key!r}")
        for key in entry:
            if key not in _EVENT_KEYS:
                report.warnings.append(f"event {eid}: unknown key {key!r}")
        try:
            ts = parse_timestamp(entry["ocel:timestamp"])
        except ValueError:
            raise OcelParseError(f"event {eid}: unparseable timestamp {entry['ocel:timestamp']!r}") from None
        refs: dict[str, list[str]] = {}
        for oid in entry["ocel:omap"]:
            oid = str(oid)
            if oid not in type_of and strict:
                raise OcelParseError(f"event {eid}: references undeclared object {oid!r}")
            ids = refs.setdefault(type_of.get(oid, UNDECLARED), [])
            if oid not in ids:
                ids.append(oid)
        attrs = {}
        for name, raw in (entry.get("ocel:vmap") or {}).items():
            if raw is None:
                report.warnings.append(f"event {eid}: null attribute {name!r} skipped")
                continue
            attrs[name] = _decode_value(raw, f"event {eid} attribute {name!r}")
        events.append(Event(str(eid), str(entry["ocel:activity"]), ts, attrs,
                            {t: tuple(ids) for t, ids in refs.items()}))

    if not events:
        report.warnings.append("empty log")
    try:
        log = EventLog(events, objects, declared_types)
    except ValueError as exc:
        raise OcelParseError(str(exc)) from None
    report.events = len(log.events)
    report.objects = len(log.objects)
    report.types = len(log.object_types)
    return log, report


def serialize_ocel(log: EventLog) -> bytes:
    """Canonical JSON-OCEL 1.0 bytes; equal logs give identical output."""
    attr_names = sorted({a for e in log.events for a in e.attrs} | {a for o in log.objects.values() for a in o.attrs})
    doc = {
        GLOBAL_LOG: {
            "ocel:version": "1.0",
            "ocel:ordering": "timestamp",
            "ocel:attribute-names": attr_names,
            "ocel:object-types": list(log.object_types),
        },
        "ocel:global-event": {"ocel:activity": "__INVALID__"},
        "ocel:global-object": {"ocel:type": "__INVALID__"},
        EVENTS: {
            e.id: {
                "ocel:activity": e.activity,
                "ocel:timestamp": format_timestamp(e.timestamp),
                "ocel:omap": e.object_ids(),
                "ocel:vmap": {k: _encode_value(e.attrs[k]) for k in sorted(e.attrs)},
            }
            for e in log.events
        },
        OBJECTS: {
            o.id: {"ocel:type": o.type_name, "ocel:ovmap": {k: _encode_value(o.attrs[k]) for k in sorted(o.attrs)}}
            for o in log.objects.values()
        },
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def read_ocel(path, strict: bool = True) -> tuple[EventLog, ParseReport]:
    return parse_ocel(Path(path).read_bytes(), strict)


def write_ocel(log: EventLog, path) -> None:
    Path(path).write_bytes(serialize_ocel(log))


_OTC_EVENTS = [
    # id, activity, day offset from 2023-01-30, resource, order, item, package, delivery
    ("e1", "Place order", 0, "CloudServiceA", ["o1"], ["i1", "i2"], [], []),
    ("e2", "Pay order", 0, "CloudServiceA", ["o1"], [], [], []),
    ("e3", "Place order", 0, "CloudServiceB", ["o2"], ["i3"], [], []),
    ("e4", "Pay order", 0, "CloudServiceB", ["o2"], [], [], []),
    ("e5", "Pick item", 1, "WarehouseTeamX", ["o1"], ["i1"], [], []),
    ("e6", "Pick item", 1, "WarehouseTeamX", ["o2"], ["i3"], [], []),
    ("e7", "Pack item", 1, "WarehouseTeamX", ["o1"], ["i1"], ["p1"], []),
    ("e8", "Pack item", 1, "WarehouseTeamX", ["o2"], ["i3"], ["p2"], []),
    ("e9", "Ship package", 2, "WarehouseTeamY", ["o1", "o2"], ["i1", "i3"], ["p1", "p2"], ["d1"]),
    ("e10", "Confirm delivery", 3, "PostalServiceP", ["o1", "o2"], ["i1", "i3"], ["p1", "p2"], ["d1"]),
]

_OTC_OBJECTS = [
    ("o1", "order", {"Urgency": 1.0}),
    ("o2", "order", {"Urgency": 3.0}),
    ("i1", "item", {"Discount": 33.0}),
    ("i2", "item", {"Discount": 0.0}),
    ("i3", "item", {"Discount": 25.0}),
    ("p1", "package", {"Weight": 3.5, "Size": "medium"}),
    ("p2", "package", {"Weight": 3.0, "Size": "medium"}),
    ("d1", "delivery", {"Route length": "short", "No. stops": 5.0}),
]


def build_otc_fixture() -> EventLog:
    """The ten-event order-to-cash example log.

    The source table gives dates only; every event is placed at 12:00 UTC
    on its date, and same-date events are ordered by id.
    """
    base = datetime(2023, 1, 30, 12, tzinfo=timezone.utc)
    types = ("order", "item", "package", "delivery")
    events = []
    for eid, activity, day, resource, *refs in _OTC_EVENTS:
        events.append(Event(
            eid,
            activity,
            base + timedelta(days=day),
            {"Resource": resource},
            {t: tuple(ids) for t, ids in zip(types, refs) if ids},
        ))
    objects = [ObjectInstance(oid, t, dict(attrs)) for oid, t, attrs in _OTC_OBJECTS]
    return EventLog(events, objects, types)


def log_stats(log: EventLog, strategy: str | None = "cc") -> LogStats:
    """Summary counts; ``cases`` is 0 when no strategy is given."""
    n = len(log.events)
    interactions = sum(len(log.objects_of_event(e.id)) for e in log.events)
    return LogStats(
        events=n,
        event_attrs=len({a for e in log.events for a in e.attrs}),
        objects=len(log.objects),
        object_types=len(log.object_types),
        object_attrs=len({(o.type_name, a) for o in log.objects.values() for a in o.attrs}),
        cases=count_cases(log, strategy) if strategy and n else 0,
        mean_object_interactions_per_event=interactions / n if n else 0.0,
    )


# encoded graphs


def _matrix_doc(m: np.ndarray) -> dict:
    return {"shape": list(m.shape), "data": [float(x) if m.dtype.kind == "f" else int(x) for x in m.ravel()]}


def _matrix_from_doc(d: dict, dtype=float) -> np.ndarray:
    return np.array(d["data"], dtype=dtype).reshape(d["shape"])


def _et_key(et) -> str:
    return "|".join(et)


def graph_to_dict(g: Hoeg | Efg) -> dict:
    if isinstance(g, Hoeg):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "hoeg",
            "execution_id": g.execution_id,
            "node_types": list(g.node_types),
            "edge_types": [list(et) for et in g.edge_types],
            "features": {t: _matrix_doc(g.features[t]) for t in g.node_types},
            "adjacency": {_et_key(et): _matrix_doc(g.adjacency[et]) for et in g.edge_types},
            "edge_features": {_et_key(et): _matrix_doc(m) for et, m in g.edge_features.items()},
            "node_index": {t: sorted(ix, key=ix.get) for t, ix in g.node_index.items()},
            "targets": [float(x) for x in g.targets],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "efg",
        "execution_id": g.execution_id,
        "features": _matrix_doc(g.features),
        "adjacency": _matrix_doc(g.adjacency),
        "node_index": g.event_ids(),
        "targets": [float(x) for x in g.targets],
    }


def graph_from_dict(d: dict) -> Hoeg | Efg:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
    targets = np.array(d["targets"], dtype=float)
    if d["kind"] == "efg":
        return Efg(
            _matrix_from_doc(d["features"]),
            _matrix_from_doc(d["adjacency"], np.int64),
            targets,
            {e: i for i, e in enumerate(d["node_index"])},
            d.get("execution_id", ""),
        )
    if d["kind"] != "hoeg":
        raise ValueError(f"unknown graph kind {d['kind']!r}")
    edge_types = tuple(tuple(et) for et in d["edge_types"])
    by_key = {_et_key(et): et for et in edge_types}
    return Hoeg(
        tuple(d["node_types"]),
        edge_types,
        {t: _matrix_from_doc(m) for t, m in d["features"].items()},
        {by_key[k]: _matrix_from_doc(m, np.int64) for k, m in d["adjacency"].items()},
        {t: {x: i for i, x in enumerate(ids)} for t, ids in d["node_index"].items()},
        targets,
        {by_key[k]: _matrix_from_doc(m) for k, m in d.get("edge_features", {}).items()},
        d.get("execution_id", ""),
    )


def serialize_hoeg(h: Hoeg | Efg) -> bytes:
    return json.dumps(graph_to_dict(h), indent=1).encode("utf-8")


def parse_hoeg(data: bytes | str) -> Hoeg | Efg:
    return graph_from_dict(json.loads(data))


def graphs_equal(a: Hoeg | Efg, b: Hoeg | Efg) -> bool:
    """Structural equality: same types, index maps, and exactly equal arrays."""
    if type(a) is not type(b) or a.execution_id != b.execution_id:
        return False
    if not np.array_equal(a.targets, b.targets):
        return False
    if isinstance(a, Efg):
        return (
            a.node_index == b.node_index
            and a.features.shape == b.features.shape
            and np.array_equal(a.features, b.features)
            and a.adjacency.shape == b.adjacency.shape
            and np.array_equal(a.adjacency, b.adjacency)
        )
    if a.node_types != b.node_types or a.edge_types != b.edge_types or a.node_index != b.node_index:
        return False
    for t in a.node_types:
        if a.features[t].shape != b.features[t].shape or not np.array_equal(a.features[t], b.features[t]):
            return False
    for et in a.edge_types:
        if a.adjacency[et].shape != b.adjacency[et].shape or not np.array_equal(a.adjacency[et], b.adjacency[et]):
            return False
    if set(a.edge_features) != set(b.edge_features):
        return False
    return all(np.array_equal(a.edge_features[k], b.edge_features[k]) for k in a.edge_features)


def write_metrics_csv(path, rows: list[dict], columns: list[str] = METRIC_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="raise")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
