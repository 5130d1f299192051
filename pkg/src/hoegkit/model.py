"""Core types for object-centric event logs.

An :class:`EventLog` holds events that each reference objects of one or more
object types. From the references we derive, per object, the ordered
sequence of events that touch it (``sigma``), and from those sequences the
object-centric directly-follows relation between events.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Union

AttributeValue = Union[float, str, datetime]


@dataclass(frozen=True)
class Event:
    id: str
    activity: str
    timestamp: datetime
    attrs: Mapping[str, AttributeValue] = field(default_factory=dict)
    # object type -> ordered object ids
    refs: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def sort_key(self) -> tuple[datetime, str]:
        return (self.timestamp, self.id)

    def object_ids(self) -> list[str]:
        return [o for ids in self.refs.values() for o in ids]


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    type_name: str
    attrs: Mapping[str, AttributeValue] = field(default_factory=dict)


class EventLog:
    """Immutable object-centric event log.

    Events are kept sorted by ``(timestamp, id)``. Objects may be passed as
    any iterable; if an id occurs twice the first occurrence wins in
    :attr:`objects` and :func:`validate` reports the duplicate.

    Raises ``ValueError`` for duplicate event ids, empty event ids and events
    that reference no object at all.
    """

    def __init__(
        self,
        events: Iterable[Event],
        objects: Iterable[ObjectInstance],
        object_types: Iterable[str] = (),
    ):
        events = sorted(events, key=lambda e: e.sort_key)
        seen: set[str] = set()
        for e in events:
            if not e.id:
                raise ValueError("event with empty id")
            if e.id in seen:
                raise ValueError(f"duplicate event id {e.id!r}")
            seen.add(e.id)
            if not e.object_ids():
                raise ValueError(f"event {e.id!r} references no objects")
        self.events: tuple[Event, ...] = tuple(events)
        self._object_list: tuple[ObjectInstance, ...] = tuple(objects)
        self.objects: dict[str, ObjectInstance] = {}
        for o in self._object_list:
            self.objects.setdefault(o.id, o)
        # declared types may have no instances
        self._types = tuple(dict.fromkeys(
            list(object_types) + [o.type_name for o in self.objects.values()]
        ))

        self._event_by_id = {e.id: e for e in self.events}
        self._position = {e.id: i for i, e in enumerate(self.events)}
        sigma: dict[str, list[str]] = {oid: [] for oid in self.objects}
        obj_of: dict[str, frozenset[str]] = {}
        for e in self.events:
            ids = [o for o in dict.fromkeys(e.object_ids()) if o in self.objects]
            obj_of[e.id] = frozenset(ids)
            for o in ids:
                sigma[o].append(e.id)
        self.sigma: dict[str, tuple[str, ...]] = {o: tuple(s) for o, s in sigma.items()}
        self._obj_of = obj_of
        self._successors: dict[str, frozenset[str]] | None = None

    def __len__(self) -> int:
        return len(self.events)

    def __repr__(self) -> str:
        return f"EventLog(events={len(self.events)}, objects={len(self.objects)})"

    def event(self, event_id: str) -> Event:
        try:
            return self._event_by_id[event_id]
        except KeyError:
            raise KeyError(f"unknown event id {event_id!r}") from None

    def position(self, event_id: str) -> int:
        """Index of the event in the log's total order."""
        return self._position[event_id]

    @property
    def object_types(self) -> tuple[str, ...]:
        """Declared object types followed by any undeclared ones, in first-seen order."""
        return self._types

    def objects_of_type(self, type_name: str) -> list[ObjectInstance]:
        return [o for o in self.objects.values() if o.type_name == type_name]

    def objects_of_event(self, event_id: str) -> frozenset[str]:
        if event_id not in self._obj_of:
            raise KeyError(f"unknown event id {event_id!r}")
        return self._obj_of[event_id]

    def successors(self, event_id: str) -> frozenset[str]:
        """Events that directly follow ``event_id`` for at least one object."""
        if self._successors is None:
            succ: dict[str, set[str]] = defaultdict(set)
            for seq in self.sigma.values():
                for a, b in zip(seq, seq[1:]):
                    succ[a].add(b)
            self._successors = {e: frozenset(s) for e, s in succ.items()}
        return self._successors.get(event_id, frozenset())


def objects_of_event(log: EventLog, event_id: str) -> frozenset[str]:
    return log.objects_of_event(event_id)


def directly_follows(log: EventLog) -> set[tuple[str, str]]:
    """Union over all objects of consecutive event pairs in their sequences."""
    pairs: set[tuple[str, str]] = set()
    for seq in log.sigma.values():
        pairs.update(zip(seq, seq[1:]))
    return pairs


def _attr_kind(value: AttributeValue) -> str:
    if isinstance(value, datetime):
        return "timestamp"
    if isinstance(value, str):
        return "category"
    return "number"


def _check_value(value: AttributeValue) -> str | None:
    if isinstance(value, bool):
        return "boolean attribute values are not supported"
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            return f"non-finite number {value!r}"
        return None
    if isinstance(value, datetime):
        if value.tzinfo is None:
            return "timestamp without timezone"
        if value.microsecond % 1000:
            return "timestamp finer than millisecond precision"
        return None
    if isinstance(value, str):
        return None
    return f"unsupported attribute value type {type(value).__name__}"


def validate(log: EventLog, zero_fill: bool = False) -> list[str]:
    """Check the log's invariants; return one message per violation.

    With ``zero_fill`` a numeric object attribute missing on some objects of
    its type is not reported, since feature encoding fills it with zero.
    """
    violations: list[str] = []

    by_id: dict[str, list[ObjectInstance]] = defaultdict(list)
    for o in log._object_list:
        by_id[o.id].append(o)
    for oid, insts in by_id.items():
        if not oid:
            violations.append("object with empty id")
        types = sorted({o.type_name for o in insts})
        if len(insts) > 1:
            violations.append(f"object {oid}: declared {len(insts)} times (types {', '.join(types)})")

    for e in log.events:
        if e.timestamp.tzinfo is None:
            violations.append(f"event {e.id}: timestamp without timezone")
        for name, value in e.attrs.items():
            problem = _check_value(value)
            if problem:
                violations.append(f"event {e.id}: attribute {name!r}: {problem}")
        for type_name, ids in e.refs.items():
            if len(set(ids)) != len(ids):
                violations.append(f"event {e.id}: duplicate reference under type {type_name!r}")
            for oid in ids:
                obj = log.objects.get(oid)
                if obj is None:
                    violations.append(f"event {e.id}: references unknown object {oid!r}")
                elif obj.type_name != type_name:
                    violations.append(
                        f"event {e.id}: object {oid!r} referenced as {type_name!r} but has type {obj.type_name!r}"
                    )
        if not log.objects_of_event(e.id):
            violations.append(f"event {e.id}: not in the sequence of any object")

    schemas: dict[str, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
    for o in log.objects.values():
        for name, value in o.attrs.items():
            problem = _check_value(value)
            if problem:
                violations.append(f"object {o.id}: attribute {name!r}: {problem}")
            schemas[o.type_name][name].add(_attr_kind(value))
    for type_name, schema in schemas.items():
        for name, kinds in schema.items():
            if len(kinds) > 1:
                violations.append(f"type {type_name}: attribute {name!r} mixes kinds {sorted(kinds)}")
    for o in log.objects.values():
        for name, kinds in schemas[o.type_name].items():
            if name in o.attrs:
                continue
            if zero_fill and kinds == {"number"}:
                continue
            violations.append(f"object {o.id}: missing attribute {name!r} required by type {o.type_name}")
    return violations


def attribute_schema(objects: Iterable[ObjectInstance]) -> dict[str, dict[str, str]]:
    """Map type -> attribute -> kind ("number", "category" or "timestamp")."""
    schema: dict[str, dict[str, str]] = defaultdict(dict)
    for o in objects:
        for name, value in o.attrs.items():
            schema[o.type_name].setdefault(name, _attr_kind(value))
    return dict(schema)


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0, second: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)
