"""Synthetic object-centric logs with a known remaining-time structure."""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from .model import Event, EventLog, ObjectInstance

ACTIVITIES = ("Create", "Review", "Approve", "Ship", "Close")


def make_linear_log(
    n_executions: int = 200,
    seed: int = 0,
    min_events: int = 3,
    max_events: int = 8,
    duration_days: float = 10.0,
) -> EventLog:
    """Log whose executions all last exactly ``duration_days``.

    Each execution has one ``case`` object and one or two ``item`` objects
    that share no events with other executions, so connected-component
    extraction recovers the executions. Because every execution has the same
    length, remaining time equals ``duration - elapsed time`` for every
    event: an exact linear function of the elapsed-time feature.
    """
    if min_events < 2 or max_events < min_events:
        raise ValueError("need 2 <= min_events <= max_events")
    rng = np.random.default_rng(seed)
    base = datetime(2024, 1, 1, tzinfo=timezone.utc)
    duration = duration_days * 86400.0
    events: list[Event] = []
    objects: list[ObjectInstance] = []
    for x in range(n_executions):
        start = base + timedelta(seconds=int(rng.integers(0, 365 * 86400)))
        n = int(rng.integers(min_events, max_events + 1))
        inner = np.sort(rng.integers(1, int(duration), size=n - 2))
        offsets = [0, *inner.tolist(), int(duration)]
        case = f"c{x}"
        items = [f"i{x}_{k}" for k in range(int(rng.integers(1, 3)))]
        objects.append(ObjectInstance(case, "case", {"amount": float(np.round(rng.uniform(100, 5000), 2))}))
        for it in items:
            objects.append(ObjectInstance(it, "item", {
                "price": float(np.round(rng.uniform(1, 100), 2)),
                "category": str(rng.choice(["a", "b", "c"])),
            }))
        for k, off in enumerate(offsets):
            touched = tuple(it for it in items if rng.random() < 0.5)
            refs = {"case": (case,)}
            if touched:
                refs["item"] = touched
            events.append(Event(
                f"x{x}e{k}",
                str(rng.choice(ACTIVITIES)),
                start + timedelta(seconds=int(off)),
                {"cost": float(np.round(rng.uniform(0, 10), 3))},
                refs,
            ))
    return EventLog(events, objects, ("case", "item"))
