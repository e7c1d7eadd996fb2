"""Calendar/event feature encoding into the D1-D4 design matrices.

Blocks:
    A: month and day-of-week one-hots with the first category dropped
       (January / Monday encode as all-zero), 11 + 6 = 17 columns.
    B: the seven special-day flags, 7 columns.
    C: per event-hosting station, three 96-slot count vectors for the
       start, end and period facets of that day's events.
    D: block C broken out per event category.

Widths: D1 = 17, D2 = 24, D3 = 24 + 96*3*E, D4 = D3 + 96*3*E*K for E
event-hosting stations and K categories.

Slot conventions: slots are half-open quarter-hours [t, t+15min); the
slot of a timestamp is floor(minutes-since-midnight / 15).  The period
facet covers every slot overlapped by [start, end) clipped to the day,
so a slot-boundary end closes the preceding slot; the end facet marks
the last slot of the period on the day containing it.  Events with no
recorded end get a default period duration and no end mark.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import B_FLAGS, N_SLOTS, CalendarDay, DateRange, NetworkManifest

FEATURE_SETS = ("D1", "D2", "D3", "D4")
_BLOCKS = {"D1": "A", "D2": "AB", "D3": "ABC", "D4": "ABCD"}

MONTH_LABELS = ("feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec")
DOW_LABELS = ("tue", "wed", "thu", "fri", "sat", "sun")
FACETS = ("start", "end", "period")

WIDTH_A = len(MONTH_LABELS) + len(DOW_LABELS)
WIDTH_B = len(B_FLAGS)

DEFAULT_EVENT_DURATION = dt.timedelta(minutes=120)

_SLOT = dt.timedelta(minutes=15)
_MICRO = dt.timedelta(microseconds=1)


def feature_set_blocks(set_id):
    try:
        return _BLOCKS[set_id]
    except KeyError:
        raise ValueError(f"unknown feature set: {set_id!r}") from None


def block_widths(manifest):
    e = len(manifest.event_stations)
    k = len(manifest.categories)
    return {
        "A": WIDTH_A,
        "B": WIDTH_B,
        "C": N_SLOTS * 3 * e,
        "D": N_SLOTS * 3 * e * k,
    }


def matrix_width(set_id, manifest):
    widths = block_widths(manifest)
    return sum(widths[b] for b in feature_set_blocks(set_id))


def slot_of(moment):
    """Quarter-hour slot index of a datetime or time (slot 0 = 00:00-00:15)."""
    return (moment.hour * 60 + moment.minute) // 15


def effective_end(event, default_duration=DEFAULT_EVENT_DURATION):
    """Recorded end, or start + default duration when the end is unknown."""
    return event.end if event.end is not None else event.start + default_duration


def event_dates(event, default_duration=DEFAULT_EVENT_DURATION):
    """Dates whose slots are touched by the half-open interval [start, end)."""
    last = effective_end(event, default_duration) - _MICRO
    n = (last.date() - event.start.date()).days
    return [event.start.date() + dt.timedelta(days=i) for i in range(n + 1)]


def event_slots_on(event, date, default_duration=DEFAULT_EVENT_DURATION):
    """Period slot indices the event overlaps on `date` (possibly empty)."""
    day_start = dt.datetime.combine(date, dt.time.min)
    day_end = day_start + dt.timedelta(days=1)
    lo = max(event.start, day_start)
    hi = min(effective_end(event, default_duration), day_end)
    if hi <= lo:
        return range(0)
    first = slot_of(lo)
    last = slot_of(hi - _MICRO)
    return range(first, last + 1)


def encode_block_a(date):
    """Month and day-of-week one-hots with January/Monday dropped."""
    vec = np.zeros(WIDTH_A)
    if date.month > 1:
        vec[date.month - 2] = 1.0
    dow = date.weekday()
    if dow > 0:
        vec[len(MONTH_LABELS) + dow - 1] = 1.0
    return vec


def encode_block_b(day: CalendarDay):
    return day.flag_vector()


def _facet_marks(event, date, default_duration):
    """(start_slot | None, end_slot | None, period_slots) for one event on one day."""
    start_slot = slot_of(event.start) if event.start.date() == date else None
    end_slot = None
    if event.end is not None:
        # The end facet marks the last slot the event overlaps, so a
        # boundary end (e.g. 00:45:00) closes the slot before it.
        marker = event.end - _MICRO
        if marker.date() == date:
            end_slot = slot_of(marker)
    return start_slot, end_slot, event_slots_on(event, date, default_duration)


def encode_block_c(events, date, manifest, default_duration=DEFAULT_EVENT_DURATION):
    """Per event station: 96-slot start/end/period count vectors for `date`."""
    e = len(manifest.event_stations)
    station_offset = {s: i * 3 * N_SLOTS for i, s in enumerate(manifest.event_stations)}
    vec = np.zeros(N_SLOTS * 3 * e)
    for event in events:
        off = station_offset.get(event.station_id)
        if off is None:
            raise ValueError(
                f"event at station {event.station_id!r} which is not flagged hosts_events"
            )
        _add_event(vec, off, event, date, default_duration)
    return vec


def encode_block_d(events, date, manifest, default_duration=DEFAULT_EVENT_DURATION):
    """Block-C encoding broken out per event category.

    Layout nests station, then category, then facet, then slot, so the
    category-sum of this block reproduces block C elementwise.
    """
    e = len(manifest.event_stations)
    k = len(manifest.categories)
    station_index = {s: i for i, s in enumerate(manifest.event_stations)}
    category_index = {c: i for i, c in enumerate(manifest.categories)}
    vec = np.zeros(N_SLOTS * 3 * e * k)
    for event in events:
        si = station_index.get(event.station_id)
        if si is None:
            raise ValueError(
                f"event at station {event.station_id!r} which is not flagged hosts_events"
            )
        ci = category_index.get(event.category)
        if ci is None:
            raise ValueError(f"unknown event category: {event.category!r}")
        off = (si * k + ci) * 3 * N_SLOTS
        _add_event(vec, off, event, date, default_duration)
    return vec


def _add_event(vec, offset, event, date, default_duration):
    start_slot, end_slot, period = _facet_marks(event, date, default_duration)
    if start_slot is not None:
        vec[offset + start_slot] += 1
    if end_slot is not None:
        vec[offset + N_SLOTS + end_slot] += 1
    for t in period:
        vec[offset + 2 * N_SLOTS + t] += 1


def column_names(set_id, manifest):
    names = []
    blocks = feature_set_blocks(set_id)
    if "A" in blocks:
        names += [f"A:month:{m}" for m in MONTH_LABELS]
        names += [f"A:dow:{d}" for d in DOW_LABELS]
    if "B" in blocks:
        names += [f"B:{flag}" for flag in B_FLAGS]
    if "C" in blocks:
        for station in manifest.event_stations:
            for facet in FACETS:
                names += [f"C:{station}:{facet}:{t:02d}" for t in range(N_SLOTS)]
    if "D" in blocks:
        for station in manifest.event_stations:
            for category in manifest.categories:
                for facet in FACETS:
                    names += [
                        f"D:{station}:{category}:{facet}:{t:02d}" for t in range(N_SLOTS)
                    ]
    return names


@dataclass
class FeatureMatrix:
    """Per-day feature rows shared by every station's model."""

    set_id: str
    values: np.ndarray  # (n_days, width) float64
    columns: list
    dates: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if self.values.shape != (len(self.dates), len(self.columns)):
            raise ValueError(
                f"shape {self.values.shape} != ({len(self.dates)}, {len(self.columns)})"
            )

    @property
    def width(self):
        return self.values.shape[1]

    def subset(self, dates):
        index = {d: i for i, d in enumerate(self.dates)}
        try:
            rows = [index[d] for d in dates]
        except KeyError as exc:
            raise KeyError(f"date not in feature matrix: {exc.args[0]}") from None
        return FeatureMatrix(self.set_id, self.values[rows], self.columns, list(dates))

    def save(self, outdir):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        np.save(outdir / "matrix.npy", self.values)
        meta = {
            "set_id": self.set_id,
            "columns": self.columns,
            "dates": [d.isoformat() for d in self.dates],
        }
        with open(outdir / "meta.json", "w") as fh:
            json.dump(meta, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, indir):
        indir = Path(indir)
        with open(indir / "meta.json") as fh:
            meta = json.load(fh)
        return cls(
            set_id=meta["set_id"],
            values=np.load(indir / "matrix.npy"),
            columns=list(meta["columns"]),
            dates=[dt.date.fromisoformat(d) for d in meta["dates"]],
        )


def build_design_matrix(
    calendar,
    events,
    manifest: NetworkManifest,
    date_range: DateRange,
    set_id,
    default_duration=DEFAULT_EVENT_DURATION,
):
    """One feature row per date in range, blocks concatenated A,B,C,D.

    The same matrix serves every station and fare class; only the target
    vectors differ.  Events are bucketed by date once so each row only
    touches the events overlapping it.
    """
    blocks = feature_set_blocks(set_id)
    by_date = {day.date: day for day in calendar}
    dates = date_range.dates()
    missing = [d for d in dates if d not in by_date]
    if missing:
        raise ValueError(f"date missing from calendar: {missing[0]}")

    events_by_date = {}
    if "C" in blocks or "D" in blocks:
        for event in events:
            for d in event_dates(event, default_duration):
                events_by_date.setdefault(d, []).append(event)

    rows = []
    for d in dates:
        parts = []
        if "A" in blocks:
            parts.append(encode_block_a(d))
        if "B" in blocks:
            parts.append(encode_block_b(by_date[d]))
        todays = events_by_date.get(d, [])
        if "C" in blocks:
            parts.append(encode_block_c(todays, d, manifest, default_duration))
        if "D" in blocks:
            parts.append(encode_block_d(todays, d, manifest, default_duration))
        rows.append(np.concatenate(parts))
    return FeatureMatrix(
        set_id=set_id,
        values=np.vstack(rows),
        columns=column_names(set_id, manifest),
        dates=dates,
    )
