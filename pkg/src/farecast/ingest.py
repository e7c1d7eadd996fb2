"""Parsing of ticketing logs, event calendars and day-type calendars,
plus aggregation of ticketing rows into daily 96-slot demand vectors.

CSV schemas:
    ticketing: station_id,date,slot,fare_class,count      (date YYYY-MM-DD, slot 0-95)
    events:    station_id,start,end,category               (timestamps YYYY-MM-DD HH:MM:SS, end may be empty)
    calendar:  date,holiday,dec24,dec31,christmas_school_holiday,summer_uni_1,summer_uni_2,renovation

The network manifest is a JSON file listing stations (with a hosts_events
flag whose order fixes the event-feature block layout), the ordered event
category vocabulary and, optionally, the fare-class vocabulary.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

N_SLOTS = 96
DEFAULT_FARE_CLASSES = ("SMP", "RMP", "BT", "OP")
ALL_CLASS = "ALL"

B_FLAGS = (
    "holiday",
    "dec24",
    "dec31",
    "christmas_school_holiday",
    "summer_uni_1",
    "summer_uni_2",
    "renovation",
)

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


class ParseError(ValueError):
    """Raised for malformed input rows; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = f"{path or '<input>'}:{line}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class DateRange:
    """Inclusive range of calendar dates."""

    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"empty date range: {self.start} > {self.end}")

    def __len__(self):
        return (self.end - self.start).days + 1

    def __contains__(self, d):
        return self.start <= d <= self.end

    def dates(self):
        return [self.start + dt.timedelta(days=i) for i in range(len(self))]

    def overlaps(self, other):
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class TicketingRecord:
    station_id: str
    date: dt.date
    slot: int
    fare_class: str
    count: int

    def __post_init__(self):
        if not 0 <= self.slot < N_SLOTS:
            raise ValueError(f"slot out of range: {self.slot}")
        if self.count < 0:
            raise ValueError(f"negative count: {self.count}")


@dataclass(frozen=True)
class EventRecord:
    station_id: str
    start: dt.datetime
    end: dt.datetime | None
    category: str

    def __post_init__(self):
        if self.end is not None and self.end <= self.start:
            raise ValueError(f"end before start: {self.end} <= {self.start}")


@dataclass(frozen=True)
class CalendarDay:
    date: dt.date
    holiday: bool = False
    dec24: bool = False
    dec31: bool = False
    christmas_school_holiday: bool = False
    summer_uni_1: bool = False
    summer_uni_2: bool = False
    renovation: bool = False

    def __post_init__(self):
        if self.dec24 and (self.date.month, self.date.day) != (12, 24):
            raise ValueError(f"dec24 flag set on {self.date}")
        if self.dec31 and (self.date.month, self.date.day) != (12, 31):
            raise ValueError(f"dec31 flag set on {self.date}")

    def flag_vector(self):
        return np.array([float(getattr(self, name)) for name in B_FLAGS])


@dataclass
class DailyDemand:
    """Entries per 15-minute slot for one (station, date, fare class)."""

    station_id: str
    date: dt.date
    fare_class: str
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_SLOTS,):
            raise ValueError(f"counts must have {N_SLOTS} slots, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("negative counts")


@dataclass(frozen=True)
class NetworkManifest:
    """Station list, event-hosting subset and category vocabulary.

    The order of `event_stations` (hosts_events stations in station-list
    order) fixes the layout of the C and D feature blocks.
    """

    stations: tuple
    event_stations: tuple
    categories: tuple
    fare_classes: tuple = DEFAULT_FARE_CLASSES

    @classmethod
    def from_dict(cls, raw):
        stations = []
        event_stations = []
        for entry in raw["stations"]:
            if isinstance(entry, str):
                entry = {"id": entry}
            stations.append(entry["id"])
            if entry.get("hosts_events"):
                event_stations.append(entry["id"])
        return cls(
            stations=tuple(stations),
            event_stations=tuple(event_stations),
            categories=tuple(raw["categories"]),
            fare_classes=tuple(raw.get("fare_classes", DEFAULT_FARE_CLASSES)),
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        hosting = set(self.event_stations)
        return {
            "stations": [
                {"id": s, "hosts_events": s in hosting} for s in self.stations
            ],
            "categories": list(self.categories),
            "fare_classes": list(self.fare_classes),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _open_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", path=path, line=1) from None
        if [h.strip() for h in header] != list(expected_header):
            raise ParseError(
                f"unexpected header {header!r}, expected {list(expected_header)!r}",
                path=path,
                line=1,
            )
        yield from ((lineno, row) for lineno, row in enumerate(reader, start=2))


def parse_ticketing_csv(path, fare_classes=DEFAULT_FARE_CLASSES):
    """Parse a ticketing CSV into records, summing duplicate keys.

    Raw AFC exports commonly shard by turnstile, so several rows may share
    one (station, date, slot, fare_class) key; their counts are added.
    Records are returned in first-appearance order of the key.
    """
    vocab = set(fare_classes) | {ALL_CLASS}
    totals = {}
    rows = _open_rows(path, ("station_id", "date", "slot", "fare_class", "count"))
    for lineno, row in rows:
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", path=path, line=lineno)
        station, date_s, slot_s, fare, count_s = (f.strip() for f in row)
        try:
            date = dt.date.fromisoformat(date_s)
            slot = int(slot_s)
            count = int(count_s)
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        if not 0 <= slot < N_SLOTS:
            raise ParseError(f"slot out of range: {slot}", path=path, line=lineno)
        if count < 0:
            raise ParseError(f"negative count: {count}", path=path, line=lineno)
        if fare not in vocab:
            raise ParseError(f"unknown fare class: {fare!r}", path=path, line=lineno)
        key = (station, date, slot, fare)
        totals[key] = totals.get(key, 0) + count
    return [
        TicketingRecord(station_id=s, date=d, slot=t, fare_class=c, count=n)
        for (s, d, t, c), n in totals.items()
    ]


def parse_events_csv(path):
    """Parse an events CSV; an empty end column yields an open-ended event."""
    events = []
    rows = _open_rows(path, ("station_id", "start", "end", "category"))
    for lineno, row in rows:
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", path=path, line=lineno)
        station, start_s, end_s, category = (f.strip() for f in row)
        try:
            start = dt.datetime.strptime(start_s, TIMESTAMP_FORMAT)
            end = dt.datetime.strptime(end_s, TIMESTAMP_FORMAT) if end_s else None
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        if end is not None and end <= start:
            raise ParseError(f"end before start: {end_s}", path=path, line=lineno)
        events.append(EventRecord(station_id=station, start=start, end=end, category=category))
    return events


def parse_calendar_csv(path):
    """Parse a day-type calendar CSV with one row of 0/1 flags per date."""
    header = ("date",) + B_FLAGS
    days = []
    seen = set()
    for lineno, row in _open_rows(path, header):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(row)}", path=path, line=lineno
            )
        try:
            date = dt.date.fromisoformat(row[0].strip())
            flags = [_parse_flag(f) for f in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        if date in seen:
            raise ParseError(f"duplicate calendar date: {date}", path=path, line=lineno)
        seen.add(date)
        try:
            days.append(CalendarDay(date, *flags))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    return days


def _parse_flag(text):
    if text.strip() not in ("0", "1"):
        raise ValueError(f"flag must be 0 or 1, got {text!r}")
    return text.strip() == "1"


@dataclass
class DemandSet:
    """Daily demand vectors for every (station, date, fare class) in range.

    Dense over the cartesian product of stations, dates and classes; the
    synthesized ALL class is the slot-wise sum of the per-class vectors.
    """

    stations: tuple
    classes: tuple  # fare classes, ALL last
    date_range: DateRange
    counts: np.ndarray  # (n_stations, n_classes, n_days, 96) int64
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        expected = (len(self.stations), len(self.classes), len(self.date_range), N_SLOTS)
        if self.counts.shape != expected:
            raise ValueError(f"counts shape {self.counts.shape} != {expected}")
        self._station_index = {s: i for i, s in enumerate(self.stations)}
        self._class_index = {c: i for i, c in enumerate(self.classes)}

    def __iter__(self):
        dates = self.date_range.dates()
        for si, station in enumerate(self.stations):
            for ci, cls in enumerate(self.classes):
                for di, d in enumerate(dates):
                    yield DailyDemand(station, d, cls, self.counts[si, ci, di])

    def vector(self, station, fare_class, date):
        di = (date - self.date_range.start).days
        if not 0 <= di < len(self.date_range):
            raise KeyError(f"date out of range: {date}")
        return self.counts[self._station_index[station], self._class_index[fare_class], di]

    def target_matrix(self, station, fare_class, dates=None):
        """Stacked (n_days, 96) float matrix, the regression target Y."""
        si = self._station_index[station]
        ci = self._class_index[fare_class]
        if dates is None:
            return self.counts[si, ci].astype(float)
        rows = [(d - self.date_range.start).days for d in dates]
        for d, r in zip(dates, rows):
            if not 0 <= r < len(self.date_range):
                raise KeyError(f"date out of range: {d}")
        return self.counts[si, ci, rows].astype(float)

    def save(self, outdir):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        np.save(outdir / "counts.npy", self.counts)
        meta = {
            "stations": list(self.stations),
            "classes": list(self.classes),
            "start": self.date_range.start.isoformat(),
            "end": self.date_range.end.isoformat(),
            "warnings": list(self.warnings),
        }
        with open(outdir / "meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, indir):
        indir = Path(indir)
        with open(indir / "meta.json") as fh:
            meta = json.load(fh)
        counts = np.load(indir / "counts.npy")
        return cls(
            stations=tuple(meta["stations"]),
            classes=tuple(meta["classes"]),
            date_range=DateRange(
                dt.date.fromisoformat(meta["start"]), dt.date.fromisoformat(meta["end"])
            ),
            counts=counts,
            warnings=list(meta["warnings"]),
        )


def aggregate_daily(records, stations, date_range, fare_classes=DEFAULT_FARE_CLASSES):
    """Aggregate ticketing records into dense daily demand vectors.

    Records outside the station list or date range are ignored.  Missing
    (station, date) pairs yield zero vectors so design matrices stay dense
    and date-aligned across stations; stations with no data at all are
    reported in the result's warnings rather than raising.
    """
    stations = tuple(stations)
    classes = tuple(fare_classes) + (ALL_CLASS,)
    station_index = {s: i for i, s in enumerate(stations)}
    class_index = {c: i for i, c in enumerate(fare_classes)}
    n_days = len(date_range)
    counts = np.zeros((len(stations), len(classes), n_days, N_SLOTS), dtype=np.int64)

    for rec in records:
        si = station_index.get(rec.station_id)
        if si is None or rec.date not in date_range:
            continue
        di = (rec.date - date_range.start).days
        if rec.fare_class == ALL_CLASS:
            raise ValueError(
                "ticketing records must be per fare class; ALL is synthesized"
            )
        counts[si, class_index[rec.fare_class], di, rec.slot] += rec.count

    counts[:, -1] = counts[:, :-1].sum(axis=1)

    warnings = []
    for si, station in enumerate(stations):
        if counts[si].sum() == 0:
            warnings.append(f"station {station}: no ticketing data in range")
    if warnings:
        logger.warning("aggregate_daily: %d station(s) with zero coverage", len(warnings))
    return DemandSet(
        stations=stations,
        classes=classes,
        date_range=date_range,
        counts=counts,
        warnings=warnings,
    )
